//! Integration of several annotators' skeletons for one shape: the most
//! voted skeleton, else the median reconstruction error, else a branch union.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::graph::shortest_paths;
use crate::mask::BinaryMask;
use crate::metrics::reconstruction_error;
use crate::skeleton::SkeletonRaster;

#[derive(Clone, Debug, PartialEq)]
pub struct AnnotatorSubmission {
    pub annotator_id: String,
    pub skeleton: SkeletonRaster,
    /// Reconstruction error of `skeleton` against the shape.
    pub re: f64,
}

impl AnnotatorSubmission {
    pub fn new(annotator_id: impl Into<String>, skeleton: SkeletonRaster, shape: &BinaryMask) -> Result<Self> {
        let re = reconstruction_error(&skeleton, shape)?;
        Ok(AnnotatorSubmission {
            annotator_id: annotator_id.into(),
            skeleton,
            re,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rationale {
    /// A single skeleton had strictly more votes than any other.
    MaxVotes { votes: usize },
    /// Median RE among the distinct skeletons; `lower_median` is set when
    /// their number is even.
    MedianError { re: f64, distinct: usize, lower_median: bool },
    /// Two distinct skeletons tied on votes: their branches were merged.
    BranchUnion { distinct: usize },
}

impl std::fmt::Display for Rationale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rationale::MaxVotes { votes } => write!(f, "max_votes({votes})"),
            Rationale::MedianError { distinct, lower_median, .. } => {
                if *lower_median {
                    write!(f, "median_error(lower, {distinct} distinct)")
                } else {
                    write!(f, "median_error({distinct} distinct)")
                }
            }
            Rationale::BranchUnion { distinct } => write!(f, "branch_union({distinct} distinct)"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Integration {
    pub skeleton: SkeletonRaster,
    pub rationale: Rationale,
    /// Annotators whose submission equals the chosen skeleton.
    pub supporters: Vec<String>,
}

/// Duplicate counts keyed by the skeleton digest.
pub fn hints(submissions: &[AnnotatorSubmission]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for s in submissions {
        *counts.entry(s.skeleton.digest()).or_insert(0) += 1;
    }
    counts
}

struct Group<'a> {
    digest: String,
    votes: usize,
    first: &'a AnnotatorSubmission,
}

fn groups(submissions: &[AnnotatorSubmission]) -> Vec<Group<'_>> {
    let mut by_digest: BTreeMap<String, Group<'_>> = BTreeMap::new();
    for s in submissions {
        let digest = s.skeleton.digest();
        by_digest
            .entry(digest.clone())
            .and_modify(|g| g.votes += 1)
            .or_insert(Group {
                digest,
                votes: 1,
                first: s,
            });
    }
    by_digest.into_values().collect()
}

/// Chooses the consensus skeleton. `superset` is the common step-0 skeleton
/// used to reconnect a branch union; without it the union of the
/// submissions serves.
pub fn integrate(
    submissions: &[AnnotatorSubmission],
    shape: &BinaryMask,
    superset: Option<&SkeletonRaster>,
) -> Result<Integration> {
    if submissions.is_empty() {
        return Err(Error::NoSubmissions);
    }
    let groups = groups(submissions);
    let top = groups.iter().map(|g| g.votes).max().expect("non-empty");
    let leaders: Vec<&Group<'_>> = groups.iter().filter(|g| g.votes == top).collect();

    let (skeleton, rationale) = if leaders.len() == 1 {
        (leaders[0].first.skeleton.clone(), Rationale::MaxVotes { votes: top })
    } else if groups.len() >= 3 {
        let mut ranked: Vec<(f64, &str, &SkeletonRaster)> = groups
            .iter()
            .map(|g| Ok((reconstruction_error(&g.first.skeleton, shape)?, g.digest.as_str(), &g.first.skeleton)))
            .collect::<Result<_>>()?;
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
        let n = ranked.len();
        let pick = if n % 2 == 1 { n / 2 } else { n / 2 - 1 };
        (
            ranked[pick].2.clone(),
            Rationale::MedianError {
                re: ranked[pick].0,
                distinct: n,
                lower_median: n.is_multiple_of(2),
            },
        )
    } else {
        let merged = merge_branches(submissions, superset)?;
        (merged, Rationale::BranchUnion { distinct: groups.len() })
    };
    let supporters = submissions
        .iter()
        .filter(|s| s.skeleton.points() == skeleton.points())
        .map(|s| s.annotator_id.clone())
        .collect();
    Ok(Integration {
        skeleton,
        rationale,
        supporters,
    })
}

/// Union of the submitted skeletons, all of which must be prunings of
/// `superset`. If the union falls apart it is reconnected along superset
/// paths.
pub fn merge_branches(
    submissions: &[AnnotatorSubmission],
    superset: Option<&SkeletonRaster>,
) -> Result<SkeletonRaster> {
    let first = submissions.first().ok_or(Error::NoSubmissions)?;
    let (w, h) = (first.skeleton.width(), first.skeleton.height());
    let mut union: BTreeSet<Point> = BTreeSet::new();
    for s in submissions {
        if s.skeleton.width() != w || s.skeleton.height() != h {
            return Err(Error::IncompatibleLadders(format!(
                "annotator {} submitted a {}x{} skeleton, expected {w}x{h}",
                s.annotator_id,
                s.skeleton.width(),
                s.skeleton.height()
            )));
        }
        if let Some(sup) = superset {
            if !s.skeleton.is_subset_of(sup) {
                return Err(Error::IncompatibleLadders(format!(
                    "skeleton of annotator {} is not a pruning of the common candidate",
                    s.annotator_id
                )));
            }
        }
        union.extend(s.skeleton.points().iter().copied());
    }
    let radii: BTreeMap<Point, f64> = match superset {
        Some(sup) => sup.radii().clone(),
        None => submissions
            .iter()
            .flat_map(|s| s.skeleton.radii().iter().map(|(&p, &r)| (p, r)))
            .collect(),
    };
    let mut merged = SkeletonRaster::from_points(w, h, union.iter().copied()).with_radii(radii);
    if let Some(sup) = superset {
        merged = reconnect(&merged, sup);
    }
    Ok(merged)
}

/// Joins the components of `part` with shortest paths through `whole`.
fn reconnect(part: &SkeletonRaster, whole: &SkeletonRaster) -> SkeletonRaster {
    let mut points: BTreeSet<Point> = part.points().clone();
    loop {
        let comps = components(&points);
        if comps.len() <= 1 {
            break;
        }
        let tree = shortest_paths(whole, *comps[0].iter().next().expect("non-empty"));
        let target = comps[1..]
            .iter()
            .flat_map(|c| c.iter().copied())
            .filter_map(|p| tree.cost(p).map(|c| (c, p)))
            .min();
        match target.and_then(|(_, p)| tree.path_to(p)) {
            Some(path) => points.extend(path),
            None => break,
        }
    }
    whole.retain(|p| points.contains(&p))
}

fn components(points: &BTreeSet<Point>) -> Vec<BTreeSet<Point>> {
    let mut seen: BTreeSet<Point> = BTreeSet::new();
    let mut out = Vec::new();
    for &start in points {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            for q in p.neighbors8() {
                if points.contains(&q) && seen.insert(q) {
                    comp.insert(q);
                    queue.push_back(q);
                }
            }
        }
        out.push(comp);
    }
    out
}
