//! Candidate ladder: the full medial axis followed by progressively pruned
//! skeletons, one per DCE vertex count from `k_max - 1` down to `k_min`.
//!
//! Each branch tip is tied to the contour point nearest to it. At level `k`
//! every surviving DCE vertex dominates the part of the contour closer to it
//! than to any other survivor and claims the tip there that lies closest to
//! it. Leaf branches with unclaimed tips are cut, so a level keeps at most
//! `k` endpoints.

use std::collections::{BTreeMap, BTreeSet};

use log::debug;
use serde::{Deserialize, Serialize};

use crate::contour::trace_boundary;
use crate::dce::DceSchedule;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::graph::{decompose, drop_redundant, SkeletonGraph};
use crate::mask::BinaryMask;
use crate::skeleton::{medial_axis, SkeletonRaster};

pub const DEFAULT_K_MIN: usize = 4;
pub const DEFAULT_K_MAX: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LadderOptions {
    pub k_min: usize,
    pub k_max: usize,
    pub fill_holes: bool,
}

impl Default for LadderOptions {
    fn default() -> Self {
        LadderOptions {
            k_min: DEFAULT_K_MIN,
            k_max: DEFAULT_K_MAX,
            fill_holes: true,
        }
    }
}

impl LadderOptions {
    pub fn validate(&self) -> Result<()> {
        if self.k_min < 3 || self.k_max < self.k_min {
            return Err(Error::InvalidRange {
                k_min: self.k_min,
                k_max: self.k_max,
            });
        }
        Ok(())
    }
}

/// Skeleton candidates from most complex (step 0) to simplest.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateLadder {
    /// The mask the skeletons were computed on (holes filled unless kept).
    pub shape: BinaryMask,
    pub options: LadderOptions,
    pub steps: Vec<SkeletonRaster>,
    /// DCE vertex count of each step. Step 0 is the unpruned axis and carries
    /// `k_max`.
    pub dce_k: Vec<usize>,
}

impl CandidateLadder {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn step(&self, i: usize) -> Option<&SkeletonRaster> {
        self.steps.get(i)
    }

    pub fn last(&self) -> &SkeletonRaster {
        self.steps.last().expect("ladder has at least one step")
    }
}

pub fn build_ladder(mask: &BinaryMask, k_min: usize, k_max: usize) -> Result<CandidateLadder> {
    build_ladder_with(
        mask,
        LadderOptions {
            k_min,
            k_max,
            ..LadderOptions::default()
        },
    )
}

pub fn build_ladder_with(mask: &BinaryMask, options: LadderOptions) -> Result<CandidateLadder> {
    options.validate()?;
    let shape = if options.fill_holes { mask.fill_holes() } else { mask.clone() };
    let contour = trace_boundary(&shape)?;
    let schedule = DceSchedule::new(&contour, options.k_min)?;
    let full = medial_axis(&shape)?;

    let mut steps = vec![full.clone()];
    let mut dce_k = vec![options.k_max];
    let mut current = full;
    for k in (options.k_min..options.k_max).rev() {
        let alive: Vec<usize> = schedule.vertices_at(k);
        current = prune_to_vertices(&current, &contour.points, &alive);
        debug!("ladder k={k}: {} points", current.len());
        steps.push(current.clone());
        dce_k.push(k);
    }
    Ok(CandidateLadder {
        shape,
        options,
        steps,
        dce_k,
    })
}

/// Contour index nearest to `p`, smallest index on ties.
fn nearest_index(contour: &[Point], p: Point) -> usize {
    (0..contour.len()).min_by_key(|&i| (contour[i].dist2(p), i)).expect("non-empty contour")
}

fn cyclic_distance(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

/// Endpoints claimed by the surviving vertices `alive`.
///
/// Every endpoint tip falls in the contour arc of the surviving vertex
/// nearest to it along the contour (ties to the smaller vertex index); each
/// vertex claims the tip in its arc closest to it.
fn claimed_endpoints(graph: &SkeletonGraph, contour: &[Point], alive: &[usize]) -> BTreeSet<Point> {
    let n = contour.len();
    let mut best: BTreeMap<usize, (usize, Point)> = BTreeMap::new();
    for e in graph.endpoints() {
        let t = nearest_index(contour, e);
        let owner = alive
            .iter()
            .copied()
            .min_by_key(|&v| (cyclic_distance(v, t, n), v))
            .expect("at least k_min vertices survive");
        let d = cyclic_distance(owner, t, n);
        let entry = best.entry(owner).or_insert((d, e));
        if (d, e) < *entry {
            *entry = (d, e);
        }
    }
    best.into_values().map(|(_, e)| e).collect()
}

/// Prunes leaf branches whose endpoint no surviving vertex claims, shortest
/// first, re-decomposing after every cut.
fn prune_to_vertices(skeleton: &SkeletonRaster, contour: &[Point], alive: &[usize]) -> SkeletonRaster {
    let mut current = skeleton.clone();
    loop {
        let graph = decompose(&current);
        let claimed = claimed_endpoints(&graph, contour, alive);
        let victim = graph
            .leaf_branches()
            .into_iter()
            .filter(|b| {
                let (a, z) = b.terminals().expect("leaf is open");
                let tip = if graph.raster().degree(a) == 1 { a } else { z };
                !claimed.contains(&tip)
            })
            .min_by(|a, b| a.length.total_cmp(&b.length).then(a.id.cmp(&b.id)));
        let Some(victim) = victim else {
            return current;
        };
        let (a, z) = victim.terminals().expect("leaf is open");
        let junction = if graph.raster().degree(a) == 1 { z } else { a };
        let remove: BTreeSet<Point> = victim.path.iter().copied().filter(|&p| p != junction).collect();
        current = drop_redundant(&current.retain(|p| !remove.contains(&p)), [junction]);
    }
}
