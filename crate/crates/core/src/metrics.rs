//! Reconstruction error, simplicity, AEP, tolerance F1 and bulls-eye score.

use std::collections::{BTreeSet, HashMap};
use std::hash::Hash;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::graph::shortest_paths;
use crate::mask::BinaryMask;
use crate::skeleton::SkeletonRaster;

/// Union of the open discs `|p - s| < r(s)` over all skeleton points.
///
/// Radii come from the distance transform, where `r(s)` is the distance to
/// the nearest background pixel, so the open disc is exactly the foreground
/// the disc certifies.
pub fn reconstruct(skeleton: &SkeletonRaster) -> Result<BinaryMask> {
    let mut out = BinaryMask::new(skeleton.width().max(1), skeleton.height().max(1));
    for &s in skeleton.points() {
        let r = skeleton.radius(s).ok_or(Error::MissingRadii(s))?;
        let r2 = r * r - 1e-9;
        let reach = r.ceil() as i32;
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let p = s.offset(dx, dy);
                if ((dx * dx + dy * dy) as f64) < r2 && out.in_bounds(p) {
                    out.set(p, true);
                }
            }
        }
    }
    Ok(out)
}

fn check_shape(skeleton: &SkeletonRaster, shape: &BinaryMask) -> Result<()> {
    if skeleton.width() != shape.width() || skeleton.height() != shape.height() {
        return Err(Error::DimensionMismatch(format!(
            "skeleton is {}x{}, shape is {}x{}",
            skeleton.width(),
            skeleton.height(),
            shape.width(),
            shape.height()
        )));
    }
    if shape.is_empty() {
        return Err(Error::EmptyShape);
    }
    Ok(())
}

/// `|area(shape) - area(R)| / area(shape)`.
pub fn reconstruction_error(skeleton: &SkeletonRaster, shape: &BinaryMask) -> Result<f64> {
    check_shape(skeleton, shape)?;
    let r = reconstruct(skeleton)?;
    let a = shape.area() as f64;
    Ok((a - r.area() as f64).abs() / a)
}

/// Symmetric-difference variant `area(shape xor R) / area(shape)`. A
/// diagnostic only: it also counts reconstruction outside the shape.
pub fn re_xor(skeleton: &SkeletonRaster, shape: &BinaryMask) -> Result<f64> {
    check_shape(skeleton, shape)?;
    let r = reconstruct(skeleton)?;
    Ok(shape.xor_area(&r) as f64 / shape.area() as f64)
}

/// Normalised curve length: point count over the mean pixel count of the
/// geodesic paths joining connected endpoint pairs. Without such a pair the
/// mean is the point count itself.
pub fn gamma(skeleton: &SkeletonRaster) -> f64 {
    let n = skeleton.len();
    if n == 0 {
        return 0.0;
    }
    let endpoints = skeleton.endpoints();
    let mut total = 0usize;
    let mut pairs = 0usize;
    for (i, &a) in endpoints.iter().enumerate() {
        let tree = shortest_paths(skeleton, a);
        for &b in &endpoints[i + 1..] {
            if let Some(c) = tree.cost(b) {
                total += c.pixels();
                pairs += 1;
            }
        }
    }
    let mean = if pairs == 0 { n as f64 } else { total as f64 / pairs as f64 };
    n as f64 / mean
}

/// `exp(-log(gamma + 1)) = 1 / (gamma + 1)`.
pub fn simplicity(skeleton: &SkeletonRaster) -> f64 {
    1.0 / (gamma(skeleton) + 1.0)
}

/// Mean distance from each detected point to its nearest ground-truth point.
pub fn aep(detected: &SkeletonRaster, gt: &SkeletonRaster) -> Result<f64> {
    if detected.is_empty() || gt.is_empty() {
        return Err(Error::EmptySkeleton);
    }
    let gt_points: Vec<Point> = gt.points().iter().copied().collect();
    let total: f64 = detected
        .points()
        .iter()
        .map(|&p| gt_points.iter().map(|&q| p.dist2(q)).min().expect("non-empty") as f64)
        .map(f64::sqrt)
        .sum();
    Ok(total / detected.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct F1Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Conventional tolerance: 0.0075 of the image diagonal.
pub fn default_tolerance(width: usize, height: usize) -> f64 {
    0.0075 * ((width * width + height * height) as f64).sqrt()
}

/// Greedy one-to-one matching of detected and ground-truth points within
/// `tolerance`, closest pairs first.
pub fn f1_score(detected: &SkeletonRaster, gt: &SkeletonRaster, tolerance: f64) -> F1Score {
    let matched = match_count(detected.points(), gt.points(), tolerance);
    let precision = if detected.is_empty() { 0.0 } else { matched as f64 / detected.len() as f64 };
    let recall = if gt.is_empty() { 0.0 } else { matched as f64 / gt.len() as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    F1Score { precision, recall, f1 }
}

fn match_count(detected: &BTreeSet<Point>, gt: &BTreeSet<Point>, tolerance: f64) -> usize {
    if detected.is_empty() || gt.is_empty() || !(tolerance >= 0.0) {
        return 0;
    }
    let reach = tolerance.floor() as i64;
    let tol2 = tolerance * tolerance;
    let mut pairs: Vec<(i64, Point, Point, Point, Point)> = Vec::new();
    let window = (2 * reach + 1) * (2 * reach + 1);
    for &a in detected {
        let mut consider = |b: Point| {
            let d2 = a.dist2(b);
            if d2 as f64 <= tol2 {
                pairs.push((d2, a.min(b), a.max(b), a, b));
            }
        };
        if window < gt.len() as i64 {
            let r = reach as i32;
            for dy in -r..=r {
                for dx in -r..=r {
                    let b = a.offset(dx, dy);
                    if gt.contains(&b) {
                        consider(b);
                    }
                }
            }
        } else {
            gt.iter().copied().for_each(&mut consider);
        }
    }
    // the key is symmetric in the two roles, so swapping the inputs mirrors
    // the matching
    pairs.sort_by_key(|&(d2, lo, hi, _, _)| (d2, lo, hi));
    let mut used_a: BTreeSet<Point> = BTreeSet::new();
    let mut used_b: BTreeSet<Point> = BTreeSet::new();
    let mut matched = 0;
    for (_, _, _, a, b) in pairs {
        if !used_a.contains(&a) && !used_b.contains(&b) {
            used_a.insert(a);
            used_b.insert(b);
            matched += 1;
        }
    }
    matched
}

/// Bulls-eye retrieval score in percent.
///
/// Each query ranks every item, itself included, by descending similarity
/// (ties by ascending index) and counts same-class items among the first
/// `2 * per_class`. The total is divided by `n * per_class`, the number of
/// possible matches.
pub fn bulls_eye<L: Eq + Hash>(similarity: &[Vec<f64>], labels: &[L], per_class: usize) -> Result<f64> {
    let n = similarity.len();
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!("{n} rows but {} labels", labels.len())));
    }
    if let Some((i, row)) = similarity.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::DimensionMismatch(format!("row {i} has {} columns, expected {n}", row.len())));
    }
    if per_class == 0 || n == 0 {
        return Err(Error::DimensionMismatch("per_class and item count must be positive".into()));
    }
    let mut sizes: HashMap<&L, usize> = HashMap::new();
    for l in labels {
        *sizes.entry(l).or_default() += 1;
    }
    if sizes.values().any(|&s| s != per_class) {
        return Err(Error::DimensionMismatch(format!("every class must have {per_class} members")));
    }
    let window = (2 * per_class).min(n);
    let mut hits = 0usize;
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for (q, row) in similarity.iter().enumerate() {
        order.clear();
        order.extend(0..n);
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        hits += order[..window].iter().filter(|&&j| labels[j] == labels[q]).count();
    }
    Ok(hits as f64 / (n * per_class) as f64 * 100.0)
}

/// Reads an `n x n` similarity matrix from a header-less CSV file.
pub fn load_similarity_csv(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let decode = |message: String| Error::Decode {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| decode(e.to_string()))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| decode(e.to_string()))?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| decode(format!("{f:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(format!("similarity matrix is not {n}x{n}")));
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub re: f64,
    pub ss: f64,
    pub point_count: usize,
    pub endpoint_count: usize,
    pub junction_count: usize,
}

impl MetricReport {
    pub fn compute(skeleton: &SkeletonRaster, shape: &BinaryMask) -> Result<MetricReport> {
        let re = reconstruction_error(skeleton, shape)?.clamp(0.0, 1.0);
        Ok(MetricReport {
            re,
            ss: simplicity(skeleton),
            point_count: skeleton.len(),
            endpoint_count: skeleton.endpoints().len(),
            junction_count: skeleton.junctions().len(),
        })
    }
}

/// Class label of a dataset file stem: trailing digits removed, then one
/// trailing `-` or `_`.
pub fn class_label(stem: &str) -> String {
    let trimmed = stem.trim_end_matches(|c: char| c.is_ascii_digit());
    let trimmed = trimmed.strip_suffix(['-', '_']).unwrap_or(trimmed);
    if trimmed.is_empty() {
        stem.to_string()
    } else {
        trimmed.to_string()
    }
}

/// Mean of `(re, ss)` pairs, or `None` when empty.
pub fn mean_re_ss(rows: &[(f64, f64)]) -> Option<(f64, f64)> {
    if rows.is_empty() {
        return None;
    }
    let n = rows.len() as f64;
    let (re, ss) = rows.iter().fold((0.0, 0.0), |(a, b), &(r, s)| (a + r, b + s));
    Some((re / n, ss / n))
}
