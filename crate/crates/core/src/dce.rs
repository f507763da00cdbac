//! Discrete curve evolution of closed contours.
//!
//! At every step the vertex with the lowest relevance
//! `K(v) = beta(v) * l1 * l2 / (l1 + l2)` is deleted, where `beta` is the
//! turn angle at `v` and `l1`, `l2` are the lengths of the two incident
//! polygon edges divided by the contour perimeter. Equal relevances go to the
//! lower contour index. Only the two neighbours of a deleted vertex change
//! relevance, so the evolution runs off an ordered set in `O(n log n)`.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::contour::Contour;
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Polygon at one stage of the evolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcePolygon {
    /// Contour indices of the surviving vertices, in contour order.
    pub indices: Vec<usize>,
    pub vertices: Vec<Point>,
    /// Relevance of each surviving vertex in the current polygon.
    pub relevance: Vec<f64>,
}

impl DcePolygon {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Turn angle in `[0, pi]` between the edges `prev -> v` and `v -> next`.
pub fn turn_angle(prev: Point, v: Point, next: Point) -> f64 {
    let a = ((v.x - prev.x) as f64, (v.y - prev.y) as f64);
    let b = ((next.x - v.x) as f64, (next.y - v.y) as f64);
    let cross = a.0 * b.1 - a.1 * b.0;
    let dot = a.0 * b.0 + a.1 * b.1;
    cross.abs().atan2(dot)
}

/// Relevance of `v` given its polygon neighbours; `scale` normalises edge
/// lengths (the contour perimeter). Degenerate vertices score 0.
pub fn relevance(prev: Point, v: Point, next: Point, scale: f64) -> f64 {
    let l1 = prev.dist(v) / scale;
    let l2 = v.dist(next) / scale;
    if l1 == 0.0 || l2 == 0.0 {
        return 0.0;
    }
    turn_angle(prev, v, next) * l1 * l2 / (l1 + l2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Evolution<'a> {
    points: &'a [Point],
    scale: f64,
    prev: Vec<usize>,
    next: Vec<usize>,
    alive: Vec<bool>,
    score: Vec<f64>,
    queue: BTreeSet<Key>,
    remaining: usize,
}

impl<'a> Evolution<'a> {
    fn new(contour: &'a Contour, k_min: usize) -> Result<Self> {
        let n = contour.len();
        if k_min < 3 || n < k_min {
            return Err(Error::ContourTooShort { len: n, k_min });
        }
        let points = &contour.points[..];
        let scale = contour.perimeter().max(f64::MIN_POSITIVE);
        let prev: Vec<usize> = (0..n).map(|i| (i + n - 1) % n).collect();
        let next: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
        let mut evo = Evolution {
            points,
            scale,
            prev,
            next,
            alive: vec![true; n],
            score: vec![0.0; n],
            queue: BTreeSet::new(),
            remaining: n,
        };
        for i in 0..n {
            let k = evo.compute(i);
            evo.score[i] = k;
            evo.queue.insert(Key(k, i));
        }
        Ok(evo)
    }

    fn compute(&self, i: usize) -> f64 {
        relevance(self.points[self.prev[i]], self.points[i], self.points[self.next[i]], self.scale)
    }

    fn refresh(&mut self, i: usize) {
        self.queue.remove(&Key(self.score[i], i));
        let k = self.compute(i);
        self.score[i] = k;
        self.queue.insert(Key(k, i));
    }

    /// Deletes the least relevant vertex and returns its contour index.
    fn remove_least(&mut self) -> usize {
        let Key(_, i) = self.queue.pop_first().expect("vertices remain");
        let (p, q) = (self.prev[i], self.next[i]);
        self.next[p] = q;
        self.prev[q] = p;
        self.alive[i] = false;
        self.remaining -= 1;
        self.refresh(p);
        self.refresh(q);
        i
    }

    fn snapshot(&self) -> DcePolygon {
        let indices: Vec<usize> = (0..self.points.len()).filter(|&i| self.alive[i]).collect();
        DcePolygon {
            vertices: indices.iter().map(|&i| self.points[i]).collect(),
            relevance: indices.iter().map(|&i| self.score[i]).collect(),
            indices,
        }
    }
}

/// Contour indices in the order DCE deletes them, stopping at `k_min`
/// survivors.
pub fn dce_removal_order(contour: &Contour, k_min: usize) -> Result<Vec<usize>> {
    let mut evo = Evolution::new(contour, k_min)?;
    let mut order = Vec::with_capacity(contour.len() - k_min);
    while evo.remaining > k_min {
        order.push(evo.remove_least());
    }
    Ok(order)
}

/// Every polygon of the evolution, from the full contour down to `k_min`
/// vertices.
pub fn dce_evolve(contour: &Contour, k_min: usize) -> Result<Vec<DcePolygon>> {
    let mut evo = Evolution::new(contour, k_min)?;
    let mut steps = vec![evo.snapshot()];
    while evo.remaining > k_min {
        evo.remove_least();
        steps.push(evo.snapshot());
    }
    Ok(steps)
}

/// Survivor flags per contour index for every vertex count from the full
/// contour down to `k_min`, derived from one evolution.
#[derive(Clone, Debug)]
pub struct DceSchedule {
    len: usize,
    /// Step at which each contour index is deleted; `usize::MAX` survives.
    removed_at: Vec<usize>,
}

impl DceSchedule {
    pub fn new(contour: &Contour, k_min: usize) -> Result<Self> {
        let order = dce_removal_order(contour, k_min)?;
        let mut removed_at = vec![usize::MAX; contour.len()];
        for (step, &i) in order.iter().enumerate() {
            removed_at[i] = step;
        }
        Ok(DceSchedule {
            len: contour.len(),
            removed_at,
        })
    }

    pub fn contour_len(&self) -> usize {
        self.len
    }

    /// Whether contour index `i` is still a vertex when `k` vertices remain.
    /// `k` above the contour length means the full contour.
    pub fn survives(&self, i: usize, k: usize) -> bool {
        let removed = self.len.saturating_sub(k);
        self.removed_at[i] == usize::MAX || self.removed_at[i] >= removed
    }

    /// Surviving contour indices at `k` vertices, in contour order.
    pub fn vertices_at(&self, k: usize) -> Vec<usize> {
        (0..self.len).filter(|&i| self.survives(i, k)).collect()
    }
}
