//! Endpoint / junction / branch decomposition of a skeleton and the pruning
//! operations built on it.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect, StepCost};
use crate::skeleton::SkeletonRaster;
use crate::topology;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Endpoint,
    Junction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub point: Point,
    pub kind: NodeKind,
}

/// Content-derived branch identifier: the same pixel path always gets the
/// same id, whatever else changed in the skeleton. Serialized as 16 hex
/// digits so that JSON clients without 64-bit integers keep it intact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct BranchId(pub u64);

impl std::fmt::Display for BranchId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl std::str::FromStr for BranchId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        u64::from_str_radix(s, 16).map(BranchId)
    }
}

impl From<BranchId> for String {
    fn from(id: BranchId) -> String {
        id.to_string()
    }
}

impl TryFrom<String> for BranchId {
    type Error = std::num::ParseIntError;

    fn try_from(s: String) -> std::result::Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: BranchId,
    /// Pixels from one terminal to the other, terminals included. A closed
    /// branch lists its cycle once, starting at its smallest pixel.
    pub path: Vec<Point>,
    /// Geodesic length, diagonal steps counting `sqrt(2)`.
    pub length: f64,
    pub closed: bool,
}

impl Branch {
    fn new(mut path: Vec<Point>, closed: bool) -> Branch {
        if closed {
            let start = (0..path.len()).min_by_key(|&i| path[i]).unwrap_or(0);
            path.rotate_left(start);
            if path.len() > 2 && path[path.len() - 1] < path[1] {
                path[1..].reverse();
            }
        } else if path.len() > 1 {
            let n = path.len();
            // a loop returning to its own junction is oriented by its second pixel
            if path[n - 1] < path[0] || (path[n - 1] == path[0] && n > 2 && path[n - 2] < path[1]) {
                path.reverse();
            }
        }
        let mut length: f64 = path.windows(2).map(|w| w[0].dist(w[1])).sum();
        if closed && path.len() > 1 {
            length += path[path.len() - 1].dist(path[0]);
        }
        let mut hasher = Sha256::new();
        hasher.update([closed as u8]);
        for p in &path {
            hasher.update(p.x.to_le_bytes());
            hasher.update(p.y.to_le_bytes());
        }
        let digest = hasher.finalize();
        let id = BranchId(u64::from_be_bytes(digest[..8].try_into().expect("8 bytes")));
        Branch {
            id,
            path,
            length,
            closed,
        }
    }

    /// Terminal pixels of an open branch.
    pub fn terminals(&self) -> Option<(Point, Point)> {
        (!self.closed).then(|| (self.path[0], self.path[self.path.len() - 1]))
    }
}

/// Decomposed skeleton. Nodes and branches are sorted; the raster is kept so
/// the graph can be reassembled and re-pruned.
#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonGraph {
    pub nodes: Vec<Node>,
    pub branches: Vec<Branch>,
    raster: SkeletonRaster,
}

impl SkeletonGraph {
    pub fn raster(&self) -> &SkeletonRaster {
        &self.raster
    }

    pub fn into_raster(self) -> SkeletonRaster {
        self.raster
    }

    pub fn endpoints(&self) -> Vec<Point> {
        self.nodes_of(NodeKind::Endpoint)
    }

    pub fn junctions(&self) -> Vec<Point> {
        self.nodes_of(NodeKind::Junction)
    }

    fn nodes_of(&self, kind: NodeKind) -> Vec<Point> {
        self.nodes.iter().filter(|n| n.kind == kind).map(|n| n.point).collect()
    }

    pub fn branch(&self, id: BranchId) -> Option<&Branch> {
        self.branches.iter().find(|b| b.id == id)
    }

    /// A leaf joins an endpoint to a junction. A branch between two endpoints
    /// is the whole component and is never a leaf.
    pub fn is_leaf(&self, branch: &Branch) -> bool {
        match branch.terminals() {
            Some((a, b)) => {
                let ka = self.raster.degree(a) == 1;
                let kb = self.raster.degree(b) == 1;
                ka != kb && a != b
            }
            None => false,
        }
    }

    pub fn leaf_branches(&self) -> Vec<&Branch> {
        self.branches.iter().filter(|b| self.is_leaf(b)).collect()
    }

    /// Union of every node and branch pixel.
    pub fn reassemble(&self) -> BTreeSet<Point> {
        let mut set: BTreeSet<Point> = self.nodes.iter().map(|n| n.point).collect();
        for b in &self.branches {
            set.extend(b.path.iter().copied());
        }
        set
    }
}

fn is_node(raster: &SkeletonRaster, p: Point) -> bool {
    let d = raster.degree(p);
    d == 1 || d >= 3
}

fn neighbours(raster: &SkeletonRaster, p: Point) -> impl Iterator<Item = Point> + '_ {
    p.neighbors8().filter(move |&q| raster.contains(q))
}

/// Splits a skeleton into endpoints, junctions and maximal branches.
pub fn decompose(raster: &SkeletonRaster) -> SkeletonGraph {
    let mut nodes = Vec::new();
    for &p in raster.points() {
        match raster.degree(p) {
            1 => nodes.push(Node {
                point: p,
                kind: NodeKind::Endpoint,
            }),
            d if d >= 3 => nodes.push(Node {
                point: p,
                kind: NodeKind::Junction,
            }),
            _ => {}
        }
    }

    let mut branches = Vec::new();
    let mut visited: BTreeSet<Point> = BTreeSet::new();
    let mut direct: BTreeSet<(Point, Point)> = BTreeSet::new();
    for node in &nodes {
        for first in neighbours(raster, node.point) {
            if is_node(raster, first) {
                let key = (node.point.min(first), node.point.max(first));
                if direct.insert(key) {
                    branches.push(Branch::new(vec![node.point, first], false));
                }
                continue;
            }
            if visited.contains(&first) {
                continue;
            }
            let mut path = vec![node.point];
            let mut prev = node.point;
            let mut cur = first;
            loop {
                path.push(cur);
                if is_node(raster, cur) {
                    break;
                }
                visited.insert(cur);
                let next = neighbours(raster, cur).find(|&q| q != prev);
                match next {
                    Some(n) if !visited.contains(&n) || is_node(raster, n) => {
                        prev = cur;
                        cur = n;
                    }
                    _ => break,
                }
            }
            branches.push(Branch::new(path, false));
        }
    }

    // node-free components: cycles of degree-2 pixels and isolated pixels
    for &p in raster.points() {
        if visited.contains(&p) || is_node(raster, p) {
            continue;
        }
        if raster.degree(p) == 0 {
            visited.insert(p);
            branches.push(Branch::new(vec![p], false));
            continue;
        }
        let mut path = vec![p];
        visited.insert(p);
        let mut prev = p;
        let mut cur = neighbours(raster, p).next().expect("degree 2");
        while cur != p && !visited.contains(&cur) {
            visited.insert(cur);
            path.push(cur);
            let next = neighbours(raster, cur).find(|&q| q != prev).expect("degree 2");
            prev = cur;
            cur = next;
        }
        branches.push(Branch::new(path, true));
    }

    branches.sort_by(|a, b| a.path.cmp(&b.path).then(a.closed.cmp(&b.closed)));
    SkeletonGraph {
        nodes,
        branches,
        raster: raster.clone(),
    }
}

/// Removes the named leaf branches (all but their junction pixel) and
/// re-decomposes, which dissolves junctions left with two neighbours.
pub fn prune_branch(graph: &SkeletonGraph, ids: &BTreeSet<BranchId>) -> Result<SkeletonGraph> {
    let mut remove: BTreeSet<Point> = BTreeSet::new();
    let mut seeds = Vec::new();
    for &id in ids {
        let branch = graph.branch(id).ok_or(Error::UnknownBranchId(id.0))?;
        if !graph.is_leaf(branch) {
            return Err(Error::NotALeafBranch(id.0));
        }
        let (a, b) = branch.terminals().expect("open");
        let junction = if graph.raster.degree(a) == 1 { b } else { a };
        remove.extend(branch.path.iter().copied().filter(|&p| p != junction));
        seeds.push(junction);
    }
    let raster = graph.raster.retain(|p| !remove.contains(&p));
    Ok(decompose(&drop_redundant(&raster, seeds)))
}

/// Removes pixels around `seeds` that have two or more neighbours and are
/// simple, i.e. their neighbours stay connected without them. Clears the
/// corner and triangle pixels a former junction leaves behind. Lowest radius
/// first, then raster order.
pub(crate) fn drop_redundant(raster: &SkeletonRaster, seeds: impl IntoIterator<Item = Point>) -> SkeletonRaster {
    let mut points = raster.points().clone();
    let key = |p: Point| (raster.radius(p).unwrap_or(0.0).to_bits(), p);
    let mut queue: BTreeSet<(u64, Point)> = BTreeSet::new();
    for s in seeds {
        for q in std::iter::once(s).chain(s.neighbors8()) {
            if points.contains(&q) {
                queue.insert(key(q));
            }
        }
    }
    let mut removed = false;
    while let Some((_, p)) = queue.pop_first() {
        let has = |q: Point| points.contains(&q);
        if !has(p) || topology::degree(p, has) < 2 || !topology::is_simple(p, has) {
            continue;
        }
        points.remove(&p);
        removed = true;
        for q in p.neighbors8() {
            if points.contains(&q) {
                queue.insert(key(q));
            }
        }
    }
    if removed {
        raster.retain(|p| points.contains(&p))
    } else {
        raster.clone()
    }
}

/// Keeps the union of geodesic paths between every pair of endpoints that
/// lie inside at least one box. Cycles touched by a kept path are kept whole.
pub fn prune_by_boxes(graph: &SkeletonGraph, boxes: &[Rect]) -> Result<SkeletonGraph> {
    let preserved: Vec<Point> = graph
        .endpoints()
        .into_iter()
        .filter(|&p| boxes.iter().any(|b| b.contains(p)))
        .collect();
    if preserved.len() < 2 {
        return Err(Error::TooFewPreservedEndpoints(preserved.len()));
    }
    let mut keep: BTreeSet<Point> = BTreeSet::new();
    for (i, &a) in preserved.iter().enumerate() {
        let tree = shortest_paths(&graph.raster, a);
        for &b in &preserved[i + 1..] {
            if let Some(path) = tree.path_to(b) {
                keep.extend(path);
            }
        }
    }
    if graph.raster.cycle_count() > 0 {
        let core = two_core(&graph.raster);
        for component in core_components(&core) {
            if component.iter().any(|p| keep.contains(p)) {
                keep.extend(component);
            }
        }
    }
    let raster = graph.raster.retain(|p| keep.contains(&p));
    Ok(decompose(&raster))
}

/// Shortest skeleton path from `a` to `b`, both ends included.
pub fn geodesic_path(graph: &SkeletonGraph, a: Point, b: Point) -> Result<Vec<Point>> {
    for p in [a, b] {
        if !graph.raster.contains(p) {
            return Err(Error::NotSkeletonPoint(p));
        }
    }
    shortest_paths(&graph.raster, a).path_to(b).ok_or(Error::Disconnected(a, b))
}

/// Single-source shortest-path tree over skeleton pixels.
pub(crate) struct PathTree {
    source: Point,
    cost: HashMap<Point, StepCost>,
    pred: HashMap<Point, Point>,
}

impl PathTree {
    pub(crate) fn cost(&self, p: Point) -> Option<StepCost> {
        self.cost.get(&p).copied()
    }

    pub(crate) fn path_to(&self, target: Point) -> Option<Vec<Point>> {
        self.cost.get(&target)?;
        let mut path = vec![target];
        let mut cur = target;
        while cur != self.source {
            cur = self.pred[&cur];
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }
}

/// Dijkstra with exact costs; among equal-cost predecessors the smallest in
/// raster order wins.
pub(crate) fn shortest_paths(raster: &SkeletonRaster, source: Point) -> PathTree {
    let mut cost: HashMap<Point, StepCost> = HashMap::new();
    let mut pred: HashMap<Point, Point> = HashMap::new();
    let mut done: BTreeSet<Point> = BTreeSet::new();
    let mut heap = BinaryHeap::new();
    cost.insert(source, StepCost::default());
    heap.push(Reverse((StepCost::default(), source)));
    while let Some(Reverse((c, p))) = heap.pop() {
        if !done.insert(p) {
            continue;
        }
        for q in neighbours(raster, p) {
            if done.contains(&q) {
                continue;
            }
            let nc = c.step(p, q);
            match cost.get(&q) {
                Some(&old) if old < nc => {}
                Some(&old) if old == nc => {
                    if p < pred[&q] {
                        pred.insert(q, p);
                    }
                }
                _ => {
                    cost.insert(q, nc);
                    pred.insert(q, p);
                    heap.push(Reverse((nc, q)));
                }
            }
        }
    }
    PathTree { source, cost, pred }
}

/// Pixels left after repeatedly peeling pixels of degree 0 or 1.
fn two_core(raster: &SkeletonRaster) -> BTreeSet<Point> {
    let mut set: BTreeSet<Point> = raster.points().clone();
    let mut deg: BTreeMap<Point, usize> = set.iter().map(|&p| (p, raster.degree(p))).collect();
    let mut stack: Vec<Point> = deg.iter().filter(|(_, &d)| d <= 1).map(|(&p, _)| p).collect();
    while let Some(p) = stack.pop() {
        if !set.remove(&p) {
            continue;
        }
        for q in p.neighbors8() {
            if set.contains(&q) {
                let d = deg.get_mut(&q).expect("tracked");
                *d -= 1;
                if *d == 1 {
                    stack.push(q);
                }
            }
        }
    }
    set
}

fn core_components(core: &BTreeSet<Point>) -> Vec<Vec<Point>> {
    let mut seen: BTreeSet<Point> = BTreeSet::new();
    let mut out = Vec::new();
    for &start in core {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(p) = stack.pop() {
            for q in p.neighbors8() {
                if core.contains(&q) && seen.insert(q) {
                    comp.push(q);
                    stack.push(q);
                }
            }
        }
        out.push(comp);
    }
    out
}
