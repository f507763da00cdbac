//! Slow, obviously-correct reference implementations used to check the
//! library. Shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skelforge_core::{BinaryMask, Point, SkeletonRaster};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_mask(rng: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> BinaryMask {
    BinaryMask::from_fn(w, h, |_| rng.random_bool(density))
}

/// Distance from every pixel to the nearest background pixel, scanning all
/// pixels; the frame outside the grid is background.
pub fn edt(mask: &BinaryMask) -> Vec<f64> {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let bg: Vec<(i64, i64)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| !mask.get(Point::new(x as i32, y as i32)))
        .collect();
    let mut out = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            if !mask.get(Point::new(x as i32, y as i32)) {
                out.push(0.0);
                continue;
            }
            let frame = (x + 1).min(y + 1).min(w - x).min(h - y);
            let mut best = frame * frame;
            for &(bx, by) in &bg {
                best = best.min((bx - x).pow(2) + (by - y).pow(2));
            }
            out.push((best as f64).sqrt());
        }
    }
    out
}

/// Labels of 8-connected foreground regions by flood fill, -1 on background.
pub fn flood_labels(mask: &BinaryMask) -> (Vec<i64>, usize) {
    let (w, h) = (mask.width() as i32, mask.height() as i32);
    let mut labels = vec![-1i64; (w * h) as usize];
    let mut count = 0;
    for start in mask.points() {
        let i = (start.y * w + start.x) as usize;
        if labels[i] >= 0 {
            continue;
        }
        labels[i] = count as i64;
        let mut stack = vec![start];
        while let Some(p) = stack.pop() {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let q = Point::new(p.x + dx, p.y + dy);
                    if q.x < 0 || q.y < 0 || q.x >= w || q.y >= h || !mask.get(q) {
                        continue;
                    }
                    let j = (q.y * w + q.x) as usize;
                    if labels[j] < 0 {
                        labels[j] = count as i64;
                        stack.push(q);
                    }
                }
            }
        }
        count += 1;
    }
    (labels, count)
}

/// Background pixels not 4-connected to the border.
pub fn enclosed_background(mask: &BinaryMask) -> usize {
    let (w, h) = (mask.width() as i32 + 2, mask.height() as i32 + 2);
    let bg = |x: i32, y: i32| x == 0 || y == 0 || x == w - 1 || y == h - 1 || !mask.get(Point::new(x - 1, y - 1));
    let mut seen = vec![false; (w * h) as usize];
    let mut stack = vec![(0, 0)];
    seen[0] = true;
    while let Some((x, y)) = stack.pop() {
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let (nx, ny) = (x + dx, y + dy);
            if nx >= 0 && ny >= 0 && nx < w && ny < h && bg(nx, ny) && !seen[(ny * w + nx) as usize] {
                seen[(ny * w + nx) as usize] = true;
                stack.push((nx, ny));
            }
        }
    }
    (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| bg(x, y) && !seen[(y * w + x) as usize])
        .count()
}

/// Number of bounded 4-connected background regions: the cycle count of an
/// 8-connected foreground (digital Euler characteristic).
pub fn hole_regions(mask: &BinaryMask) -> usize {
    let inverted = BinaryMask::from_fn(mask.width() + 2, mask.height() + 2, |p| {
        let q = Point::new(p.x - 1, p.y - 1);
        !(mask.in_bounds(q) && mask.get(q))
    });
    // 4-connected components of the padded background; the one touching the
    // corner is the outside
    let (w, h) = (inverted.width() as i32, inverted.height() as i32);
    let mut seen = vec![false; (w * h) as usize];
    let mut regions = 0;
    for start in inverted.points() {
        if seen[(start.y * w + start.x) as usize] {
            continue;
        }
        regions += 1;
        let mut stack = vec![start];
        seen[(start.y * w + start.x) as usize] = true;
        while let Some(p) = stack.pop() {
            for q in [p.offset(1, 0), p.offset(-1, 0), p.offset(0, 1), p.offset(0, -1)] {
                if inverted.in_bounds(q) && inverted.get(q) && !seen[(q.y * w + q.x) as usize] {
                    seen[(q.y * w + q.x) as usize] = true;
                    stack.push(q);
                }
            }
        }
    }
    regions - 1
}

/// Foreground pixels with a background (or out-of-grid) 8-neighbour.
pub fn boundary_scan(mask: &BinaryMask) -> BTreeSet<Point> {
    mask.points()
        .filter(|p| p.neighbors8().any(|q| !mask.in_bounds(q) || !mask.get(q)))
        .collect()
}

fn turn(prev: Point, v: Point, next: Point) -> f64 {
    let (ax, ay) = ((v.x - prev.x) as f64, (v.y - prev.y) as f64);
    let (bx, by) = ((next.x - v.x) as f64, (next.y - v.y) as f64);
    (ax * by - ay * bx).abs().atan2(ax * bx + ay * by)
}

/// DCE by rescanning every live vertex after each deletion.
pub fn dce_greedy(points: &[Point], k_min: usize) -> Vec<usize> {
    let n = points.len();
    let perimeter: f64 = (0..n).map(|i| points[i].dist(points[(i + 1) % n])).sum();
    let mut alive: Vec<usize> = (0..n).collect();
    let mut order = Vec::new();
    while alive.len() > k_min {
        let m = alive.len();
        let mut best = (f64::INFINITY, usize::MAX, 0);
        for j in 0..m {
            let (p, v, q) = (points[alive[(j + m - 1) % m]], points[alive[j]], points[alive[(j + 1) % m]]);
            let (l1, l2) = (p.dist(v) / perimeter, v.dist(q) / perimeter);
            let k = if l1 == 0.0 || l2 == 0.0 {
                0.0
            } else {
                turn(p, v, q) * l1 * l2 / (l1 + l2)
            };
            if k < best.0 || (k == best.0 && alive[j] < best.1) {
                best = (k, alive[j], j);
            }
        }
        order.push(best.1);
        alive.remove(best.2);
    }
    order
}

/// Union of open discs, `d^2 < r^2`, with `r^2` snapped to the integer it
/// represents when it is one.
pub fn reconstruct(points: &[(Point, f64)], w: usize, h: usize) -> BinaryMask {
    BinaryMask::from_fn(w, h, |p| {
        points.iter().any(|&(s, r)| {
            let r2 = r * r;
            let d2 = p.dist2(s);
            if (r2 - r2.round()).abs() < 1e-6 {
                d2 < r2.round() as i64
            } else {
                (d2 as f64) < r2
            }
        })
    })
}

pub fn reconstruction_error(skeleton: &SkeletonRaster, shape: &BinaryMask) -> f64 {
    let pts: Vec<(Point, f64)> = skeleton.points().iter().map(|&p| (p, skeleton.radius(p).unwrap())).collect();
    let r = reconstruct(&pts, shape.width(), shape.height());
    let a = shape.area() as f64;
    (a - r.area() as f64).abs() / a
}

/// All-pairs `(ortho, diag)` step counts of shortest paths by
/// Floyd-Warshall, compared as `ortho + diag * sqrt(2)`.
pub fn all_pairs(points: &[Point]) -> Vec<Vec<Option<(u32, u32)>>> {
    let n = points.len();
    let len = |c: (u32, u32)| c.0 as f64 + c.1 as f64 * std::f64::consts::SQRT_2;
    let mut d: Vec<Vec<Option<(u32, u32)>>> = vec![vec![None; n]; n];
    for i in 0..n {
        d[i][i] = Some((0, 0));
        for j in 0..n {
            if i != j && points[i].is_adjacent8(points[j]) {
                let diag = points[i].x != points[j].x && points[i].y != points[j].y;
                d[i][j] = Some(if diag { (0, 1) } else { (1, 0) });
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            let Some(ik) = d[i][k] else { continue };
            for j in 0..n {
                let Some(kj) = d[k][j] else { continue };
                let via = (ik.0 + kj.0, ik.1 + kj.1);
                if d[i][j].is_none_or(|cur| len(via) < len(cur) - 1e-12) {
                    d[i][j] = Some(via);
                }
            }
        }
    }
    d
}

pub fn path_length(c: (u32, u32)) -> f64 {
    c.0 as f64 + c.1 as f64 * std::f64::consts::SQRT_2
}

fn neighbour_count(points: &BTreeSet<Point>, p: Point) -> usize {
    p.neighbors8().filter(|q| points.contains(q)).count()
}

pub fn endpoints(points: &BTreeSet<Point>) -> Vec<Point> {
    points.iter().copied().filter(|&p| neighbour_count(points, p) == 1).collect()
}

pub fn junctions(points: &BTreeSet<Point>) -> Vec<Point> {
    points.iter().copied().filter(|&p| neighbour_count(points, p) >= 3).collect()
}

/// `1 / (gamma + 1)`, gamma = N / mean pixel count of endpoint-pair paths.
pub fn simplicity(points: &BTreeSet<Point>) -> f64 {
    let n = points.len();
    if n == 0 {
        return 1.0;
    }
    let list: Vec<Point> = points.iter().copied().collect();
    let ends: Vec<usize> = (0..n).filter(|&i| neighbour_count(points, list[i]) == 1).collect();
    let d = all_pairs(&list);
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (a, &i) in ends.iter().enumerate() {
        for &j in &ends[a + 1..] {
            if let Some(c) = d[i][j] {
                total += (c.0 + c.1 + 1) as f64;
                pairs += 1;
            }
        }
    }
    let mean = if pairs == 0 { n as f64 } else { total / pairs as f64 };
    1.0 / (n as f64 / mean + 1.0)
}

pub fn aep(detected: &[Point], gt: &[Point]) -> f64 {
    let sum: f64 = detected
        .iter()
        .map(|&p| gt.iter().map(|&q| p.dist(q)).fold(f64::INFINITY, f64::min))
        .sum();
    sum / detected.len() as f64
}

/// Greedy matching over every pair, closest first with the symmetric tie
/// key; returns `(precision, recall, f1)`.
pub fn f1(detected: &[Point], gt: &[Point], tolerance: f64) -> (f64, f64, f64) {
    let mut pairs = Vec::new();
    for &a in detected {
        for &b in gt {
            if (a.dist2(b) as f64) <= tolerance * tolerance {
                pairs.push((a.dist2(b), a.min(b), a.max(b), a, b));
            }
        }
    }
    pairs.sort_by_key(|t| (t.0, t.1, t.2));
    let (mut ua, mut ub) = (BTreeSet::new(), BTreeSet::new());
    let mut m = 0.0;
    for (_, _, _, a, b) in pairs {
        if !ua.contains(&a) && !ub.contains(&b) {
            ua.insert(a);
            ub.insert(b);
            m += 1.0;
        }
    }
    let p = if detected.is_empty() { 0.0 } else { m / detected.len() as f64 };
    let r = if gt.is_empty() { 0.0 } else { m / gt.len() as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

/// Bulls-eye by rank counting: item `j` is in the top window of query `q`
/// when fewer than `2 * per_class` items beat it.
pub fn bulls_eye(sim: &[Vec<f64>], labels: &[usize], per_class: usize) -> f64 {
    let n = sim.len();
    let mut hits = 0;
    for q in 0..n {
        for j in 0..n {
            if labels[j] != labels[q] {
                continue;
            }
            let beaten_by = (0..n)
                .filter(|&i| sim[q][i] > sim[q][j] || (sim[q][i] == sim[q][j] && i < j))
                .count();
            if beaten_by < 2 * per_class {
                hits += 1;
            }
        }
    }
    hits as f64 / (n * per_class) as f64 * 100.0
}

/// Random pixel tree: every new pixel touches exactly one existing pixel, so
/// the 8-adjacency graph is acyclic and no 2x2 block forms.
pub fn random_tree(rng: &mut ChaCha8Rng, size: usize, pixels: usize) -> SkeletonRaster {
    let s = size as i32;
    let mut set: BTreeSet<Point> = BTreeSet::from([Point::new(s / 2, s / 2)]);
    let mut list: Vec<Point> = set.iter().copied().collect();
    let mut attempts = 0;
    while set.len() < pixels && attempts < pixels * 200 {
        attempts += 1;
        // growing from recent pixels makes long arms
        let base = if rng.random_bool(0.7) {
            list[list.len() - 1 - rng.random_range(0..list.len().min(3))]
        } else {
            list[rng.random_range(0..list.len())]
        };
        let q = base.offset(rng.random_range(-1..=1), rng.random_range(-1..=1));
        if q.x < 1 || q.y < 1 || q.x >= s - 1 || q.y >= s - 1 || set.contains(&q) {
            continue;
        }
        if q.neighbors8().filter(|n| set.contains(n)).count() != 1 {
            continue;
        }
        set.insert(q);
        list.push(q);
    }
    SkeletonRaster::from_points(size, size, set)
}

/// BFS path between `a` and `b` in a pixel tree (unique).
pub fn tree_path(points: &BTreeSet<Point>, a: Point, b: Point) -> Vec<Point> {
    let mut parent: HashMap<Point, Point> = HashMap::new();
    let mut queue = VecDeque::from([a]);
    parent.insert(a, a);
    while let Some(p) = queue.pop_front() {
        if p == b {
            break;
        }
        for q in p.neighbors8() {
            if points.contains(&q) && !parent.contains_key(&q) {
                parent.insert(q, p);
                queue.push_back(q);
            }
        }
    }
    let mut path = vec![b];
    while *path.last().unwrap() != a {
        path.push(parent[path.last().unwrap()]);
    }
    path
}

/// The consensus rule written out case by case.
pub fn consensus_pick(skeletons: &[BTreeSet<Point>], res: &[f64]) -> Option<usize> {
    let mut votes: BTreeMap<&BTreeSet<Point>, usize> = BTreeMap::new();
    for s in skeletons {
        *votes.entry(s).or_default() += 1;
    }
    let top = *votes.values().max()?;
    let leaders: Vec<_> = votes.iter().filter(|(_, &v)| v == top).collect();
    if leaders.len() == 1 {
        return skeletons.iter().position(|s| s == *leaders[0].0);
    }
    if votes.len() < 3 {
        return None;
    }
    // distinct skeletons ordered by RE; lower median
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for s in votes.keys() {
        let i = skeletons.iter().position(|t| &t == s).unwrap();
        distinct.push((res[i], i));
    }
    distinct.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let m = distinct.len();
    Some(distinct[(m - 1) / 2].1)
}
