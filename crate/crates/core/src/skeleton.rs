//! One-pixel-wide skeletons and medial-axis extraction.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use sha2::{Digest, Sha256};

use crate::distance::{distance_transform, DistanceField};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mask::{BinaryMask, Connectivity};
use crate::topology;

/// Skeleton pixels of a `width` x `height` grid with the maximal-disc radius
/// of each pixel.
///
/// Radii may be missing for skeletons read from plain images; reconstruction
/// needs them, point-set metrics do not.
#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonRaster {
    width: usize,
    height: usize,
    points: BTreeSet<Point>,
    radii: BTreeMap<Point, f64>,
}

impl SkeletonRaster {
    pub fn new(width: usize, height: usize) -> Self {
        SkeletonRaster {
            width,
            height,
            points: BTreeSet::new(),
            radii: BTreeMap::new(),
        }
    }

    /// Skeleton over `points` without radii. Out-of-grid points are dropped.
    pub fn from_points(width: usize, height: usize, points: impl IntoIterator<Item = Point>) -> Self {
        let mut s = SkeletonRaster::new(width, height);
        for p in points {
            if p.x >= 0 && p.y >= 0 && (p.x as usize) < width && (p.y as usize) < height {
                s.points.insert(p);
            }
        }
        s
    }

    pub fn from_mask(mask: &BinaryMask) -> Self {
        SkeletonRaster::from_points(mask.width(), mask.height(), mask.points())
    }

    /// Attaches radii read from a distance field.
    pub fn with_radii_from(mut self, field: &DistanceField) -> Self {
        self.radii = self.points.iter().map(|&p| (p, field.get(p))).collect();
        self
    }

    /// Sets the radius of every listed point that belongs to the skeleton.
    pub fn with_radii(mut self, radii: impl IntoIterator<Item = (Point, f64)>) -> Self {
        for (p, r) in radii {
            if self.points.contains(&p) {
                self.radii.insert(p, r);
            }
        }
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.points.contains(&p)
    }

    /// Points in raster order.
    pub fn points(&self) -> &BTreeSet<Point> {
        &self.points
    }

    pub fn radius(&self, p: Point) -> Option<f64> {
        self.radii.get(&p).copied()
    }

    pub fn radii(&self) -> &BTreeMap<Point, f64> {
        &self.radii
    }

    pub fn has_all_radii(&self) -> bool {
        self.points.iter().all(|p| self.radii.contains_key(p))
    }

    /// Keeps only the points for which `keep` holds.
    pub fn retain(&self, mut keep: impl FnMut(Point) -> bool) -> SkeletonRaster {
        let points: BTreeSet<Point> = self.points.iter().copied().filter(|&p| keep(p)).collect();
        let radii = self
            .radii
            .iter()
            .filter(|(p, _)| points.contains(p))
            .map(|(&p, &r)| (p, r))
            .collect();
        SkeletonRaster {
            width: self.width,
            height: self.height,
            points,
            radii,
        }
    }

    pub fn is_subset_of(&self, other: &SkeletonRaster) -> bool {
        self.width == other.width && self.height == other.height && self.points.is_subset(&other.points)
    }

    pub fn to_mask(&self) -> BinaryMask {
        let mut m = BinaryMask::new(self.width.max(1), self.height.max(1));
        for &p in &self.points {
            m.set(p, true);
        }
        m
    }

    /// Number of skeleton 8-neighbours of `p`.
    pub fn degree(&self, p: Point) -> usize {
        topology::degree(p, |q| self.points.contains(&q))
    }

    /// Points with exactly one skeleton neighbour.
    pub fn endpoints(&self) -> Vec<Point> {
        self.points.iter().copied().filter(|&p| self.degree(p) == 1).collect()
    }

    /// Points with three or more skeleton neighbours.
    pub fn junctions(&self) -> Vec<Point> {
        self.points.iter().copied().filter(|&p| self.degree(p) >= 3).collect()
    }

    /// No 2x2 block is entirely skeleton.
    pub fn is_thin(&self) -> bool {
        self.points.iter().all(|&p| {
            !(self.contains(p.offset(1, 0)) && self.contains(p.offset(0, 1)) && self.contains(p.offset(1, 1)))
        })
    }

    pub fn component_count(&self) -> usize {
        if self.points.is_empty() {
            return 0;
        }
        self.to_mask().component_count(Connectivity::Eight)
    }

    /// Independent cycles of the skeleton graph in which diagonal links are
    /// dropped when a 4-path already joins their ends.
    pub fn cycle_count(&self) -> usize {
        let v = self.points.len() as i64;
        let mut e = 0i64;
        for &p in &self.points {
            for (dx, dy) in [(1, 0), (0, 1)] {
                if self.contains(p.offset(dx, dy)) {
                    e += 1;
                }
            }
            for (dx, dy) in [(1, 1), (-1, 1)] {
                let q = p.offset(dx, dy);
                if self.contains(q) && !self.contains(Point::new(q.x, p.y)) && !self.contains(Point::new(p.x, q.y)) {
                    e += 1;
                }
            }
        }
        (e - v + self.component_count() as i64).max(0) as usize
    }

    /// Hex SHA-256 of the grid size and sorted point list.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.width as u64).to_le_bytes());
        hasher.update((self.height as u64).to_le_bytes());
        for p in &self.points {
            hasher.update(p.x.to_le_bytes());
            hasher.update(p.y.to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }
}

/// Options for [`medial_axis_with`].
#[derive(Clone, Copy, Debug)]
pub struct MedialAxisOptions {
    /// Grow branch tips along steepest descent until they touch the boundary.
    pub extend_to_boundary: bool,
    /// Skeletons with at most this many points are left unextended: they are
    /// the collapsed centre of a single maximal disc.
    pub min_extend_size: usize,
}

impl Default for MedialAxisOptions {
    fn default() -> Self {
        MedialAxisOptions {
            extend_to_boundary: true,
            min_extend_size: 4,
        }
    }
}

/// Medial axis of `mask` with default options.
pub fn medial_axis(mask: &BinaryMask) -> Result<SkeletonRaster> {
    medial_axis_with(mask, MedialAxisOptions::default())
}

/// Thin, connected, homotopy-preserving medial axis.
///
/// 1. Centres of maximal discs are found exactly: the open disc at `p`
///    (pixels strictly closer than the distance value) is compared as a pixel
///    set against the discs of its 8-neighbours.
/// 2. Every other pixel is peeled in increasing distance order whenever it is
///    a simple point, which keeps the disc centres and the topology.
/// 3. Leftover 2x2 blocks, staircase corners and any other simple pixel
///    with two or more neighbours are removed to make the result one pixel
///    wide and 8-minimal.
/// 4. Branch tips descend the distance field until they reach the boundary.
pub fn medial_axis_with(mask: &BinaryMask, options: MedialAxisOptions) -> Result<SkeletonRaster> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let field = distance_transform(mask);
    let anchors = maximal_disc_centres(mask, &field);

    let mut grid = mask.clone();
    ordered_thinning(&mut grid, &field, &anchors);
    make_thin(&mut grid, &field);
    let mut skeleton = minimal(SkeletonRaster::from_mask(&grid).with_radii_from(&field));
    if options.extend_to_boundary && skeleton.len() > options.min_extend_size {
        let mut grid = skeleton.to_mask();
        extend_tips(&mut grid, &field);
        skeleton = minimal(SkeletonRaster::from_mask(&grid).with_radii_from(&field));
    }
    Ok(skeleton)
}

fn minimal(skeleton: SkeletonRaster) -> SkeletonRaster {
    let all: Vec<Point> = skeleton.points().iter().copied().collect();
    crate::graph::drop_redundant(&skeleton, all)
}

/// Pixels whose open maximal disc is not contained in a neighbour's disc.
pub fn maximal_disc_centres(mask: &BinaryMask, field: &DistanceField) -> BinaryMask {
    let mut cache: HashMap<(i64, i32, i32), i64> = HashMap::new();
    BinaryMask::from_fn(mask.width(), mask.height(), |p| {
        if !mask.get(p) {
            return false;
        }
        // open disc of squared radius d2 holds the lattice offsets with
        // |q|^2 <= d2 - 1
        let r2 = field.squared_at(p) - 1;
        !p.neighbors8().any(|t| {
            if !mask.get(t) {
                return false;
            }
            let v = (p.x - t.x, p.y - t.y);
            let need = *cache.entry((r2, v.0, v.1)).or_insert_with(|| farthest_offset2(r2, v));
            field.squared_at(t) > need
        })
    })
}

/// max |q + v|^2 over lattice points q with |q|^2 <= r2.
fn farthest_offset2(r2: i64, v: (i32, i32)) -> i64 {
    let r = (r2 as f64).sqrt().floor() as i64 + 1;
    let mut best = i64::MIN;
    for x in -r..=r {
        let rem = r2 - x * x;
        if rem < 0 {
            continue;
        }
        let mut ymax = (rem as f64).sqrt() as i64;
        while ymax * ymax > rem {
            ymax -= 1;
        }
        while (ymax + 1) * (ymax + 1) <= rem {
            ymax += 1;
        }
        for y in [ymax, -ymax] {
            let dx = x + v.0 as i64;
            let dy = y + v.1 as i64;
            best = best.max(dx * dx + dy * dy);
        }
    }
    best
}

fn ordered_thinning(grid: &mut BinaryMask, field: &DistanceField, anchors: &BinaryMask) {
    let mut heap: BinaryHeap<Reverse<(i64, Point)>> = grid
        .points()
        .filter(|&p| !anchors.get(p))
        .map(|p| Reverse((field.squared_at(p), p)))
        .collect();
    while let Some(Reverse((_, p))) = heap.pop() {
        if !grid.get(p) || !topology::is_simple(p, |q| grid.get(q)) {
            continue;
        }
        grid.set(p, false);
        for q in p.neighbors8() {
            if grid.get(q) && !anchors.get(q) {
                heap.push(Reverse((field.squared_at(q), q)));
            }
        }
    }
}

fn in_full_block(grid: &BinaryMask, p: Point) -> bool {
    [(0, 0), (-1, 0), (0, -1), (-1, -1)].iter().any(|&(ox, oy)| {
        let o = p.offset(ox, oy);
        grid.get(o) && grid.get(o.offset(1, 0)) && grid.get(o.offset(0, 1)) && grid.get(o.offset(1, 1))
    })
}

fn is_corner(grid: &BinaryMask, p: Point) -> bool {
    // two perpendicular 4-neighbours are present, so p is a staircase step
    [(1, 1), (1, -1), (-1, 1), (-1, -1)]
        .iter()
        .any(|&(dx, dy)| grid.get(p.offset(dx, 0)) && grid.get(p.offset(0, dy)))
}

/// Removes simple points sitting in 2x2 blocks, then staircase corners,
/// lowest distance first, until neither remains removable.
pub(crate) fn make_thin(grid: &mut BinaryMask, field: &DistanceField) {
    loop {
        let mut changed = false;
        for pass in 0..2 {
            let mut candidates: Vec<(i64, Point)> = grid
                .points()
                .filter(|&p| if pass == 0 { in_full_block(grid, p) } else { is_corner(grid, p) })
                .map(|p| (field.squared_at(p), p))
                .collect();
            candidates.sort();
            for (_, p) in candidates {
                let still = if pass == 0 { in_full_block(grid, p) } else { is_corner(grid, p) };
                if still
                    && topology::degree(p, |q| grid.get(q)) > 1
                    && topology::is_simple(p, |q| grid.get(q))
                {
                    grid.set(p, false);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

/// Extends every endpoint along strictly decreasing distance until it
/// reaches a pixel next to the background.
fn extend_tips(grid: &mut BinaryMask, field: &DistanceField) {
    let tips: Vec<Point> = grid
        .points()
        .filter(|&p| topology::degree(p, |q| grid.get(q)) == 1)
        .collect();
    for tip in tips {
        if topology::degree(tip, |q| grid.get(q)) != 1 {
            continue;
        }
        let mut prev = tip
            .neighbors8()
            .find(|&q| grid.get(q))
            .expect("endpoint has a neighbour");
        let mut cur = tip;
        while field.squared_at(cur) > 1 {
            let heading = (cur.x - prev.x, cur.y - prev.y);
            let next = cur
                .neighbors8()
                .filter(|&n| {
                    field.squared_at(n) > 0
                        && field.squared_at(n) < field.squared_at(cur)
                        && !grid.get(n)
                        && n.neighbors8().all(|m| m == cur || !grid.get(m))
                })
                .min_by_key(|&n| {
                    let align = (n.x - cur.x) * heading.0 + (n.y - cur.y) * heading.1;
                    (field.squared_at(n), Reverse(align), n)
                });
            match next {
                Some(n) => {
                    grid.set(n, true);
                    prev = cur;
                    cur = n;
                }
                None => break,
            }
        }
    }
}
