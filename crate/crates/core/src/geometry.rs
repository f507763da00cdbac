use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Integer pixel coordinate, origin top-left, `y` grows downwards.
///
/// Points order in raster order (row first, then column), so the minimum of
/// a set is its top-left-most pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub const fn new(x: i32, y: i32) -> Self {
        Point { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Point::new(self.x + dx, self.y + dy)
    }

    pub fn dist2(self, other: Point) -> i64 {
        let dx = (self.x - other.x) as i64;
        let dy = (self.y - other.y) as i64;
        dx * dx + dy * dy
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.dist2(other) as f64).sqrt()
    }

    /// True when the two points are distinct 8-neighbours.
    pub fn is_adjacent8(self, other: Point) -> bool {
        self != other && (self.x - other.x).abs() <= 1 && (self.y - other.y).abs() <= 1
    }

    pub fn neighbors8(self) -> impl Iterator<Item = Point> {
        NEIGHBORS8.iter().map(move |&(dx, dy)| self.offset(dx, dy))
    }

    pub fn neighbors4(self) -> impl Iterator<Item = Point> {
        NEIGHBORS4.iter().map(move |&(dx, dy)| self.offset(dx, dy))
    }
}

impl Ord for Point {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl From<(i32, i32)> for Point {
    fn from((x, y): (i32, i32)) -> Self {
        Point::new(x, y)
    }
}

/// 8-neighbourhood offsets, clockwise on screen starting east.
pub const NEIGHBORS8: [(i32, i32); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

pub const NEIGHBORS4: [(i32, i32); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

/// Axis-aligned pixel rectangle, inclusive of `min` and `max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    /// Builds a rectangle from two opposite corners in any order.
    pub fn from_corners(a: Point, b: Point) -> Self {
        Rect {
            min: Point::new(a.x.min(b.x), a.y.min(b.y)),
            max: Point::new(a.x.max(b.x), a.y.max(b.y)),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// Path cost on the 8-connected grid, `ortho + diag * sqrt(2)`.
///
/// Kept as integer step counts so equal-cost paths compare exactly.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct StepCost {
    pub ortho: u32,
    pub diag: u32,
}

impl StepCost {
    pub fn step(self, from: Point, to: Point) -> Self {
        if from.x != to.x && from.y != to.y {
            StepCost {
                ortho: self.ortho,
                diag: self.diag + 1,
            }
        } else {
            StepCost {
                ortho: self.ortho + 1,
                diag: self.diag,
            }
        }
    }

    pub fn length(self) -> f64 {
        self.ortho as f64 + self.diag as f64 * std::f64::consts::SQRT_2
    }

    /// Number of pixels on a path with this cost.
    pub fn pixels(self) -> usize {
        (self.ortho + self.diag) as usize + 1
    }
}

impl Ord for StepCost {
    fn cmp(&self, other: &Self) -> Ordering {
        // sign of (a1 - a2) + (b1 - b2) * sqrt(2), decided in integers
        let da = self.ortho as i64 - other.ortho as i64;
        let db = self.diag as i64 - other.diag as i64;
        match (da.signum(), db.signum()) {
            (0, s) | (s, 0) => s.cmp(&0),
            (1, 1) => Ordering::Greater,
            (-1, -1) => Ordering::Less,
            (sa, _) => {
                let lhs = da * da;
                let rhs = 2 * db * db;
                if sa > 0 {
                    lhs.cmp(&rhs)
                } else {
                    rhs.cmp(&lhs)
                }
            }
        }
    }
}

impl PartialOrd for StepCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
