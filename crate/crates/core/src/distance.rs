//! Exact Euclidean distance transform.
//!
//! Two separable passes over squared distances: a linear scan down each
//! column, then the lower envelope of parabolas along each row. All
//! arithmetic is on integers so the result equals the brute-force
//! nearest-background distance bit for bit. The grid is padded with one ring
//! of background so pixels outside the image count as background.

use crate::geometry::Point;
use crate::mask::BinaryMask;

/// Per-pixel Euclidean distance to the nearest background pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField {
    width: usize,
    height: usize,
    squared: Vec<i64>,
    nearest: Vec<Point>,
}

impl DistanceField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn index(&self, p: Point) -> Option<usize> {
        (p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height)
            .then(|| p.y as usize * self.width + p.x as usize)
    }

    /// Distance at `p`; 0 outside the grid.
    pub fn get(&self, p: Point) -> f64 {
        (self.squared_at(p) as f64).sqrt()
    }

    /// Squared distance at `p`, exact; 0 outside the grid.
    pub fn squared_at(&self, p: Point) -> i64 {
        self.index(p).map_or(0, |i| self.squared[i])
    }

    /// A nearest background pixel of `p` (may lie one pixel outside the
    /// grid). Background pixels are their own nearest.
    pub fn nearest_background(&self, p: Point) -> Point {
        self.index(p).map_or(p, |i| self.nearest[i])
    }

    /// Distances in row-major order.
    pub fn values(&self) -> Vec<f64> {
        self.squared.iter().map(|&d| (d as f64).sqrt()).collect()
    }

    pub fn max(&self) -> f64 {
        self.squared.iter().copied().max().map_or(0.0, |d| (d as f64).sqrt())
    }
}

/// Exact Euclidean distance transform of `mask`.
pub fn distance_transform(mask: &BinaryMask) -> DistanceField {
    let w = mask.width();
    let h = mask.height();
    // padded grid coordinates: (x + 1, y + 1)
    let pw = w + 2;
    let ph = h + 2;
    let fg = |px: usize, py: usize| {
        px >= 1 && py >= 1 && px <= w && py <= h && mask.get(Point::new(px as i32 - 1, py as i32 - 1))
    };

    // column pass: row of the nearest background pixel within each column
    let mut col_near = vec![0usize; pw * ph];
    for px in 0..pw {
        let mut last_bg: Option<usize> = None;
        for py in 0..ph {
            if !fg(px, py) {
                last_bg = Some(py);
            }
            col_near[py * pw + px] = last_bg.unwrap_or(usize::MAX);
        }
        let mut next_bg: Option<usize> = None;
        for py in (0..ph).rev() {
            if !fg(px, py) {
                next_bg = Some(py);
            }
            let up = col_near[py * pw + px];
            if let Some(down) = next_bg {
                if up == usize::MAX || down - py < py - up {
                    col_near[py * pw + px] = down;
                }
            }
        }
    }

    // row pass: lower envelope of parabolas f(q) + (x - q)^2
    let mut squared = vec![0i64; w * h];
    let mut nearest = vec![Point::new(0, 0); w * h];
    let mut hull: Vec<usize> = Vec::with_capacity(pw);
    let mut f = vec![0i64; pw];
    for py in 1..=h {
        for (px, fv) in f.iter_mut().enumerate() {
            let dy = col_near[py * pw + px] as i64 - py as i64;
            *fv = dy * dy;
        }
        hull.clear();
        // separation abscissa between parabolas at q1 < q2, compared as a
        // rational to stay exact
        let beats = |q1: usize, q2: usize, q3: usize| -> bool {
            // true when q2 is hidden by q1 and q3
            let (a, b, c) = (q1 as i64, q2 as i64, q3 as i64);
            let s12n = (f[b as usize] + b * b) - (f[a as usize] + a * a);
            let s12d = 2 * (b - a);
            let s23n = (f[c as usize] + c * c) - (f[b as usize] + b * b);
            let s23d = 2 * (c - b);
            // s12 >= s23
            s12n * s23d >= s23n * s12d
        };
        for q in 0..pw {
            while hull.len() >= 2 && beats(hull[hull.len() - 2], hull[hull.len() - 1], q) {
                hull.pop();
            }
            hull.push(q);
        }
        let mut k = 0;
        for px in 1..=w {
            let x = px as i64;
            let val = |q: usize| f[q] + (x - q as i64) * (x - q as i64);
            while k + 1 < hull.len() && val(hull[k + 1]) <= val(hull[k]) {
                k += 1;
            }
            let q = hull[k];
            let i = (py - 1) * w + (px - 1);
            squared[i] = val(q);
            nearest[i] = Point::new(q as i32 - 1, col_near[py * pw + q] as i32 - 1);
        }
    }

    DistanceField {
        width: w,
        height: h,
        squared,
        nearest,
    }
}
