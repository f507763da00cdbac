use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mask::{BinaryMask, Connectivity};

/// Ordered boundary pixels of a region.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contour {
    pub points: Vec<Point>,
    pub closed: bool,
}

impl Contour {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Polygon length of the contour, closing edge included when closed.
    pub fn perimeter(&self) -> f64 {
        let n = self.points.len();
        if n < 2 {
            return 0.0;
        }
        let open: f64 = self.points.windows(2).map(|w| w[0].dist(w[1])).sum();
        if self.closed {
            open + self.points[n - 1].dist(self.points[0])
        } else {
            open
        }
    }

    /// Rasterises the contour pixels into a mask of the given size.
    pub fn rasterize(&self, width: usize, height: usize) -> BinaryMask {
        let mut mask = BinaryMask::new(width, height);
        for &p in &self.points {
            if mask.in_bounds(p) {
                mask.set(p, true);
            }
        }
        mask
    }
}

// crack directions on screen: east, south, west, north
const DIRS: [(i32, i32); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

/// Traces the outer boundary of a single 8-connected region.
///
/// Walks the pixel-edge cracks between foreground and background keeping
/// foreground on the walker's left, which is counterclockwise as displayed
/// (y down). Each crack contributes the foreground pixel on its left; at
/// concave corners the pixel that only touches background diagonally is
/// inserted too, so every outer pixel with a background 8-neighbour appears.
pub fn trace_boundary(mask: &BinaryMask) -> Result<Contour> {
    let count = mask.component_count(Connectivity::Eight);
    if count == 0 {
        return Err(Error::EmptyMask);
    }
    if count > 1 {
        return Err(Error::MultipleComponents(count));
    }
    let start = mask.points().next().expect("non-empty");

    // vertex (vx, vy) is the top-left corner of pixel (vx, vy)
    let pixel_ahead = |v: (i32, i32), d: usize, left: bool| -> Point {
        // the two pixels in front of vertex v when heading d
        let (dx, dy) = DIRS[d];
        match (dx, dy, left) {
            (1, 0, true) => Point::new(v.0, v.1 - 1),
            (1, 0, false) => Point::new(v.0, v.1),
            (0, 1, true) => Point::new(v.0, v.1),
            (0, 1, false) => Point::new(v.0 - 1, v.1),
            (-1, 0, true) => Point::new(v.0 - 1, v.1),
            (-1, 0, false) => Point::new(v.0 - 1, v.1 - 1),
            (0, -1, true) => Point::new(v.0 - 1, v.1 - 1),
            (0, -1, false) => Point::new(v.0, v.1 - 1),
            _ => unreachable!(),
        }
    };

    let mut points: Vec<Point> = Vec::new();
    let push = |p: Point, points: &mut Vec<Point>| {
        if points.last() != Some(&p) {
            points.push(p);
        }
    };

    let start_vertex = (start.x, start.y);
    let start_dir = 1usize; // south, along the west side of the first pixel
    let mut v = start_vertex;
    let mut d = start_dir;
    loop {
        // emit the left pixel of the crack leaving v in direction d
        push(pixel_ahead(v, d, true), &mut points);
        let (dx, dy) = DIRS[d];
        v = (v.0 + dx, v.1 + dy);
        let fl = pixel_ahead(v, d, true);
        let fr = pixel_ahead(v, d, false);
        if mask.get(fr) {
            // concave corner: turn right, include the diagonal-only pixel
            if mask.get(fl) {
                push(fl, &mut points);
            }
            d = (d + 1) % 4;
        } else if mask.get(fl) {
            // straight on
        } else {
            d = (d + 3) % 4;
        }
        if v == start_vertex && d == start_dir {
            break;
        }
    }
    while points.len() > 1 && points.first() == points.last() {
        points.pop();
    }
    Ok(Contour {
        points,
        closed: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pixel() {
        let mut m = BinaryMask::new(3, 3);
        m.set(Point::new(1, 1), true);
        let c = trace_boundary(&m).unwrap();
        assert_eq!(c.points, vec![Point::new(1, 1)]);
    }

    #[test]
    fn square_is_counterclockwise() {
        let m = BinaryMask::from_fn(5, 5, |p| (1..4).contains(&p.x) && (1..4).contains(&p.y));
        let c = trace_boundary(&m).unwrap();
        let expected: Vec<Point> = [(1, 1), (1, 2), (1, 3), (2, 3), (3, 3), (3, 2), (3, 1), (2, 1)]
            .into_iter()
            .map(Point::from)
            .collect();
        assert_eq!(c.points, expected);
    }

    #[test]
    fn consecutive_points_are_adjacent() {
        let m = BinaryMask::from_ascii(&[
            "..........",
            ".####.....",
            ".#..##....",
            ".#...###..",
            "..#.....#.",
            "...######.",
        ])
        .unwrap();
        let c = trace_boundary(&m).unwrap();
        let n = c.len();
        for i in 0..n {
            assert!(c.points[i].is_adjacent8(c.points[(i + 1) % n]), "gap at {i}");
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(trace_boundary(&BinaryMask::new(3, 3)), Err(Error::EmptyMask)));
        let two = BinaryMask::from_ascii(&["#.#"]).unwrap();
        assert!(matches!(trace_boundary(&two), Err(Error::MultipleComponents(2))));
    }
}
