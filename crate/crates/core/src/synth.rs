//! Seeded synthetic shapes for tests, benches and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Point;
use crate::mask::{BinaryMask, Connectivity};

/// Pixels with `|p - centre|^2 <= r^2`.
pub fn disc(width: usize, height: usize, centre: Point, r: f64) -> BinaryMask {
    BinaryMask::from_fn(width, height, |p| (p.dist2(centre) as f64) <= r * r)
}

/// Axis-aligned filled rectangle `[x0, x0 + w) x [y0, y0 + h)` on a grid with
/// a `margin` of background around it.
pub fn rectangle(w: usize, h: usize, margin: usize) -> BinaryMask {
    let (m, w, h) = (margin as i32, w as i32, h as i32);
    BinaryMask::from_fn((w + 2 * m) as usize, (h + 2 * m) as usize, |p| {
        (m..m + w).contains(&p.x) && (m..m + h).contains(&p.y)
    })
}

/// Ring between radii `inner` (exclusive) and `outer` (inclusive).
pub fn annulus(size: usize, outer: f64, inner: f64) -> BinaryMask {
    let c = Point::new(size as i32 / 2, size as i32 / 2);
    BinaryMask::from_fn(size, size, |p| {
        let d2 = p.dist2(c) as f64;
        d2 <= outer * outer && d2 > inner * inner
    })
}

/// Union of overlapping random discs and ellipses on a `size` x `size` grid:
/// one 8-connected component, holes filled.
pub fn random_blob(seed: u64, size: usize) -> BinaryMask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = size as f64;
    let mut mask = BinaryMask::new(size, size);
    let mut centres: Vec<(f64, f64, f64)> = vec![(s / 2.0, s / 2.0, rng.random_range(s * 0.12..s * 0.2))];
    let parts = rng.random_range(2..7);
    for _ in 0..parts {
        let &(px, py, pr) = &centres[rng.random_range(0..centres.len())];
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let r = rng.random_range(s * 0.05..s * 0.16);
        let reach = pr * rng.random_range(0.4..0.95);
        let x = (px + angle.cos() * reach).clamp(r + 2.0, s - r - 3.0);
        let y = (py + angle.sin() * reach).clamp(r + 2.0, s - r - 3.0);
        centres.push((x, y, r));
    }
    for &(cx, cy, r) in &centres {
        let stretch = rng.random_range(0.6..1.0);
        let tilt = rng.random_range(0.0..std::f64::consts::PI);
        let (sin, cos) = tilt.sin_cos();
        for y in 0..size {
            for x in 0..size {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                let u = dx * cos + dy * sin;
                let v = (-dx * sin + dy * cos) / stretch;
                if u * u + v * v <= r * r {
                    mask.set(Point::new(x as i32, y as i32), true);
                }
            }
        }
    }
    largest_component(&mask).fill_holes()
}

/// Four-legged animal silhouette with head, neck and tail, roughly in the
/// style of the classic shape benchmarks. `scale` 1.0 fits a 128 x 96 grid.
pub fn quadruped(scale: f64) -> BinaryMask {
    let w = (128.0 * scale).round() as usize;
    let h = (96.0 * scale).round() as usize;
    let s = scale;
    let body = |x: f64, y: f64| {
        let u = (x - 60.0 * s) / (32.0 * s);
        let v = (y - 40.0 * s) / (13.0 * s);
        u * u + v * v <= 1.0
    };
    let segment = |x: f64, y: f64, a: (f64, f64), b: (f64, f64), r: f64| {
        let (ax, ay, bx, by) = (a.0 * s, a.1 * s, b.0 * s, b.1 * s);
        let (dx, dy) = (bx - ax, by - ay);
        let t = (((x - ax) * dx + (y - ay) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
        let (qx, qy) = (ax + t * dx - x, ay + t * dy - y);
        qx * qx + qy * qy <= (r * s) * (r * s)
    };
    let mask = BinaryMask::from_fn(w, h, |p| {
        let (x, y) = (p.x as f64, p.y as f64);
        body(x, y)
            || segment(x, y, (38.0, 45.0), (34.0, 86.0), 4.0)
            || segment(x, y, (48.0, 47.0), (50.0, 86.0), 4.0)
            || segment(x, y, (72.0, 47.0), (70.0, 86.0), 4.0)
            || segment(x, y, (82.0, 45.0), (88.0, 86.0), 4.0)
            || segment(x, y, (86.0, 34.0), (100.0, 14.0), 6.0)
            || segment(x, y, (100.0, 14.0), (116.0, 20.0), 5.0)
            || segment(x, y, (30.0, 36.0), (12.0, 58.0), 2.5)
    });
    largest_component(&mask)
}

fn largest_component(mask: &BinaryMask) -> BinaryMask {
    mask.connected_components(Connectivity::Eight)
        .into_iter()
        .next()
        .unwrap_or_else(|| BinaryMask::new(mask.width(), mask.height()))
}
