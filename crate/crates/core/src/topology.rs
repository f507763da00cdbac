//! Digital topology on the (8, 4) grid: foreground 8-connected, background
//! 4-connected.

use std::sync::OnceLock;

use crate::geometry::{Point, NEIGHBORS8};

/// Bit `i` of the returned code is set when the `i`-th neighbour (in
/// [`NEIGHBORS8`] order) is foreground.
pub fn neighborhood_code(p: Point, is_fg: impl Fn(Point) -> bool) -> u8 {
    NEIGHBORS8
        .iter()
        .enumerate()
        .fold(0u8, |acc, (i, &(dx, dy))| if is_fg(p.offset(dx, dy)) { acc | (1 << i) } else { acc })
}

/// True when removing the centre pixel preserves topology: exactly one
/// 8-component of foreground neighbours and exactly one 4-component of
/// background neighbours touching the centre.
pub fn is_simple(p: Point, is_fg: impl Fn(Point) -> bool) -> bool {
    simple_table()[neighborhood_code(p, is_fg) as usize]
}

fn simple_table() -> &'static [bool; 256] {
    static TABLE: OnceLock<[bool; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [false; 256];
        for (code, entry) in table.iter_mut().enumerate() {
            *entry = simple_from_code(code as u8);
        }
        table
    })
}

fn simple_from_code(code: u8) -> bool {
    // 3x3 grid with the centre removed; index by (x+1, y+1)
    let mut grid = [[false; 3]; 3];
    for (i, &(dx, dy)) in NEIGHBORS8.iter().enumerate() {
        grid[(dy + 1) as usize][(dx + 1) as usize] = code & (1 << i) != 0;
    }
    let fg_components = count_components(&grid, true, true, false);
    let bg_components = count_components(&grid, false, false, true);
    fg_components == 1 && bg_components == 1
}

/// Components of cells equal to `value` in the 3x3 ring (centre excluded).
/// With `only_touching`, counts only components holding a 4-neighbour of the
/// centre.
fn count_components(grid: &[[bool; 3]; 3], value: bool, eight: bool, only_touching: bool) -> usize {
    let mut seen = [[false; 3]; 3];
    let mut count = 0;
    for sy in 0..3 {
        for sx in 0..3 {
            if (sx, sy) == (1, 1) || grid[sy][sx] != value || seen[sy][sx] {
                continue;
            }
            let mut stack = vec![(sx, sy)];
            seen[sy][sx] = true;
            let mut touches = false;
            while let Some((x, y)) = stack.pop() {
                if (x == 1) != (y == 1) {
                    touches = true;
                }
                for dy in -1i32..=1 {
                    for dx in -1i32..=1 {
                        if (dx, dy) == (0, 0) || (!eight && dx != 0 && dy != 0) {
                            continue;
                        }
                        let nx = x as i32 + dx;
                        let ny = y as i32 + dy;
                        if !(0..3).contains(&nx) || !(0..3).contains(&ny) || (nx, ny) == (1, 1) {
                            continue;
                        }
                        let (nx, ny) = (nx as usize, ny as usize);
                        if grid[ny][nx] == value && !seen[ny][nx] {
                            seen[ny][nx] = true;
                            stack.push((nx, ny));
                        }
                    }
                }
            }
            if touches || !only_touching {
                count += 1;
            }
        }
    }
    count
}

/// Number of foreground 8-neighbours.
pub fn degree(p: Point, is_fg: impl Fn(Point) -> bool) -> usize {
    neighborhood_code(p, is_fg).count_ones() as usize
}
