//! Binary raster masks and the region operations defined on them.
//!
//! Foreground regions use 8-connectivity and background regions use
//! 4-connectivity unless a caller asks otherwise. Pixels outside the grid are
//! background.

use std::collections::VecDeque;
use std::path::Path;

use image::{GrayImage, Luma};

use crate::error::{Error, Result};
use crate::geometry::{Point, NEIGHBORS4, NEIGHBORS8};

/// Pixel adjacency used for region growing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(i32, i32)] {
        match self {
            Connectivity::Four => &NEIGHBORS4,
            Connectivity::Eight => &NEIGHBORS8,
        }
    }
}

/// Row-major boolean grid, `true` is foreground.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    /// All-background mask. Panics on a zero dimension.
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width >= 1 && height >= 1, "mask dimensions must be positive");
        BinaryMask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || bits.len() != width * height {
            return Err(Error::InvalidDimensions {
                width,
                height,
                len: bits.len(),
            });
        }
        Ok(BinaryMask {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(Point) -> bool) -> Self {
        let mut mask = BinaryMask::new(width, height);
        for y in 0..height {
            for x in 0..width {
                mask.bits[y * width + x] = f(Point::new(x as i32, y as i32));
            }
        }
        mask
    }

    /// Mask from rows of text, `#` or `1` is foreground.
    pub fn from_ascii(rows: &[&str]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut bits = Vec::with_capacity(width * height);
        for row in rows {
            if row.chars().count() != width {
                return Err(Error::InvalidDimensions {
                    width,
                    height,
                    len: row.chars().count(),
                });
            }
            bits.extend(row.chars().map(|c| c == '#' || c == '1'));
        }
        BinaryMask::from_bits(width, height, bits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn in_bounds(&self, p: Point) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height
    }

    /// Foreground test; out-of-grid pixels read as background.
    pub fn get(&self, p: Point) -> bool {
        self.in_bounds(p) && self.bits[p.y as usize * self.width + p.x as usize]
    }

    /// Panics when `p` is outside the grid.
    pub fn set(&mut self, p: Point, value: bool) {
        assert!(self.in_bounds(p), "{p} outside {}x{}", self.width, self.height);
        self.bits[p.y as usize * self.width + p.x as usize] = value;
    }

    /// Foreground area in pixels.
    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Foreground pixels in raster order.
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| {
            Point::new((i % self.width) as i32, (i / self.width) as i32)
        })
    }

    pub fn same_size(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// True when every foreground pixel of `self` is foreground in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.same_size(other) && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn intersection_area(&self, other: &BinaryMask) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(&a, &b)| a && b).count()
    }

    /// Area of the symmetric difference.
    pub fn xor_area(&self, other: &BinaryMask) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(&a, &b)| a != b).count()
    }

    /// Labels each pixel with its component index under `connectivity`,
    /// scanning in raster order. Returns the labels and the component count.
    fn label(&self, value: bool, connectivity: Connectivity) -> (Vec<Option<u32>>, usize) {
        let mut labels = vec![None; self.bits.len()];
        let mut count = 0u32;
        let mut queue = VecDeque::new();
        for start in 0..self.bits.len() {
            if self.bits[start] != value || labels[start].is_some() {
                continue;
            }
            labels[start] = Some(count);
            queue.push_back(start);
            while let Some(i) = queue.pop_front() {
                let p = Point::new((i % self.width) as i32, (i / self.width) as i32);
                for &(dx, dy) in connectivity.offsets() {
                    let q = p.offset(dx, dy);
                    if !self.in_bounds(q) {
                        continue;
                    }
                    let j = q.y as usize * self.width + q.x as usize;
                    if self.bits[j] == value && labels[j].is_none() {
                        labels[j] = Some(count);
                        queue.push_back(j);
                    }
                }
            }
            count += 1;
        }
        (labels, count as usize)
    }

    /// Number of foreground components under `connectivity`.
    pub fn component_count(&self, connectivity: Connectivity) -> usize {
        self.label(true, connectivity).1
    }

    /// Splits the foreground into connected regions, largest first; equal
    /// areas keep raster order of their top-left-most pixel.
    pub fn connected_components(&self, connectivity: Connectivity) -> Vec<BinaryMask> {
        let (labels, count) = self.label(true, connectivity);
        let mut parts = vec![BinaryMask::new(self.width, self.height); count];
        let mut areas = vec![0usize; count];
        for (i, label) in labels.iter().enumerate() {
            if let Some(l) = label {
                parts[*l as usize].bits[i] = true;
                areas[*l as usize] += 1;
            }
        }
        // labels are assigned in raster order of first pixel, so a stable
        // sort on area alone gives the tie rule
        let mut order: Vec<usize> = (0..count).collect();
        order.sort_by(|&a, &b| areas[b].cmp(&areas[a]));
        order.into_iter().map(|i| std::mem::replace(&mut parts[i], BinaryMask::new(1, 1))).collect()
    }

    /// Fills background regions that are not 4-connected to the outside.
    pub fn fill_holes(&self) -> BinaryMask {
        let mut outside = vec![false; self.bits.len()];
        let mut queue = VecDeque::new();
        let w = self.width;
        let h = self.height;
        let seed = |i: usize, outside: &mut Vec<bool>, queue: &mut VecDeque<usize>| {
            if !self.bits[i] && !outside[i] {
                outside[i] = true;
                queue.push_back(i);
            }
        };
        for x in 0..w {
            seed(x, &mut outside, &mut queue);
            seed((h - 1) * w + x, &mut outside, &mut queue);
        }
        for y in 0..h {
            seed(y * w, &mut outside, &mut queue);
            seed(y * w + w - 1, &mut outside, &mut queue);
        }
        while let Some(i) = queue.pop_front() {
            let p = Point::new((i % w) as i32, (i / w) as i32);
            for q in p.neighbors4() {
                if self.in_bounds(q) {
                    let j = q.y as usize * w + q.x as usize;
                    if !self.bits[j] && !outside[j] {
                        outside[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        BinaryMask {
            width: w,
            height: h,
            bits: outside.into_iter().map(|o| !o).collect(),
        }
    }

    /// Number of holes: 4-connected background regions enclosed by foreground.
    pub fn hole_count(&self) -> usize {
        let filled = self.fill_holes();
        let holes = BinaryMask {
            width: self.width,
            height: self.height,
            bits: filled.bits.iter().zip(&self.bits).map(|(&f, &b)| f && !b).collect(),
        };
        holes.component_count(Connectivity::Four)
    }

    /// Reads a single-channel PNG (or any format `image` decodes); pixels
    /// with luma `>= threshold` are foreground.
    pub fn load(path: impl AsRef<Path>, threshold: u8) -> Result<Self> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(BinaryMask::from_luma(&img.to_luma8(), threshold))
    }

    /// Loads a mask PNG where any nonzero value is foreground.
    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        BinaryMask::load(path, 1)
    }

    pub fn from_luma(img: &GrayImage, threshold: u8) -> Self {
        let (w, h) = img.dimensions();
        BinaryMask {
            width: w as usize,
            height: h as usize,
            bits: img.pixels().map(|p| p.0[0] >= threshold).collect(),
        }
    }

    /// 0 for background, 255 for foreground.
    pub fn to_luma(&self) -> GrayImage {
        GrayImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            Luma([if self.bits[y as usize * self.width + x as usize] { 255 } else { 0 }])
        })
    }

    /// PNG encoding of [`BinaryMask::to_luma`].
    pub fn to_png_bytes(&self) -> Result<Vec<u8>> {
        let mut out = std::io::Cursor::new(Vec::new());
        self.to_luma().write_to(&mut out, image::ImageFormat::Png)?;
        Ok(out.into_inner())
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.to_luma()
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(Error::from)
    }
}
