//! On-disk formats: dataset folders, ground-truth records, ladder files and
//! the canonical JSON writer shared by all of them.
//!
//! Coordinates everywhere are `(x, y)` pixel indices with the origin at the
//! top-left corner, `x` to the right and `y` downwards.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Cursor, Write};
use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use image::{DynamicImage, ImageFormat, Rgba, RgbaImage};
use log::{debug, warn};
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};

use crate::contour::trace_boundary;
use crate::distance::distance_transform;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::graph::BranchId;
use crate::ladder::{CandidateLadder, LadderOptions};
use crate::mask::BinaryMask;
use crate::metrics::{class_label, reconstruction_error, simplicity};
use crate::skeleton::SkeletonRaster;

/// Version written to every file this module produces.
pub const FORMAT_VERSION: u32 = 1;

pub const COORDINATE_CONVENTION: &str = "(x, y) pixel indices, origin top-left, x right, y down";

/// Foreground threshold for dataset images.
pub const BINARIZE_THRESHOLD: u8 = 128;

const IMAGE_EXTENSIONS: [&str; 5] = ["png", "gif", "jpg", "jpeg", "bmp"];

/// Pretty JSON with every float written with exactly six decimals.
struct CanonicalFormatter {
    inner: PrettyFormatter<'static>,
}

impl Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.6}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{value:.6}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

/// Serializes `value` with sorted keys and six-decimal floats, newline
/// terminated. Equal values always give identical bytes.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    // Going through `Value` sorts object keys.
    let value = serde_json::to_value(value)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut out,
        CanonicalFormatter {
            inner: PrettyFormatter::with_indent(b"  "),
        },
    );
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

/// Rounds to the six decimals the canonical writer keeps.
pub fn round6(v: f64) -> f64 {
    format!("{v:.6}").parse().expect("formatted float parses")
}

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn encode_png(img: DynamicImage) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)?;
    Ok(buf.into_inner())
}

fn decode_image(path: &Path) -> Result<DynamicImage> {
    let bytes = read(path)?;
    image::load_from_memory(&bytes).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Thresholds at [`BINARIZE_THRESHOLD`]. Silhouettes drawn dark on a light
/// background are inverted: the foreground is whichever value covers less
/// of the image border.
pub fn binarize(img: &DynamicImage) -> BinaryMask {
    let mask = BinaryMask::from_luma(&img.to_luma8(), BINARIZE_THRESHOLD);
    let (w, h) = (mask.width() as i32, mask.height() as i32);
    let border: Vec<Point> = (0..w)
        .flat_map(|x| [Point::new(x, 0), Point::new(x, h - 1)])
        .chain((0..h).flat_map(|y| [Point::new(0, y), Point::new(w - 1, y)]))
        .collect();
    let on = border.iter().filter(|&&p| mask.get(p)).count();
    if 2 * on > border.len() {
        BinaryMask::from_fn(mask.width(), mask.height(), |p| !mask.get(p))
    } else {
        mask
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// A flat folder of binary silhouettes.
    Shapes,
    /// `masks/` holds one object mask per item and `images/` the natural
    /// image with the same file stem, if any.
    ImagesWithMasks,
}

#[derive(Clone, Debug)]
pub struct DatasetItem {
    /// File stem.
    pub id: String,
    /// Class label derived from the stem.
    pub label: String,
    pub path: PathBuf,
    pub mask: BinaryMask,
    pub image: Option<PathBuf>,
}

/// Everything found under a dataset root. Files that fail to decode are
/// listed in `errors` and do not stop the scan.
#[derive(Debug, Default)]
pub struct Dataset {
    pub items: Vec<DatasetItem>,
    pub errors: Vec<Error>,
}

fn image_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Loads every image under `root` in lexicographic file order.
pub fn load_dataset(root: impl AsRef<Path>, kind: DatasetKind) -> Result<Dataset> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(Error::MissingRoot(root.to_path_buf()));
    }
    let mask_dir = match kind {
        DatasetKind::Shapes => root.to_path_buf(),
        DatasetKind::ImagesWithMasks => root.join("masks"),
    };
    if !mask_dir.is_dir() {
        return Err(Error::MissingRoot(mask_dir));
    }
    let images: BTreeMap<String, PathBuf> = match kind {
        DatasetKind::ImagesWithMasks if root.join("images").is_dir() => image_files(&root.join("images"))?
            .into_iter()
            .map(|p| (stem(&p), p))
            .collect(),
        _ => BTreeMap::new(),
    };
    let mut dataset = Dataset::default();
    for path in image_files(&mask_dir)? {
        let mask = match decode_image(&path) {
            Ok(img) => match kind {
                DatasetKind::Shapes => binarize(&img),
                DatasetKind::ImagesWithMasks => BinaryMask::from_luma(&img.to_luma8(), BINARIZE_THRESHOLD),
            },
            Err(e) => {
                warn!("skipping {}: {e}", path.display());
                dataset.errors.push(e);
                continue;
            }
        };
        let id = stem(&path);
        debug!("loaded {id}: {}x{}, area {}", mask.width(), mask.height(), mask.area());
        dataset.items.push(DatasetItem {
            label: class_label(&id),
            image: images.get(&id).cloned(),
            id,
            path,
            mask,
        });
    }
    Ok(dataset)
}

/// Where a ground-truth skeleton came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub annotator_ids: Vec<String>,
    pub k_min: usize,
    pub k_max: usize,
    /// Ladder step the annotator settled on, if the skeleton came from one
    /// session.
    pub ladder_step: Option<usize>,
    /// DCE vertex count of that step.
    pub dce_k: Option<usize>,
    /// Branches pruned by hand after the last ladder step, in order.
    pub pruned_branch_ids: Vec<BranchId>,
    /// Consensus rule, for integrated skeletons.
    pub rationale: Option<String>,
    pub tool_version: String,
}

impl Default for Provenance {
    fn default() -> Self {
        let options = LadderOptions::default();
        Provenance {
            annotator_ids: Vec::new(),
            k_min: options.k_min,
            k_max: options.k_max,
            ladder_step: None,
            dce_k: None,
            pruned_branch_ids: Vec::new(),
            rationale: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// One ground-truth skeleton with everything derived from it.
#[derive(Clone, Debug, PartialEq)]
pub struct GtRecord {
    pub id: String,
    /// Radii are the distance transform of `shape`.
    pub skeleton: SkeletonRaster,
    pub shape: BinaryMask,
    /// Outer contour pixels of `shape`.
    pub boundary: BinaryMask,
    /// Object mask from a natural-image dataset.
    pub object: Option<BinaryMask>,
    pub endpoints: Vec<Point>,
    pub junctions: Vec<Point>,
    /// Reconstruction error and simplicity, rounded to six decimals.
    pub re: f64,
    pub ss: f64,
    pub provenance: Provenance,
}

impl GtRecord {
    /// Derives radii, nodes, boundary and metrics for `skeleton` on `shape`.
    pub fn new(
        id: impl Into<String>,
        skeleton: &SkeletonRaster,
        shape: &BinaryMask,
        object: Option<BinaryMask>,
        provenance: Provenance,
    ) -> Result<GtRecord> {
        if skeleton.width() != shape.width() || skeleton.height() != shape.height() {
            return Err(Error::DimensionMismatch(format!(
                "skeleton {}x{} vs shape {}x{}",
                skeleton.width(),
                skeleton.height(),
                shape.width(),
                shape.height()
            )));
        }
        let field = distance_transform(shape);
        let skeleton = skeleton.clone().with_radii_from(&field);
        let boundary = trace_boundary(shape)?.rasterize(shape.width(), shape.height());
        let re = round6(reconstruction_error(&skeleton, shape)?);
        let ss = round6(simplicity(&skeleton));
        let record = GtRecord {
            id: id.into(),
            endpoints: skeleton.endpoints(),
            junctions: skeleton.junctions(),
            skeleton,
            shape: shape.clone(),
            boundary,
            object,
            re,
            ss,
            provenance,
        };
        record.check()?;
        Ok(record)
    }

    /// Verifies that every derived field agrees with skeleton and shape.
    pub fn check(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvariantViolation(m));
        let (w, h) = (self.shape.width(), self.shape.height());
        if self.skeleton.width() != w || self.skeleton.height() != h {
            return fail("skeleton and shape sizes differ".into());
        }
        if !self.boundary.same_size(&self.shape) || self.object.as_ref().is_some_and(|o| !o.same_size(&self.shape)) {
            return fail("boundary or object size differs from the shape".into());
        }
        if let Some(p) = self.skeleton.points().iter().find(|&&p| !self.shape.get(p)) {
            return fail(format!("skeleton point {p} lies outside the shape"));
        }
        if self.endpoints != self.skeleton.endpoints() {
            return fail("endpoint list does not match the skeleton".into());
        }
        if self.junctions != self.skeleton.junctions() {
            return fail("junction list does not match the skeleton".into());
        }
        let boundary = trace_boundary(&self.shape)?.rasterize(w, h);
        if boundary != self.boundary {
            return fail("boundary does not match the shape contour".into());
        }
        let field = distance_transform(&self.shape);
        if self.skeleton.radii().len() != self.skeleton.len()
            || self.skeleton.radii().iter().any(|(&p, &r)| r != field.get(p))
        {
            return fail("radii differ from the shape's distance transform".into());
        }
        let re = round6(reconstruction_error(&self.skeleton, &self.shape)?);
        let ss = round6(simplicity(&self.skeleton));
        if re != self.re || ss != self.ss {
            return fail(format!(
                "stored metrics re={} ss={} differ from recomputed re={re} ss={ss}",
                self.re, self.ss
            ));
        }
        Ok(())
    }

    /// Red skeleton over the shape drawn at half opacity.
    pub fn thumbnail(&self) -> RgbaImage {
        RgbaImage::from_fn(self.shape.width() as u32, self.shape.height() as u32, |x, y| {
            let p = Point::new(x as i32, y as i32);
            if self.skeleton.contains(p) {
                Rgba([255, 0, 0, 255])
            } else if self.shape.get(p) {
                Rgba([0, 0, 0, 128])
            } else {
                Rgba([0, 0, 0, 0])
            }
        })
    }
}

fn point_list(points: &[Point]) -> Value {
    Value::Array(points.iter().map(|p| json!([p.x, p.y])).collect())
}

fn parse_points(value: &Value, what: &str) -> Result<Vec<Point>> {
    let bad = || Error::InvariantViolation(format!("malformed {what} list"));
    value
        .as_array()
        .ok_or_else(bad)?
        .iter()
        .map(|v| {
            let xy = v.as_array().filter(|a| a.len() == 2).ok_or_else(bad)?;
            let x = xy[0].as_i64().ok_or_else(bad)?;
            let y = xy[1].as_i64().ok_or_else(bad)?;
            Ok(Point::new(x as i32, y as i32))
        })
        .collect()
}

fn gt_json(record: &GtRecord) -> Result<Vec<u8>> {
    let value = json!({
        "format_version": FORMAT_VERSION,
        "coordinates": COORDINATE_CONVENTION,
        "id": record.id,
        "width": record.shape.width(),
        "height": record.shape.height(),
        "files": {
            "skeleton": "skeleton.png",
            "shape": "shape.png",
            "boundary": "boundary.png",
            "object": record.object.as_ref().map(|_| "object.png"),
            "thumbnail": "thumb.png",
        },
        "endpoints": point_list(&record.endpoints),
        "junctions": point_list(&record.junctions),
        "skeleton_points": record.skeleton.len(),
        "metrics": { "re": record.re, "ss": record.ss },
        "provenance": record.provenance,
    });
    canonical_json(&value)
}

/// Writes the record into `out_dir/<id>/` and returns that directory. Every
/// file is replaced atomically; exporting the same record twice gives
/// byte-identical files.
pub fn export_gt(record: &GtRecord, out_dir: impl AsRef<Path>) -> Result<PathBuf> {
    record.check()?;
    let dir = out_dir.as_ref().join(&record.id);
    let png = |m: &BinaryMask| encode_png(DynamicImage::ImageLuma8(m.to_luma()));
    write_atomic(&dir.join("skeleton.png"), &png(&record.skeleton.to_mask())?)?;
    write_atomic(&dir.join("shape.png"), &png(&record.shape)?)?;
    write_atomic(&dir.join("boundary.png"), &png(&record.boundary)?)?;
    if let Some(object) = &record.object {
        write_atomic(&dir.join("object.png"), &png(object)?)?;
    }
    write_atomic(
        &dir.join("thumb.png"),
        &encode_png(DynamicImage::ImageRgba8(record.thumbnail()))?,
    )?;
    write_atomic(&dir.join("gt.json"), &gt_json(record)?)?;
    Ok(dir)
}

fn load_mask(path: &Path) -> Result<BinaryMask> {
    Ok(BinaryMask::from_luma(&decode_image(path)?.to_luma8(), BINARIZE_THRESHOLD))
}

/// Reads a record written by [`export_gt`] and re-checks its invariants.
pub fn import_gt(dir: impl AsRef<Path>) -> Result<GtRecord> {
    let dir = dir.as_ref();
    let json_path = dir.join("gt.json");
    let doc: Value = serde_json::from_slice(&read(&json_path)?)?;
    let version = doc["format_version"].as_u64().unwrap_or(0) as u32;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let field = |name: &str| -> Result<&Value> {
        doc.get(name)
            .ok_or_else(|| Error::InvariantViolation(format!("gt.json lacks `{name}`")))
    };
    let file = |name: &str| doc["files"][name].as_str().map(|f| dir.join(f));
    let missing = |name: &str| Error::InvariantViolation(format!("gt.json names no {name} file"));

    let shape = load_mask(&file("shape").ok_or_else(|| missing("shape"))?)?;
    let skeleton_mask = load_mask(&file("skeleton").ok_or_else(|| missing("skeleton"))?)?;
    let boundary = load_mask(&file("boundary").ok_or_else(|| missing("boundary"))?)?;
    let object = file("object").map(|p| load_mask(&p)).transpose()?;
    let (w, h) = (field("width")?.as_u64(), field("height")?.as_u64());
    if w != Some(shape.width() as u64) || h != Some(shape.height() as u64) {
        return Err(Error::InvariantViolation("image size differs from gt.json".into()));
    }
    let skeleton = SkeletonRaster::from_mask(&skeleton_mask).with_radii_from(&distance_transform(&shape));
    let metrics = field("metrics")?;
    let number = |v: &Value, what: &str| {
        v.as_f64()
            .ok_or_else(|| Error::InvariantViolation(format!("malformed {what}")))
    };
    let record = GtRecord {
        id: field("id")?
            .as_str()
            .ok_or_else(|| Error::InvariantViolation("malformed id".into()))?
            .to_string(),
        endpoints: parse_points(field("endpoints")?, "endpoint")?,
        junctions: parse_points(field("junctions")?, "junction")?,
        re: number(&metrics["re"], "re")?,
        ss: number(&metrics["ss"], "ss")?,
        provenance: serde_json::from_value(field("provenance")?.clone())?,
        skeleton,
        shape,
        boundary,
        object,
    };
    record.check()?;
    Ok(record)
}

fn pack_bits(mask: &BinaryMask) -> String {
    let mut bytes = vec![0u8; mask.bits().len().div_ceil(8)];
    for (i, &b) in mask.bits().iter().enumerate() {
        if b {
            bytes[i / 8] |= 0x80 >> (i % 8);
        }
    }
    BASE64.encode(bytes)
}

fn unpack_bits(width: usize, height: usize, data: &str) -> Result<BinaryMask> {
    let bytes = BASE64
        .decode(data)
        .map_err(|e| Error::InvariantViolation(format!("bad mask encoding: {e}")))?;
    if bytes.len() != (width * height).div_ceil(8) {
        return Err(Error::InvalidDimensions {
            width,
            height,
            len: bytes.len() * 8,
        });
    }
    let bits = (0..width * height).map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0).collect();
    BinaryMask::from_bits(width, height, bits)
}

/// Serialized ladder: the mask as packed bits, the step-0 points with exact
/// radii, and every later step as indices into that list.
#[derive(Serialize, Deserialize)]
struct LadderFile {
    format_version: u32,
    coordinates: String,
    width: usize,
    height: usize,
    options: LadderOptions,
    /// Row-major bits, most significant bit first, base64.
    shape: String,
    dce_k: Vec<usize>,
    points: Vec<(i32, i32, f64)>,
    steps: Vec<Vec<usize>>,
}

pub fn save_ladder(ladder: &CandidateLadder, path: impl AsRef<Path>) -> Result<()> {
    let base = &ladder.steps[0];
    let points: Vec<(i32, i32, f64)> = base
        .points()
        .iter()
        .map(|&p| (p.x, p.y, base.radius(p).unwrap_or(0.0)))
        .collect();
    let index: BTreeMap<Point, usize> = base.points().iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let steps = ladder
        .steps
        .iter()
        .map(|s| s.points().iter().map(|p| index[p]).collect())
        .collect();
    let file = LadderFile {
        format_version: FORMAT_VERSION,
        coordinates: COORDINATE_CONVENTION.to_string(),
        width: ladder.shape.width(),
        height: ladder.shape.height(),
        options: ladder.options,
        shape: pack_bits(&ladder.shape),
        dce_k: ladder.dce_k.clone(),
        points,
        steps,
    };
    // Radii need full precision, so the canonical six-decimal writer is not
    // used here.
    let mut bytes = serde_json::to_vec(&file)?;
    bytes.push(b'\n');
    write_atomic(path.as_ref(), &bytes)
}

pub fn load_ladder(path: impl AsRef<Path>) -> Result<CandidateLadder> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::MissingLadder(path.to_path_buf()));
    }
    let file: LadderFile = serde_json::from_slice(&read(path)?)?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: file.format_version,
            expected: FORMAT_VERSION,
        });
    }
    let shape = unpack_bits(file.width, file.height, &file.shape)?;
    let mut steps = Vec::with_capacity(file.steps.len());
    for indices in &file.steps {
        let mut pts = Vec::with_capacity(indices.len());
        for &i in indices {
            let &(x, y, r) = file
                .points
                .get(i)
                .ok_or_else(|| Error::InvariantViolation(format!("ladder step refers to point {i}")))?;
            pts.push((Point::new(x, y), r));
        }
        steps.push(SkeletonRaster::from_points(file.width, file.height, pts.iter().map(|&(p, _)| p)).with_radii(pts));
    }
    if steps.is_empty() || steps.len() != file.dce_k.len() {
        return Err(Error::InvariantViolation("ladder step and k lists disagree".into()));
    }
    Ok(CandidateLadder {
        shape,
        options: file.options,
        steps,
        dce_k: file.dce_k,
    })
}
