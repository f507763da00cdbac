pub mod consensus;
pub mod contour;
pub mod dce;
pub mod distance;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod ladder;
pub mod mask;
pub mod metrics;
pub mod session;
pub mod skeleton;
pub mod storage;
pub mod synth;
pub mod topology;

pub use contour::{trace_boundary, Contour};
pub use distance::{distance_transform, DistanceField};
pub use error::{Error, Result};
pub use geometry::{Point, Rect};
pub use mask::{BinaryMask, Connectivity};
pub use skeleton::{medial_axis, SkeletonRaster};
pub use dce::{dce_evolve, DcePolygon, DceSchedule};
pub use graph::{decompose, geodesic_path, prune_branch, prune_by_boxes, Branch, BranchId, NodeKind, SkeletonGraph};
pub use ladder::{build_ladder, build_ladder_with, CandidateLadder, LadderOptions};
pub use metrics::{aep, bulls_eye, f1_score, reconstruct, reconstruction_error, simplicity, F1Score, MetricReport};
pub use consensus::{integrate, merge_branches, AnnotatorSubmission, Integration, Rationale};
pub use session::{AnnotationSession, EditEvent, SessionView};
pub use storage::{export_gt, import_gt, load_dataset, load_ladder, save_ladder, Dataset, DatasetKind, GtRecord, Provenance};
