//! Fixed inputs shared by the benchmarks.

use skelforge_core::synth;
use skelforge_core::BinaryMask;

/// Benchmark shapes by name: an articulated animal and two random blobs.
pub fn shapes(size: usize) -> Vec<(&'static str, BinaryMask)> {
    vec![
        ("quadruped", synth::quadruped(size as f64 / 128.0)),
        ("blob_a", synth::random_blob(7, size)),
        ("blob_b", synth::random_blob(11, size)),
    ]
}
