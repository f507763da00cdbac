//! AEP and tolerance F1 of predicted skeletons against ground truth, and
//! the bulls-eye score of a similarity matrix over the same items.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;
use serde::Serialize;
use skelforge_core::metrics::{class_label, default_tolerance, load_similarity_csv};
use skelforge_core::storage::canonical_json;
use skelforge_core::{aep, bulls_eye, f1_score, BinaryMask, SkeletonRaster};

use super::{csv_bytes, fmt6, require_dir, write};
use crate::{config, CliError, CliResult, EvalArgs};

/// Skeleton images under `dir`: `<id>.png` files and `<id>/skeleton.png`
/// record folders, keyed by id.
pub fn skeleton_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>, CliError> {
    let mut out = BTreeMap::new();
    let entries = fs::read_dir(dir).map_err(|e| config(format!("reading {}: {e}", dir.display())))?;
    for path in entries.filter_map(|e| e.ok().map(|e| e.path())) {
        let Some(stem) = path.file_stem().map(|s| s.to_string_lossy().into_owned()) else {
            continue;
        };
        if path.is_dir() && path.join("skeleton.png").is_file() {
            out.insert(stem, path.join("skeleton.png"));
        } else if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            out.insert(stem, path);
        }
    }
    Ok(out)
}

fn load_skeleton(path: &Path) -> skelforge_core::Result<SkeletonRaster> {
    Ok(SkeletonRaster::from_mask(&BinaryMask::load_png(path)?))
}

#[derive(Clone, Debug, Serialize)]
pub struct ItemScore {
    pub id: String,
    pub aep: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tolerance: f64,
}

fn score(id: &str, predicted: &Path, gt: &Path, tolerance: Option<f64>) -> Result<ItemScore, String> {
    let p = load_skeleton(predicted).map_err(|e| e.to_string())?;
    let g = load_skeleton(gt).map_err(|e| e.to_string())?;
    if p.width() != g.width() || p.height() != g.height() {
        return Err(format!("size {}x{} vs ground truth {}x{}", p.width(), p.height(), g.width(), g.height()));
    }
    let tolerance = tolerance.unwrap_or_else(|| default_tolerance(g.width(), g.height()));
    let f = f1_score(&p, &g, tolerance);
    Ok(ItemScore {
        id: id.to_string(),
        aep: aep(&p, &g).map_err(|e| e.to_string())?,
        precision: f.precision,
        recall: f.recall,
        f1: f.f1,
        tolerance,
    })
}

#[derive(Serialize)]
struct Summary {
    count: usize,
    mean_aep: f64,
    mean_f1: f64,
    bes: Option<f64>,
    failures: Vec<String>,
}

/// Bulls-eye score with labels taken from the ids; every class must have
/// the same size.
pub fn bes_for(ids: &[String], similarity: &Path) -> Result<f64, CliError> {
    let matrix = load_similarity_csv(similarity)?;
    if matrix.len() != ids.len() {
        return Err(config(format!("similarity matrix has {} rows for {} items", matrix.len(), ids.len())));
    }
    let labels: Vec<String> = ids.iter().map(|i| class_label(i)).collect();
    let per_class = labels.iter().filter(|l| **l == labels[0]).count();
    bulls_eye(&matrix, &labels, per_class).map_err(CliError::from)
}

pub fn run(args: &EvalArgs) -> CliResult {
    require_dir(&args.input, "prediction directory")?;
    require_dir(&args.gt, "GT directory")?;
    let predicted = skeleton_files(&args.input)?;
    let gt = skeleton_files(&args.gt)?;
    let only_pred: Vec<&String> = predicted.keys().filter(|k| !gt.contains_key(*k)).collect();
    let only_gt: Vec<&String> = gt.keys().filter(|k| !predicted.contains_key(*k)).collect();
    if !only_pred.is_empty() || !only_gt.is_empty() {
        let message = format!("ids only predicted: {only_pred:?}; ids only in GT: {only_gt:?}");
        if args.intersect {
            warn!("{message}");
        } else {
            return Err(config(format!("{message} (pass --intersect to evaluate the common ids)")));
        }
    }
    let ids: Vec<String> = predicted.keys().filter(|k| gt.contains_key(*k)).cloned().collect();
    if ids.is_empty() {
        return Err(config("no ids to evaluate"));
    }
    let results: Vec<_> = ids.par_iter().map(|id| score(id, &predicted[id], &gt[id], args.tolerance)).collect();
    let mut scores = Vec::new();
    let mut failures = Vec::new();
    for (id, r) in ids.iter().zip(results) {
        match r {
            Ok(s) => scores.push(s),
            Err(e) => {
                eprintln!("{id}: {e}");
                failures.push(format!("{id}: {e}"));
            }
        }
    }
    let bes = args.similarity.as_deref().map(|p| bes_for(&ids, p)).transpose()?;
    let n = scores.len().max(1) as f64;
    let summary = Summary {
        count: scores.len(),
        mean_aep: scores.iter().map(|s| s.aep).sum::<f64>() / n,
        mean_f1: scores.iter().map(|s| s.f1).sum::<f64>() / n,
        bes,
        failures,
    };

    let mut rows: Vec<Vec<String>> = scores
        .iter()
        .map(|s| vec![s.id.clone(), fmt6(s.aep), fmt6(s.precision), fmt6(s.recall), fmt6(s.f1), fmt6(s.tolerance)])
        .collect();
    rows.push(vec![
        "mean".into(),
        fmt6(summary.mean_aep),
        fmt6(scores.iter().map(|s| s.precision).sum::<f64>() / n),
        fmt6(scores.iter().map(|s| s.recall).sum::<f64>() / n),
        fmt6(summary.mean_f1),
        String::new(),
    ]);
    let csv = csv_bytes(&["id", "aep", "precision", "recall", "f1", "tolerance"], &rows)?;
    println!("{} item(s): mean AEP {:.4}, mean F1 {:.4}", summary.count, summary.mean_aep, summary.mean_f1);
    if let Some(b) = bes {
        println!("BES {b:.2}%");
    }
    match &args.output {
        Some(out) => {
            write(&out.join("eval.csv"), &csv)?;
            write(&out.join("eval.json"), &canonical_json(&summary)?)?;
        }
        None => print!("{}", String::from_utf8_lossy(&csv)),
    }
    if summary.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Items {
            failed: summary.failures.len(),
        })
    }
}
