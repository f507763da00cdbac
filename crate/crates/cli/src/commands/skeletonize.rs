//! Per shape: candidate ladder, one GT record and an RE/SS plot.
//!
//! Output layout:
//! `ladders/<id>.json`, `gt/<id>/…`, `plots/<id>.png`, `summary.json`.

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use skelforge_core::ladder::LadderOptions;
use skelforge_core::metrics::mean_re_ss;
use skelforge_core::storage::{canonical_json, DatasetItem, FORMAT_VERSION};
use skelforge_core::{
    build_ladder_with, export_gt, load_dataset, reconstruction_error, save_ladder, simplicity, CandidateLadder,
    DatasetKind, GtRecord, Provenance,
};

use super::write;
use crate::{config, plot, CliError, CliResult, SkeletonizeArgs};

#[derive(Serialize)]
struct Row {
    id: String,
    label: String,
    step: usize,
    steps: usize,
    dce_k: usize,
    re: f64,
    ss: f64,
    endpoints: usize,
    junctions: usize,
}

#[derive(Serialize)]
struct Failure {
    id: String,
    error: String,
}

#[derive(Serialize)]
struct Summary {
    format_version: u32,
    options: LadderOptions,
    min_ss: Option<f64>,
    count: usize,
    mean_re: Option<f64>,
    mean_ss: Option<f64>,
    items: Vec<Row>,
    failures: Vec<Failure>,
}

/// Step recorded for a ladder: 0, or the lowest-RE step with SS at least
/// `min_ss` (the last step when none qualifies).
pub fn select_step(metrics: &[(f64, f64)], min_ss: Option<f64>) -> usize {
    let Some(min_ss) = min_ss else { return 0 };
    metrics
        .iter()
        .enumerate()
        .filter(|(_, m)| m.1 >= min_ss)
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .unwrap_or(metrics.len() - 1)
}

fn ladder_metrics(ladder: &CandidateLadder) -> skelforge_core::Result<Vec<(f64, f64)>> {
    ladder
        .steps
        .iter()
        .map(|s| Ok((reconstruction_error(s, &ladder.shape)?, simplicity(s))))
        .collect()
}

fn process(item: &DatasetItem, args: &SkeletonizeArgs, options: LadderOptions) -> Result<Row, String> {
    let out = &args.output;
    let ladder = build_ladder_with(&item.mask, options).map_err(|e| e.to_string())?;
    let metrics = ladder_metrics(&ladder).map_err(|e| e.to_string())?;
    let step = select_step(&metrics, args.min_ss);
    save_ladder(&ladder, out.join("ladders").join(format!("{}.json", item.id))).map_err(|e| e.to_string())?;
    plot::re_ss_curve(&out.join("plots").join(format!("{}.png", item.id)), &metrics)?;
    let provenance = Provenance {
        k_min: options.k_min,
        k_max: options.k_max,
        ladder_step: Some(step),
        dce_k: Some(ladder.dce_k[step]),
        ..Provenance::default()
    };
    let object = item.image.as_ref().map(|_| item.mask.clone());
    let record =
        GtRecord::new(item.id.clone(), &ladder.steps[step], &ladder.shape, object, provenance).map_err(|e| e.to_string())?;
    export_gt(&record, out.join("gt")).map_err(|e| e.to_string())?;
    info!("{}: step {step}/{}, re {:.4}, ss {:.4}", item.id, ladder.len(), record.re, record.ss);
    Ok(Row {
        id: item.id.clone(),
        label: item.label.clone(),
        step,
        steps: ladder.len(),
        dce_k: ladder.dce_k[step],
        re: record.re,
        ss: record.ss,
        endpoints: record.endpoints.len(),
        junctions: record.junctions.len(),
    })
}

pub fn run(args: &SkeletonizeArgs) -> CliResult {
    let kind = if args.input.join("masks").is_dir() {
        DatasetKind::ImagesWithMasks
    } else {
        DatasetKind::Shapes
    };
    let dataset = load_dataset(&args.input, kind)?;
    let options = args.ladder.options();
    for sub in ["ladders", "plots", "gt"] {
        let dir = args.output.join(sub);
        std::fs::create_dir_all(&dir).map_err(|e| config(format!("creating {}: {e}", dir.display())))?;
    }
    let results: Vec<Result<Row, String>> = dataset.items.par_iter().map(|item| process(item, args, options)).collect();

    let mut items = Vec::new();
    let mut failures: Vec<Failure> = dataset
        .errors
        .iter()
        .map(|e| Failure {
            id: match e {
                skelforge_core::Error::Decode { path, .. } => {
                    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
                }
                _ => String::new(),
            },
            error: e.to_string(),
        })
        .collect();
    for (item, result) in dataset.items.iter().zip(results) {
        match result {
            Ok(row) => items.push(row),
            Err(error) => {
                warn!("{}: {error}", item.id);
                failures.push(Failure { id: item.id.clone(), error });
            }
        }
    }
    failures.sort_by(|a, b| a.id.cmp(&b.id));
    let means = mean_re_ss(&items.iter().map(|r| (r.re, r.ss)).collect::<Vec<_>>());
    let summary = Summary {
        format_version: FORMAT_VERSION,
        options,
        min_ss: args.min_ss,
        count: items.len(),
        mean_re: means.map(|m| m.0),
        mean_ss: means.map(|m| m.1),
        items,
        failures,
    };
    write(&args.output.join("summary.json"), &canonical_json(&summary)?)?;
    println!(
        "skeletonized {} shape(s), {} failure(s) -> {}",
        summary.count,
        summary.failures.len(),
        args.output.display()
    );
    if summary.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Items {
            failed: summary.failures.len(),
        })
    }
}
