//! Consensus over annotators' exports: `<input>/<annotator>/<id>/gt.json`
//! becomes `<output>/<id>/gt.json` plus `integration.csv`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use skelforge_core::{export_gt, import_gt, integrate, AnnotatorSubmission, GtRecord, Provenance};

use super::{csv_bytes, fmt6, require_dir, subdirs, write};
use crate::{config, CliError, CliResult, IntegrateArgs};

fn integrate_one(id: &str, exports: &[(String, PathBuf)], out: &std::path::Path) -> Result<Vec<String>, String> {
    let mut records = Vec::new();
    for (annotator, dir) in exports {
        records.push((annotator.clone(), import_gt(dir).map_err(|e| format!("{annotator}: {e}"))?));
    }
    let shape = records[0].1.shape.clone();
    if let Some((a, _)) = records.iter().find(|(_, r)| r.shape != shape) {
        return Err(format!("annotator {a} used a different shape"));
    }
    let subs = records
        .iter()
        .map(|(a, r)| AnnotatorSubmission::new(a.clone(), r.skeleton.clone(), &shape))
        .collect::<skelforge_core::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let chosen = integrate(&subs, &shape, None).map_err(|e| e.to_string())?;
    let first = &records[0].1.provenance;
    let provenance = Provenance {
        annotator_ids: subs.iter().map(|s| s.annotator_id.clone()).collect(),
        k_min: first.k_min,
        k_max: first.k_max,
        rationale: Some(chosen.rationale.to_string()),
        ..Provenance::default()
    };
    let record = GtRecord::new(id, &chosen.skeleton, &shape, records[0].1.object.clone(), provenance)
        .map_err(|e| e.to_string())?;
    export_gt(&record, out).map_err(|e| e.to_string())?;
    Ok(vec![
        id.to_string(),
        subs.len().to_string(),
        chosen.rationale.to_string(),
        chosen.supporters.join(" "),
        fmt6(record.re),
        fmt6(record.ss),
    ])
}

pub fn run(args: &IntegrateArgs) -> CliResult {
    require_dir(&args.input, "annotation directory")?;
    let mut by_id: BTreeMap<String, Vec<(String, PathBuf)>> = BTreeMap::new();
    for annotator_dir in subdirs(&args.input)? {
        let annotator = annotator_dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        for record_dir in subdirs(&annotator_dir)? {
            if record_dir.join("gt.json").is_file() {
                let id = record_dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                by_id.entry(id).or_default().push((annotator.clone(), record_dir));
            }
        }
    }
    if by_id.is_empty() {
        return Err(config(format!("no <annotator>/<id>/gt.json exports under {}", args.input.display())));
    }
    let jobs: Vec<_> = by_id.iter().collect();
    let results: Vec<_> = jobs.par_iter().map(|(id, ex)| integrate_one(id, ex, &args.output)).collect();
    let mut rows = Vec::new();
    let mut failed = 0;
    for ((id, _), r) in jobs.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                eprintln!("{id}: {e}");
                failed += 1;
            }
        }
    }
    let header = ["id", "annotators", "rationale", "supporters", "re", "ss"];
    write(&args.output.join("integration.csv"), &csv_bytes(&header, &rows)?)?;
    println!("integrated {} shape(s), {failed} failure(s)", rows.len());
    if failed > 0 {
        Err(CliError::Items { failed })
    } else {
        Ok(())
    }
}
