//! Mean RE and SS per dataset over exported GT records.
//!
//! A record's dataset is the path of its parent folder relative to the
//! input root, or the root's own name for records directly beneath it.
//! Metrics are recomputed from the imported skeleton and shape, not read
//! from the rounded values in `gt.json`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use log::warn;
use rayon::prelude::*;
use skelforge_core::metrics::mean_re_ss;
use skelforge_core::{import_gt, MetricReport};

use super::{csv_bytes, fmt6, record_dirs, require_dir, write};
use crate::{config, CliError, CliResult, ReportArgs};

pub struct RecordMetrics {
    pub dataset: String,
    pub id: String,
    pub re: f64,
    pub ss: f64,
}

fn dataset_of(root: &Path, dir: &Path) -> String {
    let parent = dir.parent().unwrap_or(root);
    match parent.strip_prefix(root) {
        Ok(rel) if !rel.as_os_str().is_empty() => rel.to_string_lossy().replace('\\', "/"),
        _ => root
            .canonicalize()
            .ok()
            .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_else(|| ".".into()),
    }
}

/// Per-dataset `(records, mean_re, mean_ss)`.
pub fn dataset_means(rows: &[RecordMetrics]) -> BTreeMap<String, (usize, f64, f64)> {
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        groups.entry(r.dataset.clone()).or_default().push((r.re, r.ss));
    }
    groups
        .into_iter()
        .map(|(k, v)| {
            let (re, ss) = mean_re_ss(&v).expect("groups are non-empty");
            (k, (v.len(), re, ss))
        })
        .collect()
}

/// Imports and re-measures every record under `root`. Unreadable records
/// are reported on stderr and counted in the second value.
pub fn collect(root: &Path) -> Result<(Vec<RecordMetrics>, usize), CliError> {
    require_dir(root, "GT directory")?;
    let dirs = record_dirs(root)?;
    if dirs.is_empty() {
        return Err(config(format!("no gt.json records under {}", root.display())));
    }
    let results: Vec<_> = dirs
        .par_iter()
        .map(|dir| {
            let record = import_gt(dir)?;
            let m = MetricReport::compute(&record.skeleton, &record.shape)?;
            Ok::<_, skelforge_core::Error>(RecordMetrics {
                dataset: dataset_of(root, dir),
                id: record.id,
                re: m.re,
                ss: m.ss,
            })
        })
        .collect();
    let mut rows = Vec::new();
    let mut failed = 0;
    for (dir, r) in dirs.iter().zip(results) {
        match r {
            Ok(m) => rows.push(m),
            Err(e) => {
                warn!("{}: {e}", dir.display());
                eprintln!("skipping {}: {e}", dir.display());
                failed += 1;
            }
        }
    }
    if rows.is_empty() {
        return Err(config("no readable GT records"));
    }
    Ok((rows, failed))
}

pub fn run(args: &ReportArgs) -> CliResult {
    let (rows, failed) = collect(&args.input)?;
    let means = dataset_means(&rows);

    let table: Vec<Vec<String>> = means
        .iter()
        .map(|(k, &(n, re, ss))| vec![k.clone(), n.to_string(), fmt6(re), fmt6(ss)])
        .collect();
    let mut text = String::new();
    let width = means.keys().map(String::len).max().unwrap_or(0).max(7);
    writeln!(text, "{:<width$}  {:>7}  {:>8}  {:>8}", "dataset", "records", "RE", "SS").unwrap();
    for (k, &(n, re, ss)) in &means {
        writeln!(text, "{k:<width$}  {n:>7}  {re:>8.4}  {ss:>8.4}").unwrap();
    }
    print!("{text}");
    let csv = csv_bytes(&["dataset", "records", "mean_re", "mean_ss"], &table)?;
    match &args.output {
        Some(out) => {
            let per_record: Vec<Vec<String>> = rows
                .iter()
                .map(|r| vec![r.dataset.clone(), r.id.clone(), fmt6(r.re), fmt6(r.ss)])
                .collect();
            write(&out.join("report.csv"), &csv)?;
            write(&out.join("records.csv"), &csv_bytes(&["dataset", "id", "re", "ss"], &per_record)?)?;
            write(&out.join("report.txt"), text.as_bytes())?;
        }
        None => print!("{}", String::from_utf8_lossy(&csv)),
    }
    if failed > 0 {
        Err(CliError::Items { failed })
    } else {
        Ok(())
    }
}
