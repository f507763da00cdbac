pub mod eval;
pub mod integrate;
pub mod report;
pub mod skeletonize;

use std::fs;
use std::path::{Path, PathBuf};

use skelforge_core::storage::write_atomic;

use crate::{config, CliError};

pub(crate) fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| config(format!("creating {}: {e}", dir.display())))?;
    }
    write_atomic(path, bytes).map_err(CliError::from)
}

pub(crate) fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| config(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| config(e.to_string()))?;
    }
    w.into_inner().map_err(|e| config(e.to_string()))
}

pub(crate) fn require_dir(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(config(format!("{what} {} is not a directory", path.display())))
    }
}

/// Sorted subdirectories of `dir`.
pub(crate) fn subdirs(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| config(format!("reading {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    out.sort();
    Ok(out)
}

/// Every directory under `root` (itself included) holding a `gt.json`, in
/// sorted depth-first order.
pub(crate) fn record_dirs(root: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        if dir.join("gt.json").is_file() {
            out.push(dir.clone());
        }
        let mut children = subdirs(&dir)?;
        children.reverse();
        stack.extend(children);
    }
    Ok(out)
}

pub(crate) fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}
