//! One annotator working on one shape: moves along the candidate ladder and
//! prunes branches, with a branching undo history that can be saved and
//! replayed.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::graph::{decompose, prune_branch, BranchId, SkeletonGraph};
use crate::ladder::CandidateLadder;
use crate::mask::BinaryMask;
use crate::metrics::{reconstruction_error, simplicity};
use crate::skeleton::SkeletonRaster;
use crate::storage::{load_ladder, write_atomic, GtRecord, Provenance, FORMAT_VERSION};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditEvent {
    /// Root of the history: ladder step 0.
    Start,
    /// Move along the ladder: `+1` adds branches (towards step 0), `-1`
    /// removes them.
    Step { direction: i64 },
    Prune { branch_ids: Vec<BranchId> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub parent: Option<usize>,
    pub event: EditEvent,
    /// Ladder step the skeleton descends from.
    pub step: usize,
    pub re: f64,
    pub ss: f64,
    pub digest: String,
}

#[derive(Clone, Debug)]
pub struct AnnotationSession {
    pub id: String,
    pub shape_id: String,
    pub annotator_id: String,
    ladder: Arc<CandidateLadder>,
    entries: Vec<HistoryEntry>,
    skeletons: Vec<SkeletonRaster>,
    cursor: usize,
    revision: u64,
    graph: SkeletonGraph,
}

/// What a client needs to draw the session.
#[derive(Clone, Debug, Serialize)]
pub struct SessionView {
    pub session_id: String,
    pub shape_id: String,
    pub annotator_id: String,
    pub revision: u64,
    pub width: usize,
    pub height: usize,
    pub step: usize,
    pub step_count: usize,
    pub dce_k: usize,
    pub re: f64,
    pub ss: f64,
    pub skeleton: Vec<Point>,
    pub endpoints: Vec<Point>,
    pub junctions: Vec<Point>,
    pub branches: Vec<BranchView>,
    pub pruned_branch_ids: Vec<BranchId>,
    pub cursor: usize,
    pub can_undo: bool,
    pub can_redo: bool,
    pub history: Vec<HistoryEntry>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchView {
    pub id: BranchId,
    pub path: Vec<Point>,
    pub length: f64,
    pub closed: bool,
    /// Only leaf branches can be pruned.
    pub leaf: bool,
}

fn entry_for(parent: Option<usize>, event: EditEvent, step: usize, skeleton: &SkeletonRaster, shape: &BinaryMask) -> Result<HistoryEntry> {
    Ok(HistoryEntry {
        parent,
        event,
        step,
        re: reconstruction_error(skeleton, shape)?,
        ss: simplicity(skeleton),
        digest: skeleton.digest(),
    })
}

impl AnnotationSession {
    pub fn new(
        id: impl Into<String>,
        shape_id: impl Into<String>,
        annotator_id: impl Into<String>,
        ladder: Arc<CandidateLadder>,
    ) -> Result<Self> {
        let first = ladder.steps[0].clone();
        let root = entry_for(None, EditEvent::Start, 0, &first, &ladder.shape)?;
        Ok(AnnotationSession {
            id: id.into(),
            shape_id: shape_id.into(),
            annotator_id: annotator_id.into(),
            graph: decompose(&first),
            ladder,
            entries: vec![root],
            skeletons: vec![first],
            cursor: 0,
            revision: 0,
        })
    }

    pub fn ladder(&self) -> &Arc<CandidateLadder> {
        &self.ladder
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.entries
    }

    pub fn current(&self) -> &SkeletonRaster {
        &self.skeletons[self.cursor]
    }

    pub fn graph(&self) -> &SkeletonGraph {
        &self.graph
    }

    pub fn current_step(&self) -> usize {
        self.entries[self.cursor].step
    }

    fn apply(&self, at: usize, event: &EditEvent) -> Result<(usize, SkeletonRaster)> {
        let base = &self.entries[at];
        match event {
            EditEvent::Start => Err(Error::ReplayMismatch("start event below the root".into())),
            EditEvent::Step { direction } => {
                let target = base.step as i64 - direction;
                if target < 0 || target >= self.ladder.len() as i64 {
                    return Err(Error::StepOutOfBounds(target));
                }
                Ok((target as usize, self.ladder.steps[target as usize].clone()))
            }
            EditEvent::Prune { branch_ids } => {
                let graph = if at == self.cursor {
                    self.graph.clone()
                } else {
                    decompose(&self.skeletons[at])
                };
                let ids: BTreeSet<BranchId> = branch_ids.iter().copied().collect();
                Ok((base.step, prune_branch(&graph, &ids)?.into_raster()))
            }
        }
    }

    fn push(&mut self, event: EditEvent) -> Result<()> {
        let (step, skeleton) = self.apply(self.cursor, &event)?;
        let entry = entry_for(Some(self.cursor), event, step, &skeleton, &self.ladder.shape)?;
        self.entries.push(entry);
        self.skeletons.push(skeleton);
        self.move_to(self.entries.len() - 1);
        Ok(())
    }

    fn move_to(&mut self, index: usize) {
        self.cursor = index;
        self.graph = decompose(&self.skeletons[index]);
        self.revision += 1;
    }

    pub fn step(&mut self, direction: i64) -> Result<()> {
        self.push(EditEvent::Step { direction })
    }

    pub fn prune(&mut self, branch_ids: &[BranchId]) -> Result<()> {
        self.push(EditEvent::Prune {
            branch_ids: branch_ids.to_vec(),
        })
    }

    pub fn can_undo(&self) -> bool {
        self.entries[self.cursor].parent.is_some()
    }

    /// Latest child of the cursor entry.
    fn redo_target(&self) -> Option<usize> {
        (0..self.entries.len()).rev().find(|&i| self.entries[i].parent == Some(self.cursor))
    }

    pub fn can_redo(&self) -> bool {
        self.redo_target().is_some()
    }

    pub fn undo(&mut self) -> Result<()> {
        let parent = self.entries[self.cursor].parent.ok_or(Error::NothingTo("undo"))?;
        self.move_to(parent);
        Ok(())
    }

    pub fn redo(&mut self) -> Result<()> {
        let child = self.redo_target().ok_or(Error::NothingTo("redo"))?;
        self.move_to(child);
        Ok(())
    }

    /// Jumps to any earlier history entry.
    pub fn restore(&mut self, index: usize) -> Result<()> {
        if index >= self.entries.len() {
            return Err(Error::UnknownHistoryEntry(index));
        }
        self.move_to(index);
        Ok(())
    }

    /// Entries from the root to the cursor.
    fn lineage(&self) -> Vec<usize> {
        let mut out = vec![self.cursor];
        while let Some(p) = self.entries[*out.last().expect("non-empty")].parent {
            out.push(p);
        }
        out.reverse();
        out
    }

    /// Branches pruned since the last ladder move, oldest first.
    pub fn pruned_branch_ids(&self) -> Vec<BranchId> {
        let mut groups = Vec::new();
        for i in self.lineage().into_iter().rev() {
            match &self.entries[i].event {
                EditEvent::Prune { branch_ids } => groups.push(branch_ids.clone()),
                _ => break,
            }
        }
        groups.into_iter().rev().flatten().collect()
    }

    /// `(re, ss)` of every entry from the root to the cursor.
    pub fn metric_history(&self) -> Vec<(f64, f64)> {
        self.lineage().into_iter().map(|i| (self.entries[i].re, self.entries[i].ss)).collect()
    }

    pub fn view(&self) -> SessionView {
        let entry = &self.entries[self.cursor];
        let skeleton = self.current();
        SessionView {
            session_id: self.id.clone(),
            shape_id: self.shape_id.clone(),
            annotator_id: self.annotator_id.clone(),
            revision: self.revision,
            width: skeleton.width(),
            height: skeleton.height(),
            step: entry.step,
            step_count: self.ladder.len(),
            dce_k: self.ladder.dce_k[entry.step],
            re: entry.re,
            ss: entry.ss,
            skeleton: skeleton.points().iter().copied().collect(),
            endpoints: self.graph.endpoints(),
            junctions: self.graph.junctions(),
            branches: self
                .graph
                .branches
                .iter()
                .map(|b| BranchView {
                    id: b.id,
                    path: b.path.clone(),
                    length: b.length,
                    closed: b.closed,
                    leaf: self.graph.is_leaf(b),
                })
                .collect(),
            pruned_branch_ids: self.pruned_branch_ids(),
            cursor: self.cursor,
            can_undo: self.can_undo(),
            can_redo: self.can_redo(),
            history: self.entries.clone(),
        }
    }

    /// Ground-truth record for the current skeleton.
    pub fn to_gt_record(&self, object: Option<BinaryMask>) -> Result<GtRecord> {
        let step = self.current_step();
        let provenance = Provenance {
            annotator_ids: vec![self.annotator_id.clone()],
            k_min: self.ladder.options.k_min,
            k_max: self.ladder.options.k_max,
            ladder_step: Some(step),
            dce_k: Some(self.ladder.dce_k[step]),
            pruned_branch_ids: self.pruned_branch_ids(),
            ..Provenance::default()
        };
        GtRecord::new(self.shape_id.clone(), self.current(), &self.ladder.shape, object, provenance)
    }

    /// Writes the session history. The ladder is only referenced by
    /// `ladder_path`, which is resolved against the session file's directory
    /// when relative.
    pub fn save(&self, path: impl AsRef<Path>, ladder_path: impl AsRef<Path>) -> Result<()> {
        let file = SessionFile {
            format_version: FORMAT_VERSION,
            session_id: self.id.clone(),
            shape_id: self.shape_id.clone(),
            annotator_id: self.annotator_id.clone(),
            ladder: ladder_path.as_ref().to_path_buf(),
            current_step: self.current_step(),
            pruned_branch_ids: self.pruned_branch_ids(),
            metric_history: self.metric_history(),
            cursor: self.cursor,
            revision: self.revision,
            entries: self.entries.clone(),
        };
        let mut bytes = serde_json::to_vec_pretty(&file)?;
        bytes.push(b'\n');
        write_atomic(path.as_ref(), &bytes)
    }

    /// Loads a saved session and replays its whole history against the
    /// ladder, failing if any entry comes out different.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let file: SessionFile = serde_json::from_slice(&bytes)?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: file.format_version,
                expected: FORMAT_VERSION,
            });
        }
        let ladder_path = match path.parent() {
            Some(dir) if file.ladder.is_relative() => dir.join(&file.ladder),
            _ => file.ladder.clone(),
        };
        let ladder = Arc::new(load_ladder(&ladder_path)?);
        Self::replay(file, ladder)
    }

    fn replay(file: SessionFile, ladder: Arc<CandidateLadder>) -> Result<Self> {
        let mut session = AnnotationSession::new(file.session_id, file.shape_id, file.annotator_id, ladder)?;
        let mismatch = |i: usize, what: &str| Error::ReplayMismatch(format!("history entry {i}: {what}"));
        let root = file.entries.first().ok_or_else(|| mismatch(0, "missing"))?;
        if root.event != EditEvent::Start || *root != session.entries[0] {
            return Err(mismatch(0, "root differs from ladder step 0"));
        }
        for (i, saved) in file.entries.iter().enumerate().skip(1) {
            let parent = saved.parent.filter(|&p| p < i).ok_or_else(|| mismatch(i, "bad parent"))?;
            let (step, skeleton) = session
                .apply(parent, &saved.event)
                .map_err(|e| mismatch(i, &e.to_string()))?;
            let entry = entry_for(Some(parent), saved.event.clone(), step, &skeleton, &session.ladder.shape)?;
            if entry != *saved {
                return Err(mismatch(i, "recomputed skeleton differs"));
            }
            session.entries.push(entry);
            session.skeletons.push(skeleton);
        }
        if file.cursor >= session.entries.len() {
            return Err(Error::UnknownHistoryEntry(file.cursor));
        }
        session.cursor = file.cursor;
        session.graph = decompose(&session.skeletons[file.cursor]);
        session.revision = file.revision;
        if session.current_step() != file.current_step || session.pruned_branch_ids() != file.pruned_branch_ids {
            return Err(Error::ReplayMismatch("cursor summary differs from history".into()));
        }
        Ok(session)
    }
}

#[derive(Serialize, Deserialize)]
struct SessionFile {
    format_version: u32,
    session_id: String,
    shape_id: String,
    annotator_id: String,
    ladder: PathBuf,
    current_step: usize,
    pruned_branch_ids: Vec<BranchId>,
    metric_history: Vec<(f64, f64)>,
    cursor: usize,
    revision: u64,
    entries: Vec<HistoryEntry>,
}
