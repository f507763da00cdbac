use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use log::{info, warn};
use skelforge_core::{load_dataset, save_ladder, AnnotationSession, BinaryMask, DatasetKind, Error};

use crate::error::ApiError;
use crate::ServiceConfig;

pub type SharedSession = Arc<Mutex<AnnotationSession>>;

/// Shapes from the dataset root plus every live session. Each session is
/// mirrored to `<session_root>/<id>.json`, with its ladder beside it in
/// `<id>.ladder.json`.
pub struct Store {
    pub config: ServiceConfig,
    shapes: BTreeMap<String, BinaryMask>,
    sessions: RwLock<HashMap<String, SharedSession>>,
}

fn dataset_kind(root: &Path) -> DatasetKind {
    if root.join("masks").is_dir() {
        DatasetKind::ImagesWithMasks
    } else {
        DatasetKind::Shapes
    }
}

impl Store {
    /// Loads the dataset and replays every saved session under the session
    /// root. Sessions that fail to replay are logged and left on disk.
    pub fn open(config: ServiceConfig) -> Result<Store, Error> {
        let dataset = load_dataset(&config.dataset_root, dataset_kind(&config.dataset_root))?;
        for e in &dataset.errors {
            warn!("{e}");
        }
        let shapes = dataset.items.into_iter().map(|i| (i.id, i.mask)).collect();
        fs::create_dir_all(&config.session_root).map_err(|e| io(&config.session_root, e))?;
        let mut sessions = HashMap::new();
        let mut files: Vec<PathBuf> = fs::read_dir(&config.session_root)
            .map_err(|e| io(&config.session_root, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
                name.ends_with(".json") && !name.ends_with(".ladder.json")
            })
            .collect();
        files.sort();
        for path in files {
            match AnnotationSession::load(&path) {
                Ok(s) => {
                    sessions.insert(s.id.clone(), Arc::new(Mutex::new(s)));
                }
                Err(e) => warn!("not restoring {}: {e}", path.display()),
            }
        }
        info!("{} shapes, {} restored sessions", BTreeMap::len(&shapes), sessions.len());
        Ok(Store {
            config,
            shapes,
            sessions: RwLock::new(sessions),
        })
    }

    pub fn shape(&self, id: &str) -> Result<&BinaryMask, ApiError> {
        self.shapes.get(id).ok_or_else(|| ApiError::NotFound(format!("unknown shape {id}")))
    }

    pub fn shape_ids(&self) -> Vec<String> {
        self.shapes.keys().cloned().collect()
    }

    pub fn session(&self, id: &str) -> Result<SharedSession, ApiError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("unknown session {id}")))
    }

    fn session_path(&self, id: &str) -> PathBuf {
        self.config.session_root.join(format!("{id}.json"))
    }

    /// Persists a new session with its ladder and registers it.
    pub fn insert(&self, session: AnnotationSession) -> Result<SharedSession, ApiError> {
        let ladder_name = format!("{}.ladder.json", session.id);
        save_ladder(session.ladder(), self.config.session_root.join(&ladder_name))?;
        session.save(self.session_path(&session.id), &ladder_name)?;
        let id = session.id.clone();
        let shared = Arc::new(Mutex::new(session));
        self.sessions.write().expect("session map poisoned").insert(id, shared.clone());
        Ok(shared)
    }

    /// Rewrites the event log of an already registered session.
    pub fn persist(&self, session: &AnnotationSession) -> Result<(), ApiError> {
        session.save(self.session_path(&session.id), format!("{}.ladder.json", session.id))?;
        Ok(())
    }
}

fn io(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}
