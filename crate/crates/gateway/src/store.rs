//! Session storage with per-session serialization of turns.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use decorator_engine::scope::SessionLoadError;
use decorator_engine::{Registry, SessionState};
use thiserror::Error;
use tokio::sync::{Mutex as AsyncMutex, OwnedMutexGuard};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("session store I/O on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("session file {path} is invalid: {source}")]
    Load {
        path: PathBuf,
        source: Box<SessionLoadError>,
    },
}

type Slot = Arc<AsyncMutex<Option<SessionState>>>;

/// In-memory sessions, optionally mirrored to one JSON file per session.
pub struct SessionStore {
    dir: Option<PathBuf>,
    registry: Arc<Registry>,
    slots: Mutex<HashMap<String, Slot>>,
}

/// Exclusive access to one session for the duration of a turn.
pub struct SessionGuard {
    id: String,
    path: Option<PathBuf>,
    slot: OwnedMutexGuard<Option<SessionState>>,
    registry: Arc<Registry>,
}

impl SessionStore {
    pub fn new(dir: Option<PathBuf>, registry: Arc<Registry>) -> Self {
        Self {
            dir,
            registry,
            slots: Mutex::new(HashMap::new()),
        }
    }

    fn path_for(&self, id: &str) -> Option<PathBuf> {
        self.dir
            .as_ref()
            .map(|d| d.join(format!("{}.json", hex::encode(id.as_bytes()))))
    }

    pub async fn lock(&self, id: &str) -> SessionGuard {
        let slot = self
            .slots
            .lock()
            .unwrap()
            .entry(id.to_string())
            .or_default()
            .clone();
        SessionGuard {
            id: id.to_string(),
            path: self.path_for(id),
            slot: slot.lock_owned().await,
            registry: self.registry.clone(),
        }
    }

    /// Snapshot of a session if it exists in memory or on disk.
    pub async fn get(&self, id: &str) -> Result<Option<SessionState>, StoreError> {
        let mut guard = self.lock(id).await;
        if guard.slot.is_none() && !guard.path.as_deref().is_some_and(Path::exists) {
            return Ok(None);
        }
        guard.state().map(Some)
    }
}

impl SessionGuard {
    /// Current state, loading from disk on first access.
    pub fn state(&mut self) -> Result<SessionState, StoreError> {
        if let Some(state) = self.slot.as_ref() {
            return Ok(state.clone());
        }
        let state = match &self.path {
            Some(path) if path.exists() => {
                let text = std::fs::read_to_string(path).map_err(|source| StoreError::Io {
                    path: path.clone(),
                    source,
                })?;
                SessionState::from_json(&text, &self.registry).map_err(|source| {
                    StoreError::Load {
                        path: path.clone(),
                        source: Box::new(source),
                    }
                })?
            }
            _ => SessionState::new(self.id.clone()),
        };
        *self.slot = Some(state.clone());
        Ok(state)
    }

    /// Persists `state`; memory is only updated once the file write succeeds.
    pub fn commit(&mut self, state: SessionState) -> Result<(), StoreError> {
        if let Some(path) = &self.path {
            let io = |source| StoreError::Io {
                path: path.clone(),
                source,
            };
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(io)?;
            }
            let tmp = path.with_extension("json.tmp");
            std::fs::write(&tmp, state.to_json()).map_err(io)?;
            std::fs::rename(&tmp, path).map_err(io)?;
        }
        *self.slot = Some(state);
        Ok(())
    }
}
