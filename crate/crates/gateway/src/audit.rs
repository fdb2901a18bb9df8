//! Append-only JSON Lines audit log.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use decorator_engine::compile::{ActiveEntry, ConflictNote};
use serde::{Deserialize, Serialize};

/// One line per handled request. Never carries message text or credentials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub timestamp: String,
    pub session_id: Option<String>,
    pub turn_index: Option<u64>,
    pub active: Vec<ActiveEntry>,
    pub conflicts: Vec<ConflictNote>,
    pub meta: Vec<String>,
    pub upstream_called: bool,
    pub sanitizer_hits: usize,
    pub status: u16,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

enum Sink {
    Disabled,
    File(Mutex<File>),
    Memory(Mutex<Vec<AuditRecord>>),
}

pub struct AuditLog {
    sink: Sink,
}

impl AuditLog {
    pub fn disabled() -> Self {
        Self {
            sink: Sink::Disabled,
        }
    }

    /// Keeps records in memory, for tests and embedding.
    pub fn memory() -> Self {
        Self {
            sink: Sink::Memory(Mutex::new(Vec::new())),
        }
    }

    pub fn open(path: &Path) -> std::io::Result<Self> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            sink: Sink::File(Mutex::new(file)),
        })
    }

    /// Write failures are reported through tracing and otherwise ignored.
    pub fn append(&self, record: AuditRecord) {
        match &self.sink {
            Sink::Disabled => {}
            Sink::Memory(records) => records.lock().unwrap().push(record),
            Sink::File(file) => {
                let mut line = serde_json::to_string(&record).expect("audit record serializes");
                line.push('\n');
                let mut file = file.lock().unwrap();
                if let Err(e) = file.write_all(line.as_bytes()).and_then(|_| file.flush()) {
                    tracing::error!(error = %e, "audit log write failed");
                }
            }
        }
    }

    pub fn records(&self) -> Vec<AuditRecord> {
        match &self.sink {
            Sink::Memory(records) => records.lock().unwrap().clone(),
            _ => Vec::new(),
        }
    }
}
