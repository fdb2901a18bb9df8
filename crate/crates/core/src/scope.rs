//! Session scope state machine.
//!
//! Chat scope holds directive decorators that persist across turns until a
//! `Clear`. Every other directive acts for the current message only and
//! shadows a same-name chat entry for that turn.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::{DecoratorKind, Registry, RegistryError, ValidatedDecorator};
use crate::syntax::{parse_invocation, ParseDiagnostic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
    System,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsumedMeta {
    pub name: String,
    pub digest: String,
}

impl fmt::Display for ConsumedMeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.name, self.digest)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurnRecord {
    pub role: Role,
    pub raw: String,
    pub body: String,
    pub decorators: Vec<ValidatedDecorator>,
    pub consumed_meta: Vec<ConsumedMeta>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SessionState {
    pub session_id: String,
    /// Active chat-scope decorators in activation order, unique by name.
    pub chat_scope: Vec<ValidatedDecorator>,
    pub turn_counter: u64,
    pub transcript: Vec<TurnRecord>,
}

impl SessionState {
    pub fn new(session_id: impl Into<String>) -> Self {
        Self {
            session_id: session_id.into(),
            ..Self::default()
        }
    }

    pub fn is_active(&self, name: &str) -> bool {
        self.chat_scope.iter().any(|d| d.name() == name)
    }

    pub fn push_turn(&mut self, record: TurnRecord) {
        self.transcript.push(record);
        self.turn_counter = self.transcript.len() as u64;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Chat,
    Message,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectiveEntry {
    pub decorator: ValidatedDecorator,
    pub origin: Origin,
}

/// Decorators governing one turn: chat-origin entries first, then
/// message-origin entries, at most one per name.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EffectiveSet {
    pub entries: Vec<EffectiveEntry>,
}

impl EffectiveSet {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.decorator.name()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&EffectiveEntry> {
        self.entries.iter().find(|e| e.decorator.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScopeError {
    #[error("ChatScope and MessageScope cannot appear in the same message")]
    BothScopeMarkers,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScopeWarning {
    /// ChatScope with no directive decorators beside it.
    EmptyChatScope,
    /// Clear named a decorator that was not in chat scope.
    NotActive(String),
}

impl fmt::Display for ScopeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScopeWarning::EmptyChatScope => {
                f.write_str("ChatScope has no decorators to persist in this message")
            }
            ScopeWarning::NotActive(name) => {
                write!(f, "Clear: `{name}` is not active in chat scope")
            }
        }
    }
}

/// Outcome of applying one message's decorators to a session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurnTransition {
    pub state: SessionState,
    pub effective: EffectiveSet,
    /// Meta decorators in declaration order.
    pub meta_queue: Vec<ValidatedDecorator>,
    /// One report per Clear in `meta_queue`, in the same order.
    pub clear_reports: Vec<ClearReport>,
    pub warnings: Vec<ScopeWarning>,
}

/// Names removed and names that were asked for but absent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClearReport {
    pub removed: Vec<String>,
    pub absent: Vec<String>,
}

fn clear_in_place(chat_scope: &mut Vec<ValidatedDecorator>, targets: &[String]) -> ClearReport {
    let mut report = ClearReport::default();
    if targets.is_empty() {
        report.removed = chat_scope.iter().map(|d| d.name().to_string()).collect();
        chat_scope.clear();
        return report;
    }
    for target in targets {
        match chat_scope.iter().position(|d| d.name() == target) {
            Some(i) => {
                chat_scope.remove(i);
                report.removed.push(target.clone());
            }
            None => report.absent.push(target.clone()),
        }
    }
    report
}

/// Removes the named entries from chat scope, or everything when `targets`
/// is empty.
pub fn clear(state: &SessionState, targets: &[String]) -> SessionState {
    clear_with_report(state, targets).0
}

pub fn clear_with_report(state: &SessionState, targets: &[String]) -> (SessionState, ClearReport) {
    let mut next = state.clone();
    let report = clear_in_place(&mut next.chat_scope, targets);
    (next, report)
}

/// Upsert keyed by name: replaces parameters in place, or appends.
fn upsert(list: &mut Vec<ValidatedDecorator>, decorator: &ValidatedDecorator) {
    match list.iter_mut().find(|d| d.name() == decorator.name()) {
        Some(slot) => *slot = decorator.clone(),
        None => list.push(decorator.clone()),
    }
}

pub fn apply_turn(
    state: &SessionState,
    decs: &[ValidatedDecorator],
) -> Result<TurnTransition, ScopeError> {
    let has_marker = |name: &str| {
        decs.iter()
            .any(|d| d.kind() == DecoratorKind::ScopeMarker && d.name() == name)
    };
    let chat_marker = has_marker("ChatScope");
    if chat_marker && has_marker("MessageScope") {
        return Err(ScopeError::BothScopeMarkers);
    }

    let mut next = state.clone();
    let mut warnings = Vec::new();
    let meta_queue: Vec<ValidatedDecorator> = decs
        .iter()
        .filter(|d| d.kind() == DecoratorKind::Meta)
        .cloned()
        .collect();

    let mut clear_reports = Vec::new();
    for clear in meta_queue.iter().filter(|d| d.name() == "Clear") {
        let report = clear_in_place(&mut next.chat_scope, &clear.targets);
        warnings.extend(report.absent.iter().cloned().map(ScopeWarning::NotActive));
        clear_reports.push(report);
    }

    let mut local: Vec<ValidatedDecorator> = Vec::new();
    for d in decs.iter().filter(|d| d.kind() == DecoratorKind::Directive) {
        upsert(&mut local, d);
    }

    if chat_marker {
        if local.is_empty() {
            warnings.push(ScopeWarning::EmptyChatScope);
        }
        for d in local.drain(..) {
            upsert(&mut next.chat_scope, &d);
        }
    }

    let mut entries: Vec<EffectiveEntry> = next
        .chat_scope
        .iter()
        .filter(|c| !local.iter().any(|m| m.name() == c.name()))
        .map(|c| EffectiveEntry {
            decorator: c.clone(),
            origin: Origin::Chat,
        })
        .collect();
    entries.extend(local.into_iter().map(|m| EffectiveEntry {
        decorator: m,
        origin: Origin::Message,
    }));

    Ok(TurnTransition {
        state: next,
        effective: EffectiveSet { entries },
        meta_queue,
        clear_reports,
        warnings,
    })
}

/// The effective-set half of [`apply_turn`], leaving `state` untouched.
pub fn effective_set(
    state: &SessionState,
    message_decs: &[ValidatedDecorator],
) -> Result<(EffectiveSet, Vec<ValidatedDecorator>), ScopeError> {
    apply_turn(state, message_decs).map(|t| (t.effective, t.meta_queue))
}

/// On-disk session format shared by the CLI and the gateway store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionFile {
    pub session_id: String,
    pub chat_scope: Vec<String>,
    pub turn_counter: u64,
    pub transcript: Vec<TurnRecordFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurnRecordFile {
    pub role: Role,
    pub raw: String,
    pub body: String,
    pub decorators: Vec<String>,
    pub consumed_meta: Vec<ConsumedMeta>,
}

#[derive(Debug, Error)]
pub enum SessionLoadError {
    #[error("invalid session JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid decorator `{text}`: {source}")]
    Parse {
        text: String,
        source: ParseDiagnostic,
    },
    #[error("invalid decorator `{text}`: {source}")]
    Registry { text: String, source: RegistryError },
    #[error("inconsistent session: {0}")]
    Inconsistent(String),
}

/// Re-parses and validates one rendered invocation.
pub fn revalidate(registry: &Registry, text: &str) -> Result<ValidatedDecorator, SessionLoadError> {
    let inv = parse_invocation(text).map_err(|source| SessionLoadError::Parse {
        text: text.to_string(),
        source,
    })?;
    registry
        .validate(&inv)
        .map_err(|source| SessionLoadError::Registry {
            text: text.to_string(),
            source,
        })
}

impl SessionState {
    pub fn to_file(&self) -> SessionFile {
        SessionFile {
            session_id: self.session_id.clone(),
            chat_scope: self
                .chat_scope
                .iter()
                .map(ValidatedDecorator::render)
                .collect(),
            turn_counter: self.turn_counter,
            transcript: self
                .transcript
                .iter()
                .map(|t| TurnRecordFile {
                    role: t.role,
                    raw: t.raw.clone(),
                    body: t.body.clone(),
                    decorators: t
                        .decorators
                        .iter()
                        .map(ValidatedDecorator::render)
                        .collect(),
                    consumed_meta: t.consumed_meta.clone(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("session file serializes")
    }

    pub fn from_file(file: SessionFile, registry: &Registry) -> Result<Self, SessionLoadError> {
        let mut chat_scope: Vec<ValidatedDecorator> = Vec::new();
        for text in &file.chat_scope {
            let d = revalidate(registry, text)?;
            if d.kind() != DecoratorKind::Directive {
                return Err(SessionLoadError::Inconsistent(format!(
                    "`{}` cannot be held in chat scope",
                    d.name()
                )));
            }
            if chat_scope.iter().any(|c| c.name() == d.name()) {
                return Err(SessionLoadError::Inconsistent(format!(
                    "`{}` appears twice in chat scope",
                    d.name()
                )));
            }
            chat_scope.push(d);
        }
        if file.turn_counter != file.transcript.len() as u64 {
            return Err(SessionLoadError::Inconsistent(format!(
                "turn_counter {} does not match {} transcript entries",
                file.turn_counter,
                file.transcript.len()
            )));
        }
        let transcript = file
            .transcript
            .into_iter()
            .map(|t| {
                Ok(TurnRecord {
                    role: t.role,
                    raw: t.raw,
                    body: t.body,
                    decorators: t
                        .decorators
                        .iter()
                        .map(|d| revalidate(registry, d))
                        .collect::<Result<_, _>>()?,
                    consumed_meta: t.consumed_meta,
                })
            })
            .collect::<Result<_, SessionLoadError>>()?;
        Ok(SessionState {
            session_id: file.session_id,
            chat_scope,
            turn_counter: file.turn_counter,
            transcript,
        })
    }

    pub fn from_json(json: &str, registry: &Registry) -> Result<Self, SessionLoadError> {
        Self::from_file(serde_json::from_str(json)?, registry)
    }
}
