//! Locally executed introspection and export decorators.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::registry::{Registry, ValidatedDecorator};
use crate::scope::{
    revalidate, ClearReport, ConsumedMeta, Role, SessionLoadError, SessionState, TurnRecord,
};

pub const NO_ACTIVE_DECORATORS: &str = "No active decorators.";

/// Time source for export timestamps.
pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub DateTime<Utc>);

impl FixedClock {
    pub fn epoch() -> Self {
        FixedClock(DateTime::<Utc>::UNIX_EPOCH)
    }
}

impl Clock for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        self.0
    }
}

pub fn active_decs(state: &SessionState) -> String {
    if state.chat_scope.is_empty() {
        return NO_ACTIVE_DECORATORS.to_string();
    }
    state
        .chat_scope
        .iter()
        .map(ValidatedDecorator::render)
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn available_decs(state: &SessionState, registry: &Registry) -> String {
    let mut out = String::from(
        "| Name | Category | Subcategory | Description | Status |\n| --- | --- | --- | --- | --- |",
    );
    for def in registry.catalog() {
        let status = if state.is_active(&def.canonical_name) {
            "Active"
        } else {
            "Inactive"
        };
        out.push_str(&format!(
            "\n| {} | {} | {} | {} | {} |",
            def.canonical_name,
            def.category.label(),
            def.subcategory.label().replace('|', "\\|"),
            def.description.replace('|', "\\|"),
            status
        ));
    }
    out
}

pub(crate) fn clear_summary(report: &ClearReport, targeted: bool) -> String {
    let mut out = if !targeted {
        if report.removed.is_empty() {
            "Chat scope was already empty.".to_string()
        } else {
            format!(
                "Cleared all active decorators: {}.",
                report.removed.join(", ")
            )
        }
    } else if report.removed.is_empty() {
        "No decorators were cleared.".to_string()
    } else {
        format!("Cleared: {}.", report.removed.join(", "))
    };
    if !report.absent.is_empty() {
        out.push_str(&format!(" Not active: {}.", report.absent.join(", ")));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Text,
    Markdown,
    Json,
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(ExportFormat::Text),
            "markdown" => Ok(ExportFormat::Markdown),
            "json" => Ok(ExportFormat::Json),
            other => Err(format!(
                "unknown export format `{other}` (text, markdown, json)"
            )),
        }
    }
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExportFormat::Text => "text",
            ExportFormat::Markdown => "markdown",
            ExportFormat::Json => "json",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExportContents {
    pub transcript: bool,
    pub chat_scope: bool,
    pub decorator_metadata: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExportDocument {
    pub format: ExportFormat,
    pub content: String,
    pub included: ExportContents,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportJson {
    pub session_id: String,
    pub chat_scope: Vec<String>,
    pub turns: Vec<ExportTurn>,
    pub exported_at: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportTurn {
    pub role: Role,
    pub body: String,
    pub decorators: Vec<String>,
    pub consumed_meta: Vec<String>,
}

impl ExportJson {
    pub fn from_state(state: &SessionState, exported_at: DateTime<Utc>) -> Self {
        ExportJson {
            session_id: state.session_id.clone(),
            chat_scope: state
                .chat_scope
                .iter()
                .map(ValidatedDecorator::render)
                .collect(),
            turns: state
                .transcript
                .iter()
                .map(|t| ExportTurn {
                    role: t.role,
                    body: t.body.clone(),
                    decorators: t
                        .decorators
                        .iter()
                        .map(ValidatedDecorator::render)
                        .collect(),
                    consumed_meta: t.consumed_meta.iter().map(ToString::to_string).collect(),
                })
                .collect(),
            exported_at: exported_at.to_rfc3339_opts(SecondsFormat::Secs, true),
        }
    }
}

fn role_label(role: Role) -> &'static str {
    match role {
        Role::User => "user",
        Role::Assistant => "assistant",
        Role::System => "system",
    }
}

pub fn export(state: &SessionState, format: ExportFormat, clock: &dyn Clock) -> ExportDocument {
    let doc = ExportJson::from_state(state, clock.now());
    let content = match format {
        ExportFormat::Json => {
            serde_json::to_string_pretty(&doc).expect("export document serializes")
        }
        ExportFormat::Markdown => render_markdown(&doc),
        ExportFormat::Text => render_text(&doc),
    };
    ExportDocument {
        format,
        content,
        included: ExportContents {
            transcript: true,
            chat_scope: true,
            decorator_metadata: true,
        },
    }
}

fn render_markdown(doc: &ExportJson) -> String {
    let mut out = format!(
        "# Session Export\n\n- Session: `{}`\n- Exported at: {}\n- Turns: {}\n\n## Chat Scope\n\n",
        doc.session_id,
        doc.exported_at,
        doc.turns.len()
    );
    if doc.chat_scope.is_empty() {
        out.push_str(&format!("{NO_ACTIVE_DECORATORS}\n"));
    } else {
        for d in &doc.chat_scope {
            out.push_str(&format!("- `{d}`\n"));
        }
    }
    out.push_str("\n## Transcript\n");
    for (i, turn) in doc.turns.iter().enumerate() {
        out.push_str(&format!(
            "\n### Turn {} ({})\n\n",
            i + 1,
            role_label(turn.role)
        ));
        if !turn.decorators.is_empty() {
            let list: Vec<String> = turn.decorators.iter().map(|d| format!("`{d}`")).collect();
            out.push_str(&format!("Decorators: {}\n\n", list.join(", ")));
        }
        if !turn.consumed_meta.is_empty() {
            out.push_str(&format!(
                "Local meta: {}\n\n",
                turn.consumed_meta.join(", ")
            ));
        }
        out.push_str(&turn.body);
        if !turn.body.ends_with('\n') {
            out.push('\n');
        }
    }
    out
}

fn render_text(doc: &ExportJson) -> String {
    let mut out = format!(
        "Session: {}\nExported at: {}\nTurns: {}\nChat scope:\n",
        doc.session_id,
        doc.exported_at,
        doc.turns.len()
    );
    if doc.chat_scope.is_empty() {
        out.push_str(&format!("  {NO_ACTIVE_DECORATORS}\n"));
    }
    for d in &doc.chat_scope {
        out.push_str(&format!("  {d}\n"));
    }
    for (i, turn) in doc.turns.iter().enumerate() {
        out.push_str(&format!(
            "\n--- Turn {} [{}] ---\n",
            i + 1,
            role_label(turn.role)
        ));
        for d in &turn.decorators {
            out.push_str(&format!("{d}\n"));
        }
        for m in &turn.consumed_meta {
            out.push_str(&format!("(meta {m})\n"));
        }
        out.push_str(&turn.body);
        if !turn.body.ends_with('\n') {
            out.push('\n');
        }
    }
    out
}

/// Rebuilds a session from an exported JSON document.
///
/// Raw turn text is reconstructed from the rendered decorators and body,
/// since exports do not carry it.
pub fn import_export(json: &str, registry: &Registry) -> Result<SessionState, SessionLoadError> {
    let doc: ExportJson = serde_json::from_str(json)?;
    let mut state = SessionState::new(doc.session_id);
    for text in &doc.chat_scope {
        let d = revalidate(registry, text)?;
        if d.kind() != crate::registry::DecoratorKind::Directive
            || state.chat_scope.iter().any(|c| c.name() == d.name())
        {
            return Err(SessionLoadError::Inconsistent(format!(
                "`{text}` cannot be held in chat scope"
            )));
        }
        state.chat_scope.push(d);
    }
    for turn in doc.turns {
        let decorators = turn
            .decorators
            .iter()
            .map(|d| revalidate(registry, d))
            .collect::<Result<Vec<_>, _>>()?;
        let consumed_meta = turn
            .consumed_meta
            .iter()
            .map(|m| {
                m.split_once(':')
                    .map(|(name, digest)| ConsumedMeta {
                        name: name.to_string(),
                        digest: digest.to_string(),
                    })
                    .ok_or_else(|| {
                        SessionLoadError::Inconsistent(format!("malformed consumed_meta `{m}`"))
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let raw = if turn.decorators.is_empty() {
            turn.body.clone()
        } else {
            format!("{}\n\n{}", turn.decorators.join("\n"), turn.body)
        };
        state.push_turn(TurnRecord {
            role: turn.role,
            raw,
            body: turn.body,
            decorators,
            consumed_meta,
        });
    }
    Ok(state)
}
