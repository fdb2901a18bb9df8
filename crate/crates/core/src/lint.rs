//! Static checks over message files.

use serde::Serialize;

use crate::compile::{plan, resolve_conflicts};
use crate::registry::{Registry, RegistryError};
use crate::scope::{apply_turn, SessionState};
use crate::syntax::{scan_message, ParseMode, Severity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LintSeverity {
    Note,
    Warning,
    Error,
}

impl LintSeverity {
    pub fn as_str(self) -> &'static str {
        match self {
            LintSeverity::Note => "note",
            LintSeverity::Warning => "warning",
            LintSeverity::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LintDiagnostic {
    pub severity: LintSeverity,
    pub code: String,
    /// One-based line within the message.
    pub line: usize,
    pub message: String,
}

/// A message cut out of a multi-message file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MessageSlice<'a> {
    /// Zero-based line where the message starts in the file.
    pub first_line: usize,
    pub text: &'a str,
}

/// Splits on lines that contain exactly `===`.
pub fn split_messages(text: &str) -> Vec<MessageSlice<'_>> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut first_line = 0;
    let mut offset = 0;
    for (index, line) in text.split('\n').enumerate() {
        let next = offset + line.len() + 1;
        if line.trim_end_matches('\r') == "===" {
            let end = offset.saturating_sub(1).max(start);
            out.push(MessageSlice {
                first_line,
                text: &text[start..end],
            });
            start = next.min(text.len());
            first_line = index + 1;
        }
        offset = next;
    }
    out.push(MessageSlice {
        first_line,
        text: &text[start..],
    });
    out
}

/// Exit status for a set of diagnostics: 0 clean, 1 warnings only, 2 errors.
pub fn exit_code<'a>(diagnostics: impl IntoIterator<Item = &'a LintDiagnostic>) -> i32 {
    match diagnostics.into_iter().map(|d| d.severity).max() {
        Some(LintSeverity::Error) => 2,
        Some(LintSeverity::Warning) => 1,
        _ => 0,
    }
}

pub fn lint_message(registry: &Registry, text: &str, mode: ParseMode) -> Vec<LintDiagnostic> {
    let mut out = Vec::new();
    let scan = scan_message(text, ParseMode::Lenient).expect("lenient scan is infallible");
    for d in &scan.diagnostics {
        out.push(LintDiagnostic {
            severity: match mode {
                ParseMode::Strict => LintSeverity::Error,
                ParseMode::Lenient => LintSeverity::Warning,
            },
            code: d.code.as_str().to_string(),
            line: d.span.line + 1,
            message: d
                .message
                .trim_end_matches("; line treated as body text")
                .to_string(),
        });
    }
    debug_assert!(scan
        .diagnostics
        .iter()
        .all(|d| d.severity == Severity::Warning));

    let mut validated = Vec::new();
    for inv in &scan.invocations {
        let line = inv.span.line + 1;
        match registry.validate(inv) {
            Ok(v) => {
                for target in &v.targets {
                    if registry.lookup(target).is_err() {
                        out.push(unknown(registry, target, line, "Clear target"));
                    }
                }
                validated.push(v);
            }
            Err(RegistryError::UnknownDecorator { name }) => {
                out.push(unknown(registry, &name, line, "decorator"));
            }
            Err(e) => out.push(LintDiagnostic {
                severity: LintSeverity::Error,
                code: registry_code(&e).to_string(),
                line,
                message: e.to_string(),
            }),
        }
    }

    let first_line = scan.invocations.first().map_or(1, |i| i.span.line + 1);
    match apply_turn(&SessionState::default(), &validated) {
        Err(e) => out.push(LintDiagnostic {
            severity: LintSeverity::Error,
            code: "both-scope-markers".to_string(),
            line: first_line,
            message: e.to_string(),
        }),
        Ok(transition) => {
            for w in &transition.warnings {
                out.push(LintDiagnostic {
                    severity: LintSeverity::Warning,
                    code: "scope".to_string(),
                    line: first_line,
                    message: w.to_string(),
                });
            }
            match resolve_conflicts(plan(&transition.effective)) {
                Ok((_, notes)) => out.extend(notes.into_iter().map(|n| LintDiagnostic {
                    severity: LintSeverity::Note,
                    code: n.rule,
                    line: first_line,
                    message: n.message,
                })),
                Err(e) => out.push(LintDiagnostic {
                    severity: LintSeverity::Error,
                    code: "hard-conflict".to_string(),
                    line: first_line,
                    message: e.to_string(),
                }),
            }
        }
    }
    out
}

fn unknown(registry: &Registry, name: &str, line: usize, what: &str) -> LintDiagnostic {
    let hint = registry
        .suggest(name)
        .map(|s| format!("; did you mean `{s}`?"))
        .unwrap_or_default();
    LintDiagnostic {
        severity: LintSeverity::Warning,
        code: "unknown-decorator".to_string(),
        line,
        message: format!("unknown {what} `{name}`{hint}"),
    }
}

fn registry_code(e: &RegistryError) -> &'static str {
    match e {
        RegistryError::UnknownDecorator { .. } => "unknown-decorator",
        RegistryError::UnknownParameter { .. } => "unknown-parameter",
        RegistryError::MissingRequiredParameter { .. } => "missing-required-parameter",
        RegistryError::ValueOutOfRange { .. } => "value-out-of-range",
        RegistryError::ValueNotInEnumeration { .. } => "value-not-in-enumeration",
        RegistryError::InvalidValueType { .. } => "invalid-value-type",
        RegistryError::NameCollision { .. } => "name-collision",
        RegistryError::MalformedExtension(_) => "malformed-extension",
        RegistryError::IllegalKind { .. } => "illegal-kind",
    }
}
