//! Full turn compilation: scan, validate, scope, plan, resolve, synthesize,
//! and run meta decorators.

use std::sync::Arc;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::compile::{
    plan, resolve_conflicts, synthesize_directives, ActiveEntry, AuditMetadata, CompileError,
    CompiledPrompt, MetaOutput,
};
use crate::meta::{self, Clock, ExportFormat, SystemClock};
use crate::registry::{DecoratorKind, ParamValue, Registry, RegistryError, ValidatedDecorator};
use crate::scope::{apply_turn, ConsumedMeta, Role, ScopeError, SessionState, TurnRecord};
use crate::syntax::{scan_message, ParseDiagnostic, ParseMode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Parse(#[from] ParseDiagnostic),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Scope(#[from] ScopeError),
    #[error(transparent)]
    Compile(#[from] CompileError),
}

/// Shared, read-only compilation context.
#[derive(Clone)]
pub struct Engine {
    registry: Arc<Registry>,
    mode: ParseMode,
    clock: Arc<dyn Clock>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("decorators", &self.registry.len())
            .field("mode", &self.mode)
            .finish()
    }
}

impl Default for Engine {
    fn default() -> Self {
        Self::new(Registry::builtin(), ParseMode::Strict)
    }
}

impl Engine {
    pub fn new(registry: Registry, mode: ParseMode) -> Self {
        Self {
            registry: Arc::new(registry),
            mode,
            clock: Arc::new(SystemClock),
        }
    }

    pub fn with_clock(mut self, clock: impl Clock + 'static) -> Self {
        self.clock = Arc::new(clock);
        self
    }

    pub fn with_mode(mut self, mode: ParseMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn mode(&self) -> ParseMode {
        self.mode
    }

    pub fn clock(&self) -> &dyn Clock {
        self.clock.as_ref()
    }

    /// Compiles one user turn. On error `state` is untouched; on success the
    /// returned state includes the turn in its transcript.
    pub fn compile_turn(
        &self,
        state: &SessionState,
        message: &str,
    ) -> Result<(SessionState, CompiledPrompt), EngineError> {
        let scan = scan_message(message, self.mode)?;
        let mut warnings: Vec<String> = scan.diagnostics.iter().map(ToString::to_string).collect();

        let mut validated = Vec::with_capacity(scan.invocations.len());
        for inv in &scan.invocations {
            match self.registry.validate(inv) {
                Ok(v) => validated.push(v),
                Err(RegistryError::UnknownDecorator { name })
                    if self.mode == ParseMode::Lenient =>
                {
                    warnings.push(format!(
                        "line {}: unknown decorator `{name}` ignored",
                        inv.span.line + 1
                    ));
                }
                Err(e) => return Err(e.into()),
            }
        }

        let transition = apply_turn(state, &validated)?;
        warnings.extend(transition.warnings.iter().map(ToString::to_string));

        let (planned, conflicts) = resolve_conflicts(plan(&transition.effective))?;
        let directive_block = synthesize_directives(&planned)?;

        let mut next = transition.state;
        let mut clear_reports = transition.clear_reports.iter();
        let mut meta_outputs = Vec::with_capacity(transition.meta_queue.len());
        for m in &transition.meta_queue {
            let text = match m.name() {
                "Clear" => {
                    let report = clear_reports.next().expect("one report per Clear");
                    meta::clear_summary(report, !m.targets.is_empty())
                }
                "ActiveDecs" => meta::active_decs(&next),
                "AvailableDecs" => meta::available_decs(&next, &self.registry),
                "Export" => {
                    let format = match m.param("format") {
                        Some(ParamValue::Symbol(f)) => f.parse().unwrap_or(ExportFormat::Markdown),
                        _ => ExportFormat::Markdown,
                    };
                    meta::export(&next, format, self.clock.as_ref()).content
                }
                other => unreachable!("meta decorator without executor: {other}"),
            };
            meta_outputs.push(MetaOutput {
                name: m.name().to_string(),
                text,
            });
        }

        let consumed_meta = meta_outputs
            .iter()
            .map(|o| ConsumedMeta {
                name: o.name.clone(),
                digest: digest(&o.text),
            })
            .collect();

        let has_directives = validated
            .iter()
            .any(|d| d.kind() == DecoratorKind::Directive);
        let pure_meta =
            !transition.meta_queue.is_empty() && !has_directives && scan.body.trim().is_empty();

        let audit = AuditMetadata {
            turn_index: state.turn_counter,
            active: planned
                .iter()
                .map(|p| ActiveEntry {
                    name: p.decorator.name().to_string(),
                    origin: p.origin,
                    stage: p.stage,
                })
                .collect(),
            conflicts,
            meta: meta_outputs.iter().map(|o| o.name.clone()).collect(),
        };

        next.push_turn(TurnRecord {
            role: Role::User,
            raw: message.to_string(),
            body: scan.body.clone(),
            decorators: validated,
            consumed_meta,
        });

        Ok((
            next,
            CompiledPrompt {
                directive_block,
                body: scan.body,
                meta_outputs,
                audit,
                warnings,
                decorator_count: scan.invocations.len(),
                pure_meta,
            },
        ))
    }

    /// Validates every invocation of an already-scanned message.
    pub fn validate_all(
        &self,
        invocations: &[crate::syntax::DecoratorInvocation],
    ) -> Result<Vec<ValidatedDecorator>, RegistryError> {
        invocations
            .iter()
            .map(|i| self.registry.validate(i))
            .collect()
    }
}

/// Short content digest recorded for locally consumed meta output.
pub fn digest(text: &str) -> String {
    let hash = Sha256::digest(text.as_bytes());
    hex::encode(&hash[..8])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meta::FixedClock;
    use crate::scope::Origin;

    const COMPOSITION: &str = "+++ChatScope\n+++Reasoning\n+++Tone(style=formal)\n+++OutputFormat(format=markdown)\n\nAssess the ethical implications of AI-driven recruitment systems.";

    fn engine() -> Engine {
        Engine::default().with_clock(FixedClock::epoch())
    }

    #[test]
    fn composition_example() {
        let (state, prompt) = engine()
            .compile_turn(&SessionState::new("s"), COMPOSITION)
            .unwrap();
        assert_eq!(
            prompt.directive_block.names(),
            ["Reasoning", "Tone", "OutputFormat"]
        );
        assert_eq!(
            prompt.body,
            "Assess the ethical implications of AI-driven recruitment systems."
        );
        assert_eq!(state.turn_counter, 1);
        assert_eq!(state.chat_scope.len(), 3);
        assert!(prompt.audit.active.iter().all(|a| a.origin == Origin::Chat));
        assert!(!prompt.pure_meta);
    }

    #[test]
    fn active_decs_on_fresh_session() {
        let (state, prompt) = engine()
            .compile_turn(&SessionState::new("s"), "+++ActiveDecs")
            .unwrap();
        assert!(prompt.directive_block.is_empty());
        assert_eq!(
            prompt.meta_outputs,
            [MetaOutput {
                name: "ActiveDecs".into(),
                text: "No active decorators.".into()
            }]
        );
        assert!(prompt.pure_meta);
        assert_eq!(state.transcript[0].consumed_meta[0].name, "ActiveDecs");
    }

    #[test]
    fn errors_leave_state_untouched() {
        let e = engine();
        let (state, _) = e
            .compile_turn(&SessionState::new("s"), COMPOSITION)
            .unwrap();
        for bad in [
            "+++Refine(iterations=\nbody",
            "+++Reason\nbody",
            "+++Refine(iterations=99)\nbody",
            "+++ChatScope\n+++MessageScope\nhi",
        ] {
            assert!(e.compile_turn(&state, bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn lenient_mode_drops_unknown() {
        let e = engine().with_mode(ParseMode::Lenient);
        let (_, prompt) = e
            .compile_turn(&SessionState::new("s"), "+++Reason\n+++Debate\n\nhi")
            .unwrap();
        assert_eq!(prompt.directive_block.names(), ["Debate"]);
        assert_eq!(prompt.warnings.len(), 1);
    }

    #[test]
    fn clear_then_export_sees_cleared_state() {
        let e = engine();
        let (state, _) = e
            .compile_turn(&SessionState::new("s"), COMPOSITION)
            .unwrap();
        let (state, prompt) = e
            .compile_turn(&state, "+++Clear\n+++Export(format=json)")
            .unwrap();
        assert!(state.chat_scope.is_empty());
        assert_eq!(prompt.meta_outputs[0].name, "Clear");
        let doc: serde_json::Value = serde_json::from_str(&prompt.meta_outputs[1].text).unwrap();
        assert_eq!(doc["chat_scope"], serde_json::json!([]));
        assert_eq!(doc["turns"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn meta_with_body_is_not_pure() {
        let (_, prompt) = engine()
            .compile_turn(&SessionState::new("s"), "+++ActiveDecs\n\nWhat now?")
            .unwrap();
        assert!(!prompt.pure_meta);
        assert_eq!(prompt.body, "What now?");
        assert_eq!(prompt.meta_outputs.len(), 1);
    }

    #[test]
    fn empty_identity() {
        let text = "  Plain question?\n+++Reasoning\n";
        let (_, prompt) = engine()
            .compile_turn(&SessionState::new("s"), text)
            .unwrap();
        assert_eq!(prompt.directive_block.rendered, "");
        assert_eq!(prompt.body, text);
        assert_eq!(prompt.decorator_count, 0);
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(
            digest("No active decorators."),
            digest("No active decorators.")
        );
        assert_eq!(digest("x").len(), 16);
    }
}
