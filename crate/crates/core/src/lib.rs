//! Compiler for `+++Name(params)` prompt decorators.
//!
//! A message's leading decorator lines are parsed ([`syntax`]), checked
//! against the catalog ([`registry`]), merged with the session's persistent
//! chat scope ([`scope`]), and compiled into a deterministic directive block
//! ([`compile`]). Introspection decorators run locally ([`meta`]).
//! [`Engine::compile_turn`] wires the stages together.

pub mod batch;
pub mod compile;
pub mod engine;
pub mod lint;
pub mod meta;
pub mod registry;
pub mod scope;
pub mod syntax;
pub mod template;

pub use compile::{CompiledPrompt, DirectiveBlock, PipelineStage};
pub use engine::{Engine, EngineError};
pub use meta::{Clock, ExportFormat, FixedClock, SystemClock};
pub use registry::{DecoratorDefinition, Registry, RegistryError, ValidatedDecorator};
pub use scope::{EffectiveSet, Origin, SessionState};
pub use syntax::{DecoratorInvocation, ParseDiagnostic, ParseMode};
