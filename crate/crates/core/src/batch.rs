//! Batch entry points over independent inputs.
//!
//! With the `parallel` feature (on by default) work is spread over the rayon
//! thread pool; without it, or through the `*_sequential` functions, inputs
//! are processed in order on the calling thread. Results are always returned
//! in input order.

use crate::compile::CompiledPrompt;
use crate::engine::{Engine, EngineError};
use crate::lint::{lint_message, LintDiagnostic};
use crate::scope::SessionState;
use crate::syntax::{scan_message, ParseDiagnostic, ParseMode, ScannedMessage};

/// One turn for one independent session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompileJob {
    pub state: SessionState,
    pub message: String,
}

pub type CompileResult = Result<(SessionState, CompiledPrompt), EngineError>;

#[cfg(feature = "parallel")]
fn map_slice<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_slice<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

pub fn compile_batch(engine: &Engine, jobs: &[CompileJob]) -> Vec<CompileResult> {
    map_slice(jobs, |job| engine.compile_turn(&job.state, &job.message))
}

pub fn compile_batch_sequential(engine: &Engine, jobs: &[CompileJob]) -> Vec<CompileResult> {
    jobs.iter()
        .map(|job| engine.compile_turn(&job.state, &job.message))
        .collect()
}

pub fn scan_batch<S: AsRef<str> + Sync>(
    messages: &[S],
    mode: ParseMode,
) -> Vec<Result<ScannedMessage, ParseDiagnostic>> {
    map_slice(messages, |m| scan_message(m.as_ref(), mode))
}

pub fn scan_batch_sequential<S: AsRef<str>>(
    messages: &[S],
    mode: ParseMode,
) -> Vec<Result<ScannedMessage, ParseDiagnostic>> {
    messages
        .iter()
        .map(|m| scan_message(m.as_ref(), mode))
        .collect()
}

pub fn lint_batch<S: AsRef<str> + Sync>(
    engine: &Engine,
    messages: &[S],
) -> Vec<Vec<LintDiagnostic>> {
    map_slice(messages, |m| {
        lint_message(engine.registry(), m.as_ref(), engine.mode())
    })
}
