//! Directive compilation: stage assignment, conflict resolution, and
//! synthesis of the directive block injected ahead of the user's text.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::{ParamValue, ValidatedDecorator};
use crate::scope::{EffectiveSet, Origin};
use crate::template::{self, TemplateError};

/// The six processing stages, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PipelineStage {
    Parsing = 1,
    ScopeResolution = 2,
    PlanningInteraction = 3,
    ReasoningGeneration = 4,
    FormattingExpression = 5,
    IntrospectionExport = 6,
}

impl PipelineStage {
    pub const ALL: [PipelineStage; 6] = [
        PipelineStage::Parsing,
        PipelineStage::ScopeResolution,
        PipelineStage::PlanningInteraction,
        PipelineStage::ReasoningGeneration,
        PipelineStage::FormattingExpression,
        PipelineStage::IntrospectionExport,
    ];

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(index: u8) -> Option<Self> {
        Self::ALL.get(usize::from(index).checked_sub(1)?).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            PipelineStage::Parsing => "Parsing",
            PipelineStage::ScopeResolution => "ScopeResolution",
            PipelineStage::PlanningInteraction => "PlanningInteraction",
            PipelineStage::ReasoningGeneration => "ReasoningGeneration",
            PipelineStage::FormattingExpression => "FormattingExpression",
            PipelineStage::IntrospectionExport => "IntrospectionExport",
        }
    }

    /// Stages whose decorators compile into directive sections.
    pub fn accepts_directives(self) -> bool {
        matches!(
            self,
            PipelineStage::PlanningInteraction
                | PipelineStage::ReasoningGeneration
                | PipelineStage::FormattingExpression
        )
    }
}

impl fmt::Display for PipelineStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.index(), self.label())
    }
}

impl Serialize for PipelineStage {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.index())
    }
}

impl<'de> Deserialize<'de> for PipelineStage {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let index = u8::deserialize(deserializer)?;
        PipelineStage::from_index(index)
            .ok_or_else(|| serde::de::Error::custom(format!("stage {index} is not in 1..=6")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TemplateVariant {
    #[default]
    Standard,
    /// Reasoning goes into designated fields of a machine-readable output.
    Structured,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedDecorator {
    pub decorator: ValidatedDecorator,
    pub origin: Origin,
    pub stage: PipelineStage,
    pub variant: TemplateVariant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictNote {
    pub rule: String,
    pub decorator: String,
    pub cause: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("{first} cannot be combined with {second}")]
    HardConflict { first: String, second: String },
    #[error("template for {decorator} failed: {source}")]
    TemplateInstantiationFailure {
        decorator: String,
        source: TemplateError,
    },
}

/// Tags each entry with its stage and orders by (stage, set position).
pub fn plan(effective: &EffectiveSet) -> Vec<PlannedDecorator> {
    let mut planned: Vec<PlannedDecorator> = effective
        .entries
        .iter()
        .map(|entry| PlannedDecorator {
            decorator: entry.decorator.clone(),
            origin: entry.origin,
            stage: entry.decorator.definition.stage,
            variant: TemplateVariant::Standard,
        })
        .collect();
    // Vec::sort_by_key is stable.
    planned.sort_by_key(|p| p.stage);
    planned
}

const STRUCTURED_FORMATS: [&str; 3] = ["json", "yaml", "xml"];

/// Applies the precedence rules between decorators.
///
/// A machine-readable `OutputFormat` switches prose-structured reasoning
/// decorators to their structured variant, one note per adaptation.
/// Declared hard conflicts between extensions are errors.
pub fn resolve_conflicts(
    mut planned: Vec<PlannedDecorator>,
) -> Result<(Vec<PlannedDecorator>, Vec<ConflictNote>), CompileError> {
    for (i, a) in planned.iter().enumerate() {
        for b in &planned[i + 1..] {
            let declared = |x: &PlannedDecorator, y: &PlannedDecorator| {
                x.decorator
                    .definition
                    .conflicts_with
                    .iter()
                    .any(|n| n.eq_ignore_ascii_case(y.decorator.name()))
            };
            if declared(a, b) || declared(b, a) {
                return Err(CompileError::HardConflict {
                    first: a.decorator.name().to_string(),
                    second: b.decorator.name().to_string(),
                });
            }
        }
    }

    let mut notes = Vec::new();
    let structured_format = planned.iter().find_map(|p| {
        if p.decorator.name() != "OutputFormat" {
            return None;
        }
        match p.decorator.param("format") {
            Some(ParamValue::Symbol(f)) if STRUCTURED_FORMATS.contains(&f.as_str()) => {
                Some(f.clone())
            }
            _ => None,
        }
    });

    if let Some(format) = structured_format {
        for p in planned.iter_mut() {
            if p.decorator.definition.structured_template.is_some() {
                p.variant = TemplateVariant::Structured;
                notes.push(ConflictNote {
                    rule: "structured-output".to_string(),
                    decorator: p.decorator.name().to_string(),
                    cause: format!("OutputFormat(format={format})"),
                    message: format!(
                        "{} uses its structured variant so reasoning lands in designated {format} fields instead of free prose",
                        p.decorator.name()
                    ),
                });
            }
        }
    }

    Ok((planned, notes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DirectiveSection {
    pub stage: PipelineStage,
    pub name: String,
    pub text: String,
}

impl DirectiveSection {
    pub fn marker(&self) -> String {
        format!("[decorator: {}]", self.name)
    }
}

/// Preamble placed ahead of the sections when the block is injected.
pub const DIRECTIVE_HEADER: &str =
    "Response directives. Apply each section below, in the order given, while answering the user's message.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DirectiveBlock {
    pub sections: Vec<DirectiveSection>,
    pub header: String,
    /// Sections joined by blank lines; empty when there are no sections.
    pub rendered: String,
}

impl DirectiveBlock {
    pub fn empty() -> Self {
        Self::from_sections(Vec::new())
    }

    pub fn from_sections(sections: Vec<DirectiveSection>) -> Self {
        let rendered = sections
            .iter()
            .map(|s| format!("{}\n{}", s.marker(), s.text))
            .collect::<Vec<_>>()
            .join("\n\n");
        Self {
            sections,
            header: DIRECTIVE_HEADER.to_string(),
            rendered,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.sections.is_empty()
    }

    /// Header plus sections, as sent upstream.
    pub fn injection_text(&self) -> String {
        if self.is_empty() {
            String::new()
        } else {
            format!("{}\n\n{}", self.header, self.rendered)
        }
    }

    pub fn names(&self) -> Vec<&str> {
        self.sections.iter().map(|s| s.name.as_str()).collect()
    }
}

pub fn synthesize_directives(planned: &[PlannedDecorator]) -> Result<DirectiveBlock, CompileError> {
    let mut sections = Vec::with_capacity(planned.len());
    for p in planned {
        let def = &p.decorator.definition;
        let template = match (p.variant, &def.structured_template) {
            (TemplateVariant::Structured, Some(t)) => t,
            _ => &def.directive_template,
        };
        let text =
            template::instantiate(template, |key| p.decorator.param(key)).map_err(|source| {
                CompileError::TemplateInstantiationFailure {
                    decorator: def.canonical_name.clone(),
                    source,
                }
            })?;
        sections.push(DirectiveSection {
            stage: p.stage,
            name: def.canonical_name.clone(),
            text,
        });
    }
    Ok(DirectiveBlock::from_sections(sections))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveEntry {
    pub name: String,
    pub origin: Origin,
    pub stage: PipelineStage,
}

/// Per-turn metadata for audit logging.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AuditMetadata {
    pub turn_index: u64,
    pub active: Vec<ActiveEntry>,
    pub conflicts: Vec<ConflictNote>,
    pub meta: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MetaOutput {
    pub name: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompiledPrompt {
    pub directive_block: DirectiveBlock,
    pub body: String,
    pub meta_outputs: Vec<MetaOutput>,
    pub audit: AuditMetadata,
    pub warnings: Vec<String>,
    /// Number of decorator lines consumed from the message.
    pub decorator_count: usize,
    /// Only meta (and scope-marker) decorators and a blank body: the turn
    /// is answered locally.
    pub pure_meta: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::Registry;
    use crate::scope::EffectiveEntry;
    use crate::syntax::parse_invocation;

    fn effective(lines: &[&str]) -> EffectiveSet {
        let registry = Registry::builtin();
        EffectiveSet {
            entries: lines
                .iter()
                .map(|l| EffectiveEntry {
                    decorator: registry.validate(&parse_invocation(l).unwrap()).unwrap(),
                    origin: Origin::Message,
                })
                .collect(),
        }
    }

    fn staged(planned: &[PlannedDecorator]) -> Vec<(&str, u8)> {
        planned
            .iter()
            .map(|p| (p.decorator.name(), p.stage.index()))
            .collect()
    }

    #[test]
    fn stage_labels() {
        let labels: Vec<_> = PipelineStage::ALL.iter().map(|s| s.label()).collect();
        assert_eq!(
            labels,
            [
                "Parsing",
                "ScopeResolution",
                "PlanningInteraction",
                "ReasoningGeneration",
                "FormattingExpression",
                "IntrospectionExport"
            ]
        );
        assert_eq!(PipelineStage::from_index(0), None);
        assert_eq!(PipelineStage::from_index(7), None);
        for s in PipelineStage::ALL {
            assert_eq!(PipelineStage::from_index(s.index()), Some(s));
        }
    }

    #[test]
    fn plans_by_stage() {
        let p = plan(&effective(&[
            "+++Reasoning",
            "+++Tone(style=formal)",
            "+++OutputFormat(format=markdown)",
        ]));
        assert_eq!(
            staged(&p),
            [("Reasoning", 4), ("Tone", 5), ("OutputFormat", 5)]
        );

        let p = plan(&effective(&[
            "+++OutputFormat(format=json)",
            "+++Rewrite",
            "+++Debate",
        ]));
        assert_eq!(
            staged(&p),
            [("Rewrite", 3), ("Debate", 4), ("OutputFormat", 5)]
        );

        assert!(plan(&EffectiveSet::default()).is_empty());
    }

    #[test]
    fn structured_output_adapts_reasoning() {
        let (p, notes) = resolve_conflicts(plan(&effective(&[
            "+++Reasoning",
            "+++OutputFormat(format=json)",
        ])))
        .unwrap();
        assert_eq!(p[0].variant, TemplateVariant::Structured);
        assert_eq!(notes.len(), 1);
        assert_eq!(notes[0].decorator, "Reasoning");
        assert_eq!(notes[0].cause, "OutputFormat(format=json)");

        let (_, notes) = resolve_conflicts(plan(&effective(&[
            "+++Reasoning",
            "+++OutputFormat(format=markdown)",
        ])))
        .unwrap();
        assert!(notes.is_empty());
    }

    #[test]
    fn candor_and_tone_coexist() {
        let input = plan(&effective(&[
            "+++Critique",
            "+++Candor(level=high)",
            "+++Tone(style=professional)",
        ]));
        let (p, notes) = resolve_conflicts(input.clone()).unwrap();
        assert_eq!(p, input);
        assert!(notes.is_empty());
        assert_eq!(resolve_conflicts(vec![]).unwrap(), (vec![], vec![]));
    }

    #[test]
    fn hard_conflicts_from_extensions() {
        let mut registry = Registry::builtin();
        registry
            .load_extensions(
                r#"[{"name":"Terse","description":"Answer in one line.","subcategory":"Output Formatting",
                     "stage":5,"params":[],"template":"Answer in a single line.","conflicts_with":["StepByStep"]}]"#,
            )
            .unwrap();
        let set = EffectiveSet {
            entries: ["+++StepByStep", "+++Terse"]
                .iter()
                .map(|l| EffectiveEntry {
                    decorator: registry.validate(&parse_invocation(l).unwrap()).unwrap(),
                    origin: Origin::Message,
                })
                .collect(),
        };
        assert_eq!(
            resolve_conflicts(plan(&set)).unwrap_err(),
            CompileError::HardConflict {
                first: "StepByStep".into(),
                second: "Terse".into()
            }
        );
    }

    #[test]
    fn refine_lists_every_iteration() {
        let block = synthesize_directives(&plan(&effective(&["+++Refine(iterations=3)"]))).unwrap();
        let text = &block.sections[0].text;
        for needle in ["Iteration 1", "Iteration 2", "Iteration 3", "Final Answer"] {
            assert!(text.contains(needle), "{needle}");
        }
        assert!(!text.contains("Iteration 4"));
    }

    #[test]
    fn import_carries_topic() {
        let block = synthesize_directives(&plan(&effective(&[
            "+++Import(topic=\"Systems Thinking\")",
        ])))
        .unwrap();
        assert!(block.rendered.contains("Systems Thinking"));
        assert!(block.rendered.contains("apply it consistently"));
    }

    #[test]
    fn labeled_output_contracts() {
        let cases: [(&str, &[&str]); 5] = [
            ("+++Reasoning", &["Reasoning", "Final Answer"]),
            ("+++StepByStep", &["Step 1", "Step 2", "Final Step"]),
            ("+++Debate", &["Position A", "Position B", "synthesis"]),
            ("+++Planning", &["Plan", "Execution"]),
            (
                "+++Rewrite",
                &["Rewritten Prompt", "Response Based on Rewritten Prompt"],
            ),
        ];
        for (line, needles) in cases {
            let block = synthesize_directives(&plan(&effective(&[line]))).unwrap();
            for needle in needles {
                assert!(block.rendered.contains(needle), "{line}: {needle}");
            }
        }
    }

    #[test]
    fn empty_block() {
        let block = synthesize_directives(&[]).unwrap();
        assert_eq!(block.rendered, "");
        assert_eq!(block.injection_text(), "");
    }

    #[test]
    fn rendered_sections_have_markers() {
        let block = synthesize_directives(&plan(&effective(&[
            "+++Tone(style=formal)",
            "+++Reasoning",
        ])))
        .unwrap();
        let markers: Vec<&str> = block
            .rendered
            .lines()
            .filter(|l| l.starts_with("[decorator: "))
            .collect();
        assert_eq!(markers, ["[decorator: Reasoning]", "[decorator: Tone]"]);
        assert_eq!(block.rendered.split("\n\n").count(), 2);
    }

    #[test]
    fn broken_template_fails() {
        let mut set = effective(&["+++Tone(style=formal)"]);
        let mut def = (*set.entries[0].decorator.definition).clone();
        def.directive_template = "Use {voice}.".into();
        set.entries[0].decorator.definition = std::sync::Arc::new(def);
        assert!(matches!(
            synthesize_directives(&plan(&set)),
            Err(CompileError::TemplateInstantiationFailure { .. })
        ));
    }
}
