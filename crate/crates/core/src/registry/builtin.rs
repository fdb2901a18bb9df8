use super::{DecoratorDefinition, DecoratorKind, ParamKind, ParamSpec, ParamValue, Subcategory};
use crate::compile::PipelineStage;

use DecoratorKind::{Directive, Meta, ScopeMarker};
use Subcategory::*;

struct Entry {
    name: &'static str,
    subcategory: Subcategory,
    kind: DecoratorKind,
    stage: Option<PipelineStage>,
    params: Vec<ParamSpec>,
    template: &'static str,
    structured: Option<&'static str>,
    description: &'static str,
}

fn entry(
    name: &'static str,
    subcategory: Subcategory,
    kind: DecoratorKind,
    description: &'static str,
    template: &'static str,
) -> Entry {
    Entry {
        name,
        subcategory,
        kind,
        stage: None,
        params: Vec::new(),
        template,
        structured: None,
        description,
    }
}

impl Entry {
    fn stage(mut self, stage: PipelineStage) -> Self {
        self.stage = Some(stage);
        self
    }

    fn param(mut self, spec: ParamSpec) -> Self {
        self.params.push(spec);
        self
    }

    fn structured(mut self, template: &'static str) -> Self {
        self.structured = Some(template);
        self
    }
}

fn enumeration(key: &str, values: &[&str], default: Option<&str>) -> ParamSpec {
    ParamSpec {
        key: key.to_string(),
        kind: ParamKind::Enumeration {
            values: values.iter().map(|v| v.to_string()).collect(),
        },
        required: default.is_none(),
        default: default.map(|d| ParamValue::Symbol(d.to_string())),
    }
}

pub(super) fn definitions() -> Vec<DecoratorDefinition> {
    let entries = vec![
        entry(
            "Reasoning",
            ReasoningGeneration,
            Directive,
            "Provide reasoning before final answer to improve transparency and traceability.",
            "Before answering, lay out the logic and assumptions behind your answer in a section labeled \"Reasoning\". Then state the conclusion in a separate, clearly marked section labeled \"Final Answer\".",
        )
        .structured("Because the output must follow a structured format, do not write the reasoning as free prose. Put the logic and assumptions in a field named \"reasoning\" and the conclusion in a field named \"final_answer\"."),
        entry(
            "StepByStep",
            ReasoningGeneration,
            Directive,
            "Execute the task in labeled steps with a final synthesis.",
            "Work through the task in numbered, labeled steps (Step 1, Step 2, ...), each building on the one before. Finish with a concise \"Final Step\" that synthesizes the result.",
        )
        .structured("Because the output must follow a structured format, do not write the steps as free prose. Put the steps, in order, in a list field named \"steps\" and the synthesis in a field named \"final_step\"."),
        entry(
            "Debate",
            ReasoningGeneration,
            Directive,
            "Present multiple positions before synthesizing a conclusion.",
            "Present at least two distinct positions, labeled \"Position A\", \"Position B\", and so on, each argued on its own terms. Then give a reasoned synthesis that weighs them and reaches a conclusion.",
        )
        .structured("Because the output must follow a structured format, do not write the debate as free prose. Put each position in a list field named \"positions\" (one entry per position, with a \"label\" such as \"Position A\" and an \"argument\"), and the conclusion in a field named \"synthesis\"."),
        entry(
            "Interactive",
            InquiryClarification,
            Directive,
            "Ask clarification questions when prompt is underspecified.",
            "If the request is missing information you need to do the task well, first ask targeted clarifying questions and wait for the answers before continuing. If nothing essential is missing, proceed directly.",
        ),
        entry(
            "Socratic",
            InquiryClarification,
            Directive,
            "Apply Socratic questioning to surface assumptions and deepen understanding.",
            "Restate the question in your own words, surface the assumptions it rests on, and probe them through a short series of layered questions before giving your synthesis.",
        ),
        entry(
            "Planning",
            PlanningIdeation,
            Directive,
            "Outline plan and objectives before task execution.",
            "Begin with a brief section labeled \"Plan\" that lists the objectives, steps, and constraints. Then give the main response in a section labeled \"Execution\".",
        ),
        entry(
            "Brainstorm",
            PlanningIdeation,
            Directive,
            "Generate multiple labeled ideas without judgment.",
            "Generate several distinct ideas, numbered and labeled (Idea 1, Idea 2, ...). Do not evaluate, rank, or discard any of them.",
        ),
        entry(
            "Rewrite",
            PlanningIdeation,
            Directive,
            "Reframe the user prompt into a clearer or more actionable version.",
            "First restate the request as a clearer, more actionable prompt in a section labeled \"Rewritten Prompt\". Then answer that prompt in a section labeled \"Response Based on Rewritten Prompt\".",
        ),
        entry(
            "Import",
            PlanningIdeation,
            Directive,
            "Import a conceptual lens or discipline into reasoning.",
            "Adopt the conceptual lens of \"{topic}\". Name it explicitly at the start and apply it consistently throughout the response.",
        )
        .param(ParamSpec {
            key: "topic".into(),
            kind: ParamKind::String,
            required: true,
            default: None,
        }),
        entry(
            "Critique",
            EvaluationFeedback,
            Directive,
            "Provide structured feedback with strengths, weaknesses, and improvements.",
            "Give structured feedback in this order: Identify Subject, Highlight Strengths, Critique Weaknesses, Suggest Improvements, Conclude.",
        ),
        entry(
            "Refine",
            EvaluationFeedback,
            Directive,
            "Iteratively improve the output through labeled passes.",
            "Improve the response over {iterations} labeled passes ({iterations|seq:Iteration}), each one improving clarity, coherence, or style over the last. End with the finished result in a section labeled \"Final Answer\".",
        )
        .param(ParamSpec {
            key: "iterations".into(),
            kind: ParamKind::Integer { min: 1, max: 10 },
            required: false,
            default: Some(ParamValue::Integer(2)),
        }),
        entry(
            "Candor",
            EvaluationFeedback,
            Directive,
            "Control directness and bluntness of feedback.",
            "Set the directness of feedback to {level} candor (low is diplomatic, medium is balanced, high is blunt) while keeping a professional tone.",
        )
        .stage(PipelineStage::FormattingExpression)
        .param(enumeration("level", &["low", "medium", "high"], Some("medium"))),
        entry(
            "OutputFormat",
            OutputFormatting,
            Directive,
            "Enforce syntactically valid output structure (JSON, YAML, Markdown, etc.).",
            "Format the final output as syntactically valid {format}. Do not add any text outside that structure.",
        )
        .param(enumeration("format", &["json", "yaml", "markdown", "xml"], None)),
        entry(
            "Tone",
            OutputFormatting,
            Directive,
            "Configure tone or stylistic register (formal, technical, friendly, etc.).",
            "Write in a {style} tone. Adjust vocabulary, phrasing, and rhythm to fit it without changing the factual content.",
        )
        .param(enumeration(
            "style",
            &["formal", "casual", "technical", "friendly", "humorous", "professional"],
            None,
        )),
        entry(
            "ChatScope",
            SessionMetaControl,
            ScopeMarker,
            "Activate persistent behavior across conversation turns.",
            "",
        ),
        entry(
            "MessageScope",
            SessionMetaControl,
            ScopeMarker,
            "Restrict decorator effects to the current message only.",
            "",
        ),
        entry(
            "Clear",
            SessionMetaControl,
            Meta,
            "Remove all or selected decorators from chat scope.",
            "",
        ),
        entry(
            "ActiveDecs",
            SessionMetaControl,
            Meta,
            "List all active decorators in the current chat session.",
            "",
        )
        .stage(PipelineStage::IntrospectionExport),
        entry(
            "AvailableDecs",
            SessionMetaControl,
            Meta,
            "Display catalog of supported decorators with activation status.",
            "",
        )
        .stage(PipelineStage::IntrospectionExport),
        entry(
            "Export",
            SessionMetaControl,
            Meta,
            "Export conversation content and metadata for auditing or recordkeeping.",
            "",
        )
        .stage(PipelineStage::IntrospectionExport)
        .param(enumeration("format", &["text", "markdown", "json"], Some("markdown"))),
    ];

    entries
        .into_iter()
        .map(|e| DecoratorDefinition {
            canonical_name: e.name.to_string(),
            aliases: if e.name == "Export" {
                vec!["Dump".to_string()]
            } else {
                Vec::new()
            },
            category: e.subcategory.category(),
            subcategory: e.subcategory,
            stage: e.stage.unwrap_or_else(|| e.subcategory.default_stage()),
            kind: e.kind,
            params: e.params,
            accepts_targets: e.name == "Clear",
            directive_template: e.template.to_string(),
            structured_template: e.structured.map(str::to_string),
            conflicts_with: Vec::new(),
            description: e.description.to_string(),
            builtin: true,
        })
        .collect()
}
