//! Decorator catalog, parameter schemas, and invocation validation.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compile::PipelineStage;
use crate::syntax::{DecoratorInvocation, Parameter, Value, TARGET_KEY};
use crate::template;

mod builtin;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    CognitiveGenerative,
    ExpressiveSystemic,
}

impl Category {
    pub fn label(self) -> &'static str {
        match self {
            Category::CognitiveGenerative => "Cognitive & Generative",
            Category::ExpressiveSystemic => "Expressive & Systemic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subcategory {
    #[serde(rename = "Reasoning & Generation", alias = "reasoning_generation")]
    ReasoningGeneration,
    #[serde(rename = "Inquiry & Clarification", alias = "inquiry_clarification")]
    InquiryClarification,
    #[serde(rename = "Planning & Ideation", alias = "planning_ideation")]
    PlanningIdeation,
    #[serde(rename = "Evaluation & Feedback", alias = "evaluation_feedback")]
    EvaluationFeedback,
    #[serde(rename = "Output Formatting", alias = "output_formatting")]
    OutputFormatting,
    #[serde(rename = "Session & Meta Control", alias = "session_meta_control")]
    SessionMetaControl,
}

impl Subcategory {
    pub fn label(self) -> &'static str {
        match self {
            Subcategory::ReasoningGeneration => "Reasoning & Generation",
            Subcategory::InquiryClarification => "Inquiry & Clarification",
            Subcategory::PlanningIdeation => "Planning & Ideation",
            Subcategory::EvaluationFeedback => "Evaluation & Feedback",
            Subcategory::OutputFormatting => "Output Formatting",
            Subcategory::SessionMetaControl => "Session & Meta Control",
        }
    }

    pub fn category(self) -> Category {
        match self {
            Subcategory::ReasoningGeneration
            | Subcategory::InquiryClarification
            | Subcategory::PlanningIdeation
            | Subcategory::EvaluationFeedback => Category::CognitiveGenerative,
            Subcategory::OutputFormatting | Subcategory::SessionMetaControl => {
                Category::ExpressiveSystemic
            }
        }
    }

    /// Default pipeline stage for directive decorators in this subcategory.
    pub fn default_stage(self) -> PipelineStage {
        match self {
            Subcategory::InquiryClarification | Subcategory::PlanningIdeation => {
                PipelineStage::PlanningInteraction
            }
            Subcategory::ReasoningGeneration | Subcategory::EvaluationFeedback => {
                PipelineStage::ReasoningGeneration
            }
            Subcategory::OutputFormatting => PipelineStage::FormattingExpression,
            Subcategory::SessionMetaControl => PipelineStage::ScopeResolution,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoratorKind {
    /// Compiled into a directive section.
    Directive,
    /// Executed locally by the engine.
    Meta,
    /// Changes where other decorators apply.
    ScopeMarker,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ParamKind {
    Integer { min: i64, max: i64 },
    Enumeration { values: Vec<String> },
    String,
    Boolean,
}

/// A value after validation, with the schema's kind applied.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(untagged)]
pub enum ParamValue {
    Integer(i64),
    /// Enumeration member, rendered unquoted.
    Symbol(String),
    Text(String),
    Boolean(bool),
}

impl ParamValue {
    pub fn to_value(&self) -> Value {
        match self {
            ParamValue::Integer(n) => Value::Integer(*n),
            ParamValue::Symbol(s) => Value::Ident(s.clone()),
            ParamValue::Text(s) => Value::Str(s.clone()),
            ParamValue::Boolean(b) => Value::Ident(b.to_string()),
        }
    }

    pub fn as_integer(&self) -> Option<i64> {
        match self {
            ParamValue::Integer(n) => Some(*n),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Integer(n) => write!(f, "{n}"),
            ParamValue::Symbol(s) | ParamValue::Text(s) => f.write_str(s),
            ParamValue::Boolean(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParamSpec {
    pub key: String,
    #[serde(flatten)]
    pub kind: ParamKind,
    pub required: bool,
    pub default: Option<ParamValue>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecoratorDefinition {
    pub canonical_name: String,
    pub aliases: Vec<String>,
    pub category: Category,
    pub subcategory: Subcategory,
    pub stage: PipelineStage,
    pub kind: DecoratorKind,
    pub params: Vec<ParamSpec>,
    /// Accepts positional decorator-name targets (Clear).
    pub accepts_targets: bool,
    pub directive_template: String,
    /// Replacement template used when the output must be machine-structured.
    pub structured_template: Option<String>,
    /// Names this decorator cannot be combined with.
    pub conflicts_with: Vec<String>,
    pub description: String,
    pub builtin: bool,
}

impl DecoratorDefinition {
    pub fn param_spec(&self, key: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.key == key)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("unknown decorator `{name}`")]
    UnknownDecorator { name: String },
    #[error("{decorator} does not accept parameter `{key}`")]
    UnknownParameter { decorator: String, key: String },
    #[error("{decorator} requires parameter `{key}`")]
    MissingRequiredParameter { decorator: String, key: String },
    #[error("{decorator}.{key} = {value} is outside [{min}, {max}]")]
    ValueOutOfRange {
        decorator: String,
        key: String,
        value: i64,
        min: i64,
        max: i64,
    },
    #[error("{decorator}.{key} = {value} is not one of: {}", allowed.join(", "))]
    ValueNotInEnumeration {
        decorator: String,
        key: String,
        value: String,
        allowed: Vec<String>,
    },
    #[error("{decorator}.{key} expects {expected}, got {found}")]
    InvalidValueType {
        decorator: String,
        key: String,
        expected: &'static str,
        found: String,
    },
    #[error("decorator name `{name}` is already defined")]
    NameCollision { name: String },
    #[error("malformed extension: {0}")]
    MalformedExtension(String),
    #[error("extension `{name}` declares kind `{kind}`; only `directive` is allowed")]
    IllegalKind { name: String, kind: String },
}

/// A decorator invocation checked against its definition, with defaults
/// filled in.
#[derive(Debug, Clone)]
pub struct ValidatedDecorator {
    pub definition: Arc<DecoratorDefinition>,
    /// Every schema key in schema order.
    pub params: Vec<(String, ParamValue)>,
    /// Canonicalized Clear targets; unknown names are kept as written.
    pub targets: Vec<String>,
    pub invocation: DecoratorInvocation,
}

impl ValidatedDecorator {
    pub fn name(&self) -> &str {
        &self.definition.canonical_name
    }

    pub fn kind(&self) -> DecoratorKind {
        self.definition.kind
    }

    pub fn param(&self, key: &str) -> Option<&ParamValue> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    /// Canonical-name invocation with all resolved parameters.
    pub fn canonical_invocation(&self) -> DecoratorInvocation {
        let mut params: Vec<Parameter> = self
            .params
            .iter()
            .map(|(k, v)| Parameter::new(k.clone(), v.to_value()))
            .collect();
        params.extend(
            self.targets
                .iter()
                .map(|t| Parameter::new(TARGET_KEY, Value::DecoratorName(t.clone()))),
        );
        DecoratorInvocation::new(self.name(), params)
    }

    pub fn render(&self) -> String {
        self.canonical_invocation().render()
    }
}

impl PartialEq for ValidatedDecorator {
    fn eq(&self, other: &Self) -> bool {
        self.name() == other.name() && self.params == other.params && self.targets == other.targets
    }
}

impl Eq for ValidatedDecorator {}

/// The decorator catalog. Built once, optionally extended, then shared
/// read-only.
#[derive(Debug, Clone)]
pub struct Registry {
    definitions: Vec<Arc<DecoratorDefinition>>,
    index: HashMap<String, usize>,
}

impl Default for Registry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Registry {
    /// The twenty built-in decorators in catalog order.
    pub fn builtin() -> Self {
        let mut registry = Registry {
            definitions: Vec::new(),
            index: HashMap::new(),
        };
        for def in builtin::definitions() {
            registry
                .insert(def)
                .expect("built-in catalog has unique names");
        }
        registry
    }

    fn insert(&mut self, def: DecoratorDefinition) -> Result<(), RegistryError> {
        let names: Vec<String> = std::iter::once(&def.canonical_name)
            .chain(&def.aliases)
            .map(|n| n.to_ascii_lowercase())
            .collect();
        for name in &names {
            if self.index.contains_key(name) {
                return Err(RegistryError::NameCollision { name: name.clone() });
            }
        }
        let slot = self.definitions.len();
        for name in names {
            self.index.insert(name, slot);
        }
        self.definitions.push(Arc::new(def));
        Ok(())
    }

    pub fn catalog(&self) -> &[Arc<DecoratorDefinition>] {
        &self.definitions
    }

    pub fn len(&self) -> usize {
        self.definitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.definitions.is_empty()
    }

    /// Case-insensitive lookup over canonical names and aliases.
    pub fn lookup(&self, name: &str) -> Result<&Arc<DecoratorDefinition>, RegistryError> {
        self.index
            .get(&name.to_ascii_lowercase())
            .map(|&i| &self.definitions[i])
            .ok_or_else(|| RegistryError::UnknownDecorator {
                name: name.to_string(),
            })
    }

    /// Canonical spelling of `name` if it is known.
    pub fn canonical_name(&self, name: &str) -> Option<&str> {
        self.lookup(name).ok().map(|d| d.canonical_name.as_str())
    }

    pub fn validate(&self, inv: &DecoratorInvocation) -> Result<ValidatedDecorator, RegistryError> {
        let definition = Arc::clone(self.lookup(&inv.name)?);
        let decorator = definition.canonical_name.as_str();

        let mut targets = Vec::new();
        for param in &inv.params {
            if let Value::DecoratorName(target) = &param.value {
                if !definition.accepts_targets {
                    return Err(RegistryError::UnknownParameter {
                        decorator: decorator.to_string(),
                        key: param.key.clone(),
                    });
                }
                let canonical = self.canonical_name(target).unwrap_or(target);
                if !targets.iter().any(|t| t == canonical) {
                    targets.push(canonical.to_string());
                }
            } else if definition.param_spec(&param.key).is_none() {
                return Err(RegistryError::UnknownParameter {
                    decorator: decorator.to_string(),
                    key: param.key.clone(),
                });
            }
        }

        let mut params = Vec::with_capacity(definition.params.len());
        for spec in &definition.params {
            let resolved = match inv.param(&spec.key) {
                Some(value) => resolve_value(decorator, spec, value)?,
                None => match &spec.default {
                    Some(default) => default.clone(),
                    None => {
                        return Err(RegistryError::MissingRequiredParameter {
                            decorator: decorator.to_string(),
                            key: spec.key.clone(),
                        })
                    }
                },
            };
            params.push((spec.key.clone(), resolved));
        }

        Ok(ValidatedDecorator {
            definition,
            params,
            targets,
            invocation: inv.clone(),
        })
    }

    /// Parses an extension document and appends its definitions. Either every
    /// entry is accepted or the registry is left unchanged.
    pub fn load_extensions(
        &mut self,
        doc: &str,
    ) -> Result<Vec<Arc<DecoratorDefinition>>, RegistryError> {
        let entries: Vec<ExtensionEntry> = serde_json::from_str(doc)
            .map_err(|e| RegistryError::MalformedExtension(e.to_string()))?;
        let mut staged = self.clone();
        for entry in entries {
            let def = entry.into_definition()?;
            staged.insert(def)?;
        }
        for def in &staged.definitions[self.definitions.len()..] {
            for other in &def.conflicts_with {
                if staged.lookup(other).is_err() {
                    return Err(RegistryError::MalformedExtension(format!(
                        "`{}` declares a conflict with unknown decorator `{other}`",
                        def.canonical_name
                    )));
                }
            }
        }
        let added = staged.definitions[self.definitions.len()..].to_vec();
        *self = staged;
        Ok(added)
    }

    /// Closest catalog name for a misspelled decorator, for lint hints.
    ///
    /// A candidate matches when the edit distance to the whole name or to
    /// one of its prefixes is at most 2. Ties go to the smaller whole-name
    /// distance, then to catalog order.
    pub fn suggest(&self, name: &str) -> Option<&str> {
        const MAX_DISTANCE: usize = 2;
        let needle = name.to_ascii_lowercase();
        if needle.chars().count() < 3 {
            return None;
        }
        let mut best: Option<(usize, usize, &str)> = None;
        for def in &self.definitions {
            for candidate in std::iter::once(&def.canonical_name).chain(&def.aliases) {
                let hay = candidate.to_ascii_lowercase();
                let full = strsim::levenshtein(&needle, &hay);
                let prefix = (1..=hay.len())
                    .map(|k| strsim::levenshtein(&needle, &hay[..k]))
                    .min()
                    .unwrap_or(full);
                let score = full.min(prefix);
                if score > MAX_DISTANCE {
                    continue;
                }
                let key = (score, full, def.canonical_name.as_str());
                if best.is_none_or(|(s, f, _)| (score, full) < (s, f)) {
                    best = Some(key);
                }
            }
        }
        best.map(|(_, _, name)| name)
    }
}

fn resolve_value(
    decorator: &str,
    spec: &ParamSpec,
    value: &Value,
) -> Result<ParamValue, RegistryError> {
    let type_error = |expected: &'static str| RegistryError::InvalidValueType {
        decorator: decorator.to_string(),
        key: spec.key.clone(),
        expected,
        found: value.to_string(),
    };
    match (&spec.kind, value) {
        (ParamKind::Integer { min, max }, Value::Integer(n)) => {
            if n < min || n > max {
                Err(RegistryError::ValueOutOfRange {
                    decorator: decorator.to_string(),
                    key: spec.key.clone(),
                    value: *n,
                    min: *min,
                    max: *max,
                })
            } else {
                Ok(ParamValue::Integer(*n))
            }
        }
        (ParamKind::Integer { .. }, _) => Err(type_error("an integer")),
        (ParamKind::Enumeration { values }, Value::Ident(s) | Value::Str(s)) => values
            .iter()
            .find(|v| v.eq_ignore_ascii_case(s))
            .map(|v| ParamValue::Symbol(v.clone()))
            .ok_or_else(|| RegistryError::ValueNotInEnumeration {
                decorator: decorator.to_string(),
                key: spec.key.clone(),
                value: s.clone(),
                allowed: values.clone(),
            }),
        (ParamKind::Enumeration { .. }, _) => Err(type_error("an enumeration member")),
        (ParamKind::String, Value::Ident(s) | Value::Str(s)) => {
            if s.trim().is_empty() {
                Err(type_error("a non-empty string"))
            } else {
                Ok(ParamValue::Text(s.clone()))
            }
        }
        (ParamKind::String, _) => Err(type_error("a string")),
        (ParamKind::Boolean, Value::Ident(s)) if s == "true" || s == "false" => {
            Ok(ParamValue::Boolean(s == "true"))
        }
        (ParamKind::Boolean, _) => Err(type_error("`true` or `false`")),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtensionEntry {
    name: String,
    description: String,
    subcategory: Subcategory,
    stage: u8,
    #[serde(default)]
    params: Vec<ExtensionParam>,
    template: String,
    #[serde(default)]
    kind: Option<String>,
    #[serde(default)]
    conflicts_with: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtensionParam {
    key: String,
    kind: String,
    required: bool,
    #[serde(default)]
    values: Option<Vec<String>>,
    #[serde(default)]
    min: Option<i64>,
    #[serde(default)]
    max: Option<i64>,
    #[serde(default)]
    default: Option<serde_json::Value>,
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric())
}

impl ExtensionEntry {
    fn into_definition(self) -> Result<DecoratorDefinition, RegistryError> {
        let malformed = |msg: String| RegistryError::MalformedExtension(msg);
        if !is_identifier(&self.name) {
            return Err(malformed(format!(
                "`{}` is not a valid decorator name",
                self.name
            )));
        }
        match self.kind.as_deref() {
            None | Some("directive") => {}
            Some(other) => {
                return Err(RegistryError::IllegalKind {
                    name: self.name,
                    kind: other.to_string(),
                })
            }
        }
        let description = self.description.trim().to_string();
        if description.is_empty() || description.chars().count() > 200 {
            return Err(malformed(format!(
                "`{}` needs a one-line description of at most 200 characters",
                self.name
            )));
        }
        let stage = PipelineStage::from_index(self.stage)
            .filter(|s| s.accepts_directives())
            .ok_or_else(|| {
                malformed(format!(
                    "`{}` has stage {}; directive stages are 3, 4 and 5",
                    self.name, self.stage
                ))
            })?;

        let mut params: Vec<ParamSpec> = Vec::new();
        for p in self.params {
            if params.iter().any(|q| q.key == p.key) {
                return Err(malformed(format!(
                    "`{}` repeats parameter `{}`",
                    self.name, p.key
                )));
            }
            params.push(p.into_spec(&self.name)?);
        }

        let placeholders = template::placeholders(&self.template)
            .map_err(|e| malformed(format!("`{}` template: {e}", self.name)))?;
        for key in placeholders {
            if !params.iter().any(|p| p.key == key) {
                return Err(malformed(format!(
                    "`{}` template references undeclared parameter `{key}`",
                    self.name
                )));
            }
        }

        Ok(DecoratorDefinition {
            canonical_name: self.name,
            aliases: Vec::new(),
            category: self.subcategory.category(),
            subcategory: self.subcategory,
            stage,
            kind: DecoratorKind::Directive,
            params,
            accepts_targets: false,
            directive_template: self.template,
            structured_template: None,
            conflicts_with: self.conflicts_with,
            description,
            builtin: false,
        })
    }
}

impl ExtensionParam {
    fn into_spec(self, decorator: &str) -> Result<ParamSpec, RegistryError> {
        let malformed = |msg: &str| {
            RegistryError::MalformedExtension(format!("`{decorator}.{}`: {msg}", self.key))
        };
        if !self.key.starts_with(|c: char| c.is_ascii_alphabetic())
            || !self
                .key
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            return Err(malformed("invalid parameter key"));
        }
        let kind = match self.kind.as_str() {
            "integer" => {
                let (min, max) = (self.min.unwrap_or(i64::MIN), self.max.unwrap_or(i64::MAX));
                if min > max {
                    return Err(malformed("min exceeds max"));
                }
                ParamKind::Integer { min, max }
            }
            "enum" | "enumeration" => match &self.values {
                Some(values) if !values.is_empty() => ParamKind::Enumeration {
                    values: values.clone(),
                },
                _ => return Err(malformed("enumeration needs a non-empty `values` list")),
            },
            "string" => ParamKind::String,
            "boolean" => ParamKind::Boolean,
            other => return Err(malformed(&format!("unknown parameter kind `{other}`"))),
        };

        let default = match (&self.default, self.required) {
            (Some(_), true) => return Err(malformed("required parameters cannot have a default")),
            (None, false) => return Err(malformed("optional parameters need a default")),
            (None, true) => None,
            (Some(json), false) => {
                let value = match json {
                    serde_json::Value::Number(n) => Value::Integer(
                        n.as_i64()
                            .ok_or_else(|| malformed("default must be an integer"))?,
                    ),
                    serde_json::Value::String(s) if matches!(kind, ParamKind::String) => {
                        Value::Str(s.clone())
                    }
                    serde_json::Value::String(s) => Value::Ident(s.clone()),
                    serde_json::Value::Bool(b) => Value::Ident(b.to_string()),
                    _ => return Err(malformed("unsupported default value")),
                };
                let probe = ParamSpec {
                    key: self.key.clone(),
                    kind: kind.clone(),
                    required: false,
                    default: None,
                };
                Some(
                    resolve_value(decorator, &probe, &value)
                        .map_err(|e| malformed(&format!("invalid default: {e}")))?,
                )
            }
        };

        Ok(ParamSpec {
            key: self.key,
            kind,
            required: self.required,
            default,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_invocation;

    fn validate(line: &str) -> Result<ValidatedDecorator, RegistryError> {
        Registry::builtin().validate(&parse_invocation(line).unwrap())
    }

    #[test]
    fn catalog_order_and_counts() {
        let registry = Registry::builtin();
        let names: Vec<&str> = registry
            .catalog()
            .iter()
            .map(|d| d.canonical_name.as_str())
            .collect();
        assert_eq!(
            names,
            [
                "Reasoning",
                "StepByStep",
                "Debate",
                "Interactive",
                "Socratic",
                "Planning",
                "Brainstorm",
                "Rewrite",
                "Import",
                "Critique",
                "Refine",
                "Candor",
                "OutputFormat",
                "Tone",
                "ChatScope",
                "MessageScope",
                "Clear",
                "ActiveDecs",
                "AvailableDecs",
                "Export",
            ]
        );
        let cognitive = registry
            .catalog()
            .iter()
            .filter(|d| d.category == Category::CognitiveGenerative)
            .count();
        assert_eq!(cognitive, 12);
        for def in registry.catalog() {
            assert!(!def.description.is_empty() && def.description.chars().count() <= 200);
        }
    }

    #[test]
    fn definition_invariants() {
        for def in Registry::builtin().catalog() {
            for p in &def.params {
                assert_eq!(
                    p.required,
                    p.default.is_none(),
                    "{}.{}",
                    def.canonical_name,
                    p.key
                );
            }
            let meta = ["Clear", "ActiveDecs", "AvailableDecs", "Export"];
            let markers = ["ChatScope", "MessageScope"];
            let name = def.canonical_name.as_str();
            assert_eq!(def.kind == DecoratorKind::Meta, meta.contains(&name));
            assert_eq!(
                def.kind == DecoratorKind::ScopeMarker,
                markers.contains(&name)
            );
            assert_eq!(
                def.directive_template.is_empty(),
                def.kind != DecoratorKind::Directive
            );
            assert_eq!(def.category, def.subcategory.category());
        }
    }

    #[test]
    fn stage_assignment() {
        let registry = Registry::builtin();
        let stage = |n: &str| registry.lookup(n).unwrap().stage.index();
        assert_eq!(stage("Interactive"), 3);
        assert_eq!(stage("Rewrite"), 3);
        assert_eq!(stage("Import"), 3);
        assert_eq!(stage("Reasoning"), 4);
        assert_eq!(stage("Refine"), 4);
        assert_eq!(stage("Candor"), 5);
        assert_eq!(stage("Tone"), 5);
        assert_eq!(stage("ChatScope"), 2);
        assert_eq!(stage("Clear"), 2);
        assert_eq!(stage("Export"), 6);
        assert_eq!(stage("ActiveDecs"), 6);
    }

    #[test]
    fn lookup_is_case_insensitive_and_resolves_alias() {
        let registry = Registry::builtin();
        let def = registry.lookup("reasoning").unwrap();
        assert_eq!(def.canonical_name, "Reasoning");
        assert_eq!(def.subcategory, Subcategory::ReasoningGeneration);
        assert_eq!(registry.lookup("Dump").unwrap().canonical_name, "Export");
        assert_eq!(registry.lookup("dUMP").unwrap().canonical_name, "Export");
        assert_eq!(
            registry.lookup("Reason").unwrap_err(),
            RegistryError::UnknownDecorator {
                name: "Reason".into()
            }
        );
    }

    #[test]
    fn validates_schemas() {
        let candor = validate("+++Candor(level=high)").unwrap();
        assert_eq!(
            candor.param("level"),
            Some(&ParamValue::Symbol("high".into()))
        );

        assert!(matches!(
            validate("+++Reasoning(depth=2)"),
            Err(RegistryError::UnknownParameter { .. })
        ));
        let refine = validate("+++Refine").unwrap();
        assert_eq!(refine.param("iterations"), Some(&ParamValue::Integer(2)));
        assert!(matches!(
            validate("+++Refine(iterations=11)"),
            Err(RegistryError::ValueOutOfRange { .. })
        ));
        assert!(matches!(
            validate("+++Refine(iterations=0)"),
            Err(RegistryError::ValueOutOfRange { .. })
        ));
        assert!(matches!(
            validate("+++Refine(iterations=many)"),
            Err(RegistryError::InvalidValueType { .. })
        ));
        assert!(matches!(
            validate("+++OutputFormat(format=csv)"),
            Err(RegistryError::ValueNotInEnumeration { .. })
        ));
        assert!(matches!(
            validate("+++OutputFormat"),
            Err(RegistryError::MissingRequiredParameter { .. })
        ));
        assert!(matches!(
            validate("+++Import(topic=\"  \")"),
            Err(RegistryError::InvalidValueType { .. })
        ));
        let export = validate("+++Dump").unwrap();
        assert_eq!(export.name(), "Export");
        assert_eq!(
            export.param("format"),
            Some(&ParamValue::Symbol("markdown".into()))
        );
        let tone = validate("+++tone(style=\"Formal\")").unwrap();
        assert_eq!(tone.render(), "+++Tone(style=formal)");
    }

    #[test]
    fn clear_targets_are_canonicalized() {
        let clear = validate("+++Clear(+++reasoning, Tone, +++Bogus, +++Reasoning)").unwrap();
        assert_eq!(clear.targets, ["Reasoning", "Tone", "Bogus"]);
        assert_eq!(clear.render(), "+++Clear(+++Reasoning, +++Tone, +++Bogus)");
        assert!(matches!(
            validate("+++Clear(target=Tone)"),
            Err(RegistryError::UnknownParameter { .. })
        ));
    }

    const SUMMARIZE: &str = r#"[{
        "name": "Summarize",
        "description": "Close with a short summary.",
        "subcategory": "Output Formatting",
        "stage": 5,
        "params": [{"key": "sentences", "kind": "integer", "required": false, "min": 1, "max": 5, "default": 2}],
        "template": "End the response with a summary of at most {sentences} sentences."
    }]"#;

    #[test]
    fn loads_extensions() {
        let mut registry = Registry::builtin();
        let added = registry.load_extensions(SUMMARIZE).unwrap();
        assert_eq!(added.len(), 1);
        assert_eq!(registry.len(), 21);
        assert_eq!(registry.catalog()[20].canonical_name, "Summarize");
        let v = registry
            .validate(&parse_invocation("+++Summarize").unwrap())
            .unwrap();
        assert_eq!(v.param("sentences"), Some(&ParamValue::Integer(2)));
    }

    #[test]
    fn extension_errors() {
        let mut registry = Registry::builtin();
        let collide = SUMMARIZE.replace("Summarize", "reasoning");
        assert!(matches!(
            registry.load_extensions(&collide),
            Err(RegistryError::NameCollision { .. })
        ));
        let alias = SUMMARIZE.replace("Summarize", "Dump");
        assert!(matches!(
            registry.load_extensions(&alias),
            Err(RegistryError::NameCollision { .. })
        ));
        let meta = SUMMARIZE.replace("\"stage\": 5,", "\"stage\": 5, \"kind\": \"meta\",");
        assert!(matches!(
            registry.load_extensions(&meta),
            Err(RegistryError::IllegalKind { .. })
        ));
        let unknown_field = SUMMARIZE.replace("\"stage\": 5,", "\"stage\": 5, \"colour\": 1,");
        assert!(matches!(
            registry.load_extensions(&unknown_field),
            Err(RegistryError::MalformedExtension(_))
        ));
        let bad_placeholder = SUMMARIZE.replace("{sentences}", "{count}");
        assert!(matches!(
            registry.load_extensions(&bad_placeholder),
            Err(RegistryError::MalformedExtension(_))
        ));
        let bad_stage = SUMMARIZE.replace("\"stage\": 5", "\"stage\": 6");
        assert!(matches!(
            registry.load_extensions(&bad_stage),
            Err(RegistryError::MalformedExtension(_))
        ));
        assert_eq!(registry.len(), 20);
    }

    #[test]
    fn suggestions() {
        let registry = Registry::builtin();
        assert_eq!(registry.suggest("Reson"), Some("Reasoning"));
        assert_eq!(registry.suggest("Tonne"), Some("Tone"));
        assert_eq!(registry.suggest("Debait"), Some("Debate"));
        assert_eq!(registry.suggest("Xyzzy"), None);
        assert_eq!(registry.suggest("Re"), None);
    }
}
