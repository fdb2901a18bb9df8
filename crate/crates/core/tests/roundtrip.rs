use decorator_engine::registry::{ParamKind, ParamValue};
use decorator_engine::syntax::{
    parse_invocation, render_invocation, DecoratorInvocation, Parameter, Value,
};
use decorator_engine::Registry;
use proptest::prelude::*;

/// Every schema-conforming invocation shape for the catalog: each enum
/// member, integers at min/default/max, and each optional parameter both
/// present and absent.
fn conforming(registry: &Registry) -> Vec<DecoratorInvocation> {
    let mut out = Vec::new();
    for def in registry.catalog() {
        let mut variants: Vec<Vec<Parameter>> = vec![Vec::new()];
        for spec in &def.params {
            let values: Vec<Value> = match &spec.kind {
                ParamKind::Integer { min, max } => {
                    let mut v = vec![*min, *max];
                    if let Some(ParamValue::Integer(d)) = spec.default {
                        v.push(d);
                    }
                    v.into_iter().map(Value::Integer).collect()
                }
                ParamKind::Enumeration { values } => {
                    values.iter().map(|s| Value::Ident(s.clone())).collect()
                }
                ParamKind::String => vec![
                    Value::Str("machine learning".into()),
                    Value::Str(r#"say "hi", \ (now)"#.into()),
                ],
                ParamKind::Boolean => {
                    vec![Value::Ident("true".into()), Value::Ident("false".into())]
                }
            };
            let mut next = Vec::new();
            for base in &variants {
                if !spec.required {
                    next.push(base.clone());
                }
                for v in values.iter().cloned() {
                    let mut p = base.clone();
                    p.push(Parameter::new(spec.key.clone(), v));
                    next.push(p);
                }
            }
            variants = next;
        }
        for params in variants {
            out.push(DecoratorInvocation::new(def.canonical_name.clone(), params));
        }
    }
    out
}

#[test]
fn catalog_invocations_round_trip() {
    let registry = Registry::builtin();
    let all = conforming(&registry);
    assert_eq!(all.len(), 38);
    for inv in &all {
        let text = render_invocation(inv);
        let parsed = parse_invocation(&text).unwrap_or_else(|e| panic!("{text}: {e}"));
        assert!(parsed.structurally_eq(inv), "{text}");
        let validated = registry
            .validate(&parsed)
            .unwrap_or_else(|e| panic!("{text}: {e}"));
        let again = registry
            .validate(&parse_invocation(&validated.render()).unwrap())
            .unwrap();
        assert_eq!(again, validated, "{text}");
    }
}

#[test]
fn clear_targets_round_trip() {
    let registry = Registry::builtin();
    let inv = parse_invocation("+++Clear(+++Tone, Reasoning)").unwrap();
    let reparsed = parse_invocation(&render_invocation(&inv)).unwrap();
    assert!(reparsed.structurally_eq(&inv));
    assert_eq!(
        registry.validate(&reparsed).unwrap().targets,
        ["Tone", "Reasoning"]
    );
}

fn name() -> impl Strategy<Value = String> {
    "[A-Za-z][A-Za-z0-9]{0,11}"
}

fn value() -> impl Strategy<Value = Value> {
    prop_oneof![
        any::<i64>().prop_map(Value::Integer),
        "[A-Za-z][A-Za-z0-9_-]{0,10}".prop_map(Value::Ident),
        any::<String>()
            .prop_filter("single line", |s| !s.contains(['\n', '\r']))
            .prop_map(Value::Str),
    ]
}

fn invocation() -> impl Strategy<Value = DecoratorInvocation> {
    (
        name(),
        prop::collection::btree_map("[A-Za-z][A-Za-z0-9_]{0,8}", value(), 0..5),
    )
        .prop_map(|(name, params)| {
            DecoratorInvocation::new(
                name,
                params
                    .into_iter()
                    .map(|(k, v)| Parameter::new(k, v))
                    .collect(),
            )
        })
}

proptest! {
    #[test]
    fn render_parse_is_identity(inv in invocation()) {
        let text = render_invocation(&inv);
        let parsed = parse_invocation(&text).unwrap();
        prop_assert!(parsed.structurally_eq(&inv), "{}", text);
        prop_assert_eq!(render_invocation(&parsed), text);
    }

    #[test]
    fn parse_never_panics(line in "[ \t]*\\+\\+\\+[ -~]{0,40}") {
        let _ = parse_invocation(&line);
    }
}
