//! The production parser against the naive regex line scanner.

use decorator_engine::syntax::{scan_message, ParseMode, Value};
use decorator_testkit::{reference_scan, MessageGen, RefInvocation, RefScan, RefValue};

fn to_ref(text: &str) -> Option<RefScan> {
    let scan = scan_message(text, ParseMode::Strict).ok()?;
    Some(RefScan {
        invocations: scan
            .invocations
            .into_iter()
            .map(|inv| RefInvocation {
                name: inv.name,
                params: inv
                    .params
                    .into_iter()
                    .map(|p| {
                        let v = match p.value {
                            Value::Integer(n) => RefValue::Integer(n),
                            Value::Ident(s) => RefValue::Ident(s),
                            Value::Str(s) => RefValue::Str(s),
                            Value::DecoratorName(s) => RefValue::Name(s),
                        };
                        (p.key, v)
                    })
                    .collect(),
            })
            .collect(),
        body: scan.body,
    })
}

#[test]
fn fuzzed_messages_match_reference() {
    let mut generator = MessageGen::new(0x5eed);
    let (mut accepted, mut rejected) = (0, 0);
    for i in 0..10_000 {
        let msg = generator.message();
        let ours = to_ref(&msg);
        assert_eq!(ours, reference_scan(&msg), "message #{i}: {msg:?}");
        if ours.is_some() {
            accepted += 1;
        } else {
            rejected += 1;
        }
    }
    // Both branches must be exercised for the comparison to mean anything.
    assert!(
        accepted > 1_000 && rejected > 1_000,
        "{accepted} / {rejected}"
    );
}

#[test]
fn hand_picked_edge_cases() {
    for msg in [
        "",
        "\n",
        "+++Reasoning",
        "+++Reasoning\n",
        "+++Reasoning\n\n\nbody",
        "+++Reasoning\r\n \r\nbody",
        "\t+++Tone(style = formal , )",
        "+++Clear(+++Tone,Debate,+++Tone)",
        "+++Import(topic=\"a, b) c\")",
        "+++Refine(iterations=-0)",
        "+++Refine(iterations=99999999999999999999)",
        "+++Tone (style=formal)",
        "body first\n+++Reasoning",
    ] {
        assert_eq!(to_ref(msg), reference_scan(msg), "{msg:?}");
    }
}
