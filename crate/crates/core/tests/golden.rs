//! Compiled output pinned to files under `tests/golden/`.
//! Run with `UPDATE_GOLDEN=1` to rewrite them after an intended change.

use std::path::PathBuf;

use decorator_engine::{Engine, FixedClock, SessionState};

fn render_case(messages: &[&str]) -> String {
    let engine = Engine::default().with_clock(FixedClock::epoch());
    let mut state = SessionState::new("golden");
    let mut out = String::new();
    for (turn, msg) in messages.iter().enumerate() {
        let (next, prompt) = engine.compile_turn(&state, msg).unwrap();
        out.push_str(&format!("==== turn {turn}: message\n{msg}\n"));
        out.push_str(&format!(
            "==== directive block\n{}\n",
            prompt.directive_block.injection_text()
        ));
        out.push_str(&format!("==== body\n{}\n", prompt.body));
        for m in &prompt.meta_outputs {
            out.push_str(&format!("==== meta {}\n{}\n", m.name, m.text));
        }
        out.push_str(&format!(
            "==== audit\n{}\n",
            serde_json::to_string_pretty(&prompt.audit).unwrap()
        ));
        state = next;
    }
    out
}

fn check(name: &str, messages: &[&str]) {
    let actual = render_case(messages);
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.txt"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e} (run with UPDATE_GOLDEN=1)", path.display()));
    assert_eq!(actual, expected, "golden mismatch for {name}");
}

#[test]
fn reasoning_with_json_output() {
    check(
        "reasoning_json",
        &["+++Reasoning\n+++OutputFormat(format=json)\n\nShould the city adopt congestion pricing?"],
    );
}

#[test]
fn reasoning_and_debate() {
    check(
        "reasoning_debate",
        &["+++Reasoning\n+++Debate\n\nExplain the implications of using facial recognition in public spaces."],
    );
}

#[test]
fn rewrite_then_reasoning() {
    check(
        "rewrite_reasoning",
        &["+++Rewrite\n+++Reasoning\n\nhow fix slow database"],
    );
}

#[test]
fn persistent_composition() {
    check(
        "composition",
        &[
            "+++ChatScope\n+++Reasoning\n+++Tone(style=formal)\n+++OutputFormat(format=markdown)\n\nAssess the ethical implications of AI-driven recruitment systems.",
            "What safeguards would you recommend?",
            "+++MessageScope\n+++Tone(style=casual)\n\nSummarize that for a newsletter.",
            "+++Clear(Tone)\n+++ActiveDecs",
            "+++Clear\n+++ActiveDecs",
        ],
    );
}

#[test]
fn evaluation_stack() {
    check(
        "evaluation",
        &["+++Import(topic=\"Systems Thinking\")\n+++Critique\n+++Refine(iterations=3)\n+++Candor(level=high)\n+++StepByStep\n\nReview our incident response runbook."],
    );
}
