use decorator_engine::registry::DecoratorKind;
use decorator_engine::{Engine, FixedClock, SessionState};
use proptest::prelude::*;

const DIRECTIVES: &[&str] = &[
    "+++Reasoning",
    "+++StepByStep",
    "+++Debate",
    "+++Socratic",
    "+++Planning",
    "+++Rewrite",
    "+++Refine(iterations=3)",
    "+++Critique",
    "+++Candor(level=high)",
    "+++Tone(style=formal)",
    "+++Tone(style=casual)",
    "+++OutputFormat(format=json)",
    "+++OutputFormat(format=markdown)",
    "+++Import(topic=\"graph theory\")",
];

const OTHERS: &[&str] = &[
    "+++ChatScope",
    "+++MessageScope",
    "+++Clear",
    "+++Clear(Tone)",
    "+++Clear(+++Reasoning, Debate)",
    "+++ActiveDecs",
    "+++AvailableDecs",
    "+++Export(format=json)",
];

fn message() -> impl Strategy<Value = String> {
    (
        prop::collection::vec(
            prop_oneof![
                3 => prop::sample::select(DIRECTIVES),
                1 => prop::sample::select(OTHERS),
            ],
            0..5,
        ),
        prop::sample::select(&["", "What is the answer?", "a\n+++Clear\nb"][..]),
    )
        .prop_map(|(head, body)| {
            let mut text = head.join("\n");
            if !head.is_empty() && !body.is_empty() {
                text.push_str("\n\n");
            }
            text.push_str(body);
            text
        })
}

fn engine() -> Engine {
    Engine::default().with_clock(FixedClock::epoch())
}

fn head_has(message: &str, line: &str) -> bool {
    message
        .split('\n')
        .take_while(|l| l.starts_with("+++"))
        .any(|l| l == line || (line == "+++Clear" && l.starts_with("+++Clear")))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn session_invariants_hold(messages in prop::collection::vec(message(), 1..8)) {
        let engine = engine();
        let mut state = SessionState::new("prop");
        for msg in &messages {
            let result = engine.compile_turn(&state, msg);
            let Ok((next, prompt)) = result else {
                // Only a contradictory marker pair may fail with this vocabulary.
                prop_assert!(head_has(msg, "+++ChatScope") && head_has(msg, "+++MessageScope"));
                continue;
            };

            let names: Vec<&str> = next.chat_scope.iter().map(|d| d.name()).collect();
            let mut unique = names.clone();
            unique.sort_unstable();
            unique.dedup();
            prop_assert_eq!(unique.len(), names.len(), "duplicate chat entries {:?}", names);
            prop_assert!(next.chat_scope.iter().all(|d| d.kind() == DecoratorKind::Directive));

            if !head_has(msg, "+++Clear") && !head_has(msg, "+++ChatScope") {
                prop_assert_eq!(&next.chat_scope, &state.chat_scope);
            }
            if head_has(msg, "+++Clear") && !msg.contains("+++Clear(") && !head_has(msg, "+++ChatScope") {
                prop_assert!(next.chat_scope.is_empty());
            }

            let stages: Vec<u8> = prompt.directive_block.sections.iter().map(|s| s.stage.index()).collect();
            prop_assert!(stages.windows(2).all(|w| w[0] <= w[1]), "{:?}", stages);
            let block_names = prompt.directive_block.names();
            for entry in &next.chat_scope {
                prop_assert!(block_names.contains(&entry.name()));
            }

            prop_assert_eq!(next.turn_counter as usize, next.transcript.len());
            prop_assert_eq!(next.turn_counter, state.turn_counter + 1);

            let again = engine.compile_turn(&state, msg).unwrap();
            prop_assert_eq!(&again.0, &next);
            prop_assert_eq!(&again.1, &prompt);

            let restored = SessionState::from_json(&next.to_json(), engine.registry()).unwrap();
            prop_assert_eq!(&restored, &next);

            state = next;
        }
    }

    #[test]
    fn message_scope_never_touches_chat_scope(
        setup in message(),
        directives in prop::collection::vec(prop::sample::select(DIRECTIVES), 1..4),
    ) {
        let engine = engine();
        let Ok((state, _)) = engine.compile_turn(&SessionState::new("m"), &setup) else {
            return Ok(());
        };
        let msg = format!("+++MessageScope\n{}\n\nbody", directives.join("\n"));
        let (next, prompt) = engine.compile_turn(&state, &msg).unwrap();
        prop_assert_eq!(&next.chat_scope, &state.chat_scope);
        let (after, _) = engine.compile_turn(&next, "plain").unwrap();
        prop_assert_eq!(&after.chat_scope, &state.chat_scope);
        for d in &directives {
            let name = d.trim_start_matches("+++").split('(').next().unwrap();
            prop_assert!(prompt.directive_block.names().contains(&name));
        }
    }
}
