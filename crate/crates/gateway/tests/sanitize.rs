use decorator_engine::syntax::{scan_message, ParseMode};
use decorator_gateway::sanitize_untrusted;
use decorator_testkit::MessageGen;

#[test]
fn sanitized_content_never_parses_as_decorators() {
    let mut generator = MessageGen::new(808);
    let mut total_hits = 0;
    for _ in 0..5_000 {
        let text = generator.message();
        let (clean, hits) = sanitize_untrusted(&text);
        total_hits += hits;
        assert_eq!(clean.len(), text.len() + 2 * hits);
        for mode in [ParseMode::Strict, ParseMode::Lenient] {
            let scan = scan_message(&clean, mode).unwrap();
            assert!(scan.invocations.is_empty(), "{clean:?}");
            assert_eq!(scan.body, clean);
        }
        let again = sanitize_untrusted(&clean);
        assert_eq!(again, (clean, 0));
    }
    assert!(total_hits > 5_000);
}
