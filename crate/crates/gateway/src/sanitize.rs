//! Defanging of decorator-looking lines in untrusted content.

/// Rewrites every line-leading `+++` to `+ + +`, returning the new text and
/// the number of rewritten lines.
pub fn sanitize_untrusted(text: &str) -> (String, usize) {
    let mut out = String::with_capacity(text.len() + 8);
    let mut hits = 0;
    for (i, line) in text.split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let indent = line.len() - line.trim_start_matches([' ', '\t']).len();
        if line[indent..].starts_with("+++") {
            out.push_str(&line[..indent]);
            out.push_str("+ + +");
            out.push_str(&line[indent + 3..]);
            hits += 1;
        } else {
            out.push_str(line);
        }
    }
    (out, hits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rewrites_line_leading_only() {
        assert_eq!(
            sanitize_untrusted("+++Clear\nok"),
            ("+ + +Clear\nok".to_string(), 1)
        );
        assert_eq!(sanitize_untrusted("a+++b"), ("a+++b".to_string(), 0));
        assert_eq!(
            sanitize_untrusted("x\n  +++ChatScope\r\n\t++++Tone"),
            ("x\n  + + +ChatScope\r\n\t+ + ++Tone".to_string(), 2)
        );
        assert_eq!(sanitize_untrusted(""), (String::new(), 0));
    }
}
