//! Test support: a deliberately naive reference scanner and a seeded random
//! message generator.
//!
//! The reference scanner shares no code with `decorator-engine`. It is a
//! line-by-line regex matcher so that property tests can compare the two.

pub mod stub;

use std::sync::LazyLock;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use regex::Regex;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefValue {
    Integer(i64),
    Ident(String),
    Str(String),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefInvocation {
    pub name: String,
    pub params: Vec<(String, RefValue)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefScan {
    pub invocations: Vec<RefInvocation>,
    pub body: String,
}

static HEAD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[ \t]*\+\+\+").unwrap());

static LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^[ \t]*\+\+\+([A-Za-z][A-Za-z0-9]*)(?:\((.*)\))?[ \t]*$").unwrap()
});

static ARG: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(concat!(
        r#"^[ \t]*(?:"#,
        r#"([A-Za-z][A-Za-z0-9_]*)[ \t]*=[ \t]*(?:(-?[0-9]+)|([A-Za-z][A-Za-z0-9_-]*)|"((?:[^"\\]|\\["\\])*)")"#,
        r#"|(?:\+\+\+)?([A-Za-z][A-Za-z0-9]*)"#,
        r#")[ \t]*(,|$)"#,
    ))
    .unwrap()
});

fn parse_args(name: &str, inner: &str) -> Option<Vec<(String, RefValue)>> {
    let mut out = Vec::new();
    if inner.trim_matches([' ', '\t']).is_empty() {
        return Some(out);
    }
    let clear = name.eq_ignore_ascii_case("clear");
    let mut rest = inner;
    loop {
        let caps = ARG.captures(rest)?;
        if let Some(key) = caps.get(1) {
            let value = if let Some(n) = caps.get(2) {
                RefValue::Integer(n.as_str().parse().ok()?)
            } else if let Some(id) = caps.get(3) {
                RefValue::Ident(id.as_str().to_string())
            } else {
                let raw = caps.get(4)?.as_str();
                RefValue::Str(
                    raw.replace("\\\\", "\u{0}")
                        .replace("\\\"", "\"")
                        .replace('\u{0}', "\\"),
                )
            };
            if out.iter().any(|(k, _)| k == key.as_str()) {
                return None;
            }
            out.push((key.as_str().to_string(), value));
        } else {
            if !clear {
                return None;
            }
            out.push(("target".to_string(), RefValue::Name(caps[5].to_string())));
        }
        let sep = caps.get(6).unwrap();
        rest = &rest[sep.end()..];
        if sep.as_str().is_empty() {
            return Some(out);
        }
        if rest.trim_matches([' ', '\t']).is_empty() {
            return None;
        }
    }
}

/// Parses one head line, `None` when it is malformed.
pub fn reference_line(line: &str) -> Option<RefInvocation> {
    let line = line.strip_suffix('\r').unwrap_or(line);
    let caps = LINE.captures(line)?;
    let name = caps[1].to_string();
    let params = match caps.get(2) {
        Some(inner) => parse_args(&name, inner.as_str())?,
        None => Vec::new(),
    };
    Some(RefInvocation { name, params })
}

/// Strict-mode reference scan. `None` when any head line is malformed.
pub fn reference_scan(text: &str) -> Option<RefScan> {
    let lines: Vec<&str> = text.split('\n').collect();
    let head = lines.iter().take_while(|l| HEAD.is_match(l)).count();
    let mut invocations = Vec::new();
    for line in &lines[..head] {
        invocations.push(reference_line(line)?);
    }
    let mut rest = &lines[head..];
    if head > 0 {
        if let Some(first) = rest.first() {
            if first.trim().is_empty() {
                rest = &rest[1..];
            }
        }
    }
    Some(RefScan {
        invocations,
        body: rest.join("\n"),
    })
}

const NAMES: &[&str] = &[
    "Reasoning",
    "StepByStep",
    "Debate",
    "Interactive",
    "Socratic",
    "Planning",
    "Brainstorm",
    "Rewrite",
    "Refine",
    "Critique",
    "Candor",
    "Tone",
    "OutputFormat",
    "Import",
    "Clear",
    "ChatScope",
    "MessageScope",
    "ActiveDecs",
    "AvailableDecs",
    "Export",
    "Dump",
    "Xyz",
];

const BODY_LINES: &[&str] = &[
    "Explain the trade-offs.",
    "",
    "   ",
    "+++Reasoning appears mid-body",
    "Café, naïve, 日本語 ✓",
    "plain\r",
    "  +++Tone(style=formal)",
    "===",
];

/// Deterministic generator of mixed valid and malformed messages.
pub struct MessageGen {
    rng: StdRng,
}

impl MessageGen {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: StdRng::seed_from_u64(seed),
        }
    }

    fn pick<'a>(&mut self, items: &[&'a str]) -> &'a str {
        items[self.rng.random_range(0..items.len())]
    }

    fn ws(&mut self) -> &'static str {
        ["", "", " ", "\t", "  "][self.rng.random_range(0..5)]
    }

    fn value(&mut self) -> String {
        match self.rng.random_range(0..6) {
            0 => self.rng.random_range(-20i64..20).to_string(),
            1 => self
                .pick(&["json", "formal", "high", "low", "markdown"])
                .to_string(),
            2 => "\"some \\\"quoted\\\" text\"".to_string(),
            3 => "\"back\\\\slash, (parens)\"".to_string(),
            4 => "machine-learning_v2".to_string(),
            _ => self.pick(&["+7", "\"open", "1x", "=", ""]).to_string(),
        }
    }

    /// A head line that may or may not be well formed.
    pub fn head_line(&mut self) -> String {
        let mut line = String::new();
        line.push_str(self.ws());
        line.push_str("+++");
        if self.rng.random_bool(0.05) {
            line.push(' ');
        }
        if !self.rng.random_bool(0.03) {
            line.push_str(self.pick(NAMES));
        }
        if self.rng.random_bool(0.6) {
            line.push('(');
            let n = self.rng.random_range(0..4);
            for i in 0..n {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(self.ws());
                if self.rng.random_bool(0.15) {
                    line.push_str(self.pick(&["+++Tone", "Reasoning", "Debate"]));
                } else {
                    line.push_str(self.pick(&[
                        "format",
                        "style",
                        "level",
                        "iterations",
                        "topic",
                        "k",
                        "k",
                    ]));
                    line.push_str(self.ws());
                    line.push('=');
                    line.push_str(self.ws());
                    let v = self.value();
                    line.push_str(&v);
                }
                line.push_str(self.ws());
            }
            if !self.rng.random_bool(0.05) {
                line.push(')');
            }
        }
        if self.rng.random_bool(0.04) {
            line.push_str(" trailing");
        }
        line.push_str(self.ws());
        if self.rng.random_bool(0.1) {
            line.push('\r');
        }
        line
    }

    pub fn message(&mut self) -> String {
        let mut lines = Vec::new();
        for _ in 0..self.rng.random_range(0..5) {
            lines.push(self.head_line());
        }
        for _ in 0..self.rng.random_range(0..5) {
            let l = self.pick(BODY_LINES);
            lines.push(l.to_string());
        }
        lines.join("\n")
    }
}
