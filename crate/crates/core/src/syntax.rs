//! Lexing and parsing of the decorator head-block.
//!
//! A message may open with a contiguous run of lines that each begin (after
//! optional spaces or tabs) with `+++`. Every such line carries exactly one
//! invocation of the form `+++Name` or `+++Name(key=value, ...)`. Everything
//! after the head-block is body text and is never interpreted, so a `+++`
//! token further down the message stays literal.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Failure behavior for malformed head lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseMode {
    /// A malformed head line fails the whole message.
    #[default]
    Strict,
    /// A malformed head line becomes a warning; it and every following line
    /// are treated as body text.
    Lenient,
}

/// A parameter value as written in the source.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Integer(i64),
    Ident(String),
    Str(String),
    /// A `+++Name` or bare `Name` positional argument (only accepted by `Clear`).
    DecoratorName(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Integer(n) => write!(f, "{n}"),
            Value::Ident(s) => f.write_str(s),
            Value::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Value::DecoratorName(name) => write!(f, "+++{name}"),
        }
    }
}

/// Key used for positional `Clear` targets.
pub const TARGET_KEY: &str = "target";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Parameter {
    pub key: String,
    pub value: Value,
}

impl Parameter {
    pub fn new(key: impl Into<String>, value: Value) -> Self {
        Self {
            key: key.into(),
            value,
        }
    }

    fn is_positional_target(&self) -> bool {
        matches!(self.value, Value::DecoratorName(_))
    }
}

/// Location of a token: zero-based line index and a byte range into the
/// scanned input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Span {
    pub line: usize,
    pub start: usize,
    pub end: usize,
}

impl Span {
    fn shifted(self, line: usize, offset: usize) -> Self {
        Span {
            line,
            start: self.start + offset,
            end: self.end + offset,
        }
    }
}

/// One parsed `+++` token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoratorInvocation {
    pub name: String,
    pub params: Vec<Parameter>,
    pub span: Span,
    pub raw: String,
}

impl DecoratorInvocation {
    /// Builds an invocation that did not come from source text.
    pub fn new(name: impl Into<String>, params: Vec<Parameter>) -> Self {
        let mut inv = Self {
            name: name.into(),
            params,
            span: Span::default(),
            raw: String::new(),
        };
        inv.raw = render_invocation(&inv);
        inv.span.end = inv.raw.len();
        inv
    }

    /// Equality on name and parameters, ignoring location and raw text.
    pub fn structurally_eq(&self, other: &Self) -> bool {
        self.name == other.name && self.params == other.params
    }

    pub fn param(&self, key: &str) -> Option<&Value> {
        self.params.iter().find(|p| p.key == key).map(|p| &p.value)
    }

    pub fn render(&self) -> String {
        render_invocation(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagnosticCode {
    MalformedInvocation,
    EmptyName,
    DuplicateParameterKey,
    MalformedParameter,
    TrailingGarbage,
}

impl DiagnosticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::MalformedInvocation => "malformed-invocation",
            DiagnosticCode::EmptyName => "empty-name",
            DiagnosticCode::DuplicateParameterKey => "duplicate-parameter-key",
            DiagnosticCode::MalformedParameter => "malformed-parameter",
            DiagnosticCode::TrailingGarbage => "trailing-garbage",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    pub severity: Severity,
    pub code: DiagnosticCode,
    pub span: Span,
    pub message: String,
}

impl ParseDiagnostic {
    fn error(code: DiagnosticCode, start: usize, end: usize, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            code,
            span: Span {
                line: 0,
                start,
                end,
            },
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}: {} [{}]",
            self.span.line + 1,
            self.message,
            self.code.as_str()
        )
    }
}

impl std::error::Error for ParseDiagnostic {}

/// Result of scanning one message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScannedMessage {
    pub invocations: Vec<DecoratorInvocation>,
    pub body: String,
    pub diagnostics: Vec<ParseDiagnostic>,
}

/// True when the line opens with `+++` after optional spaces and tabs.
pub fn is_head_line(line: &str) -> bool {
    line.trim_start_matches([' ', '\t']).starts_with("+++")
}

fn is_blank(line: &str) -> bool {
    line.trim_matches([' ', '\t', '\r']).is_empty()
}

/// Splits a message into its head-block invocations and body.
pub fn scan_message(text: &str, mode: ParseMode) -> Result<ScannedMessage, ParseDiagnostic> {
    let mut invocations = Vec::new();
    let mut diagnostics = Vec::new();

    // (offset, line) pairs; the final piece has no trailing newline.
    let mut lines = Vec::new();
    let mut offset = 0;
    for piece in text.split('\n') {
        lines.push((offset, piece));
        offset += piece.len() + 1;
    }

    let mut body_start = None;
    let mut head_len = 0;
    for (index, &(line_offset, line)) in lines.iter().enumerate() {
        if !is_head_line(line) {
            break;
        }
        match parse_invocation(line) {
            Ok(mut inv) => {
                inv.span = inv.span.shifted(index, line_offset);
                invocations.push(inv);
                head_len = index + 1;
            }
            Err(mut diag) => {
                diag.span = diag.span.shifted(index, line_offset);
                match mode {
                    ParseMode::Strict => return Err(diag),
                    ParseMode::Lenient => {
                        diag.severity = Severity::Warning;
                        diag.message = format!("{}; line treated as body text", diag.message);
                        diagnostics.push(diag);
                        body_start = Some(line_offset);
                        break;
                    }
                }
            }
        }
    }

    let body_start = body_start.unwrap_or_else(|| {
        if head_len == 0 {
            return 0;
        }
        match lines.get(head_len) {
            None => text.len(),
            Some(&(sep_offset, sep)) if is_blank(sep) => {
                (sep_offset + sep.len() + 1).min(text.len())
            }
            Some(&(line_offset, _)) => line_offset,
        }
    });

    Ok(ScannedMessage {
        invocations,
        body: text[body_start..].to_string(),
        diagnostics,
    })
}

/// Parses a single head line. Spans in the result are relative to `line`.
pub fn parse_invocation(line: &str) -> Result<DecoratorInvocation, ParseDiagnostic> {
    Parser::new(line).invocation()
}

/// Canonical text form: `+++Name` or `+++Name(k1=v1, k2=v2)`.
pub fn render_invocation(inv: &DecoratorInvocation) -> String {
    let mut out = format!("+++{}", inv.name);
    if !inv.params.is_empty() {
        out.push('(');
        for (i, param) in inv.params.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            if !param.is_positional_target() {
                out.push_str(&param.key);
                out.push('=');
            }
            out.push_str(&param.value.to_string());
        }
        out.push(')');
    }
    out
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn skip_inline_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t')) {
            self.pos += 1;
        }
    }

    fn take_while(&mut self, pred: impl Fn(u8) -> bool) -> &'a str {
        let start = self.pos;
        while self.peek().is_some_and(&pred) {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn err(
        &self,
        code: DiagnosticCode,
        start: usize,
        message: impl Into<String>,
    ) -> ParseDiagnostic {
        let end = (start + 1).min(self.src.len()).max(start);
        ParseDiagnostic::error(code, start, end, message)
    }

    fn rest_is_blank(&self) -> bool {
        self.src[self.pos..].trim().is_empty()
    }

    fn invocation(mut self) -> Result<DecoratorInvocation, ParseDiagnostic> {
        self.skip_inline_ws();
        let start = self.pos;
        if !self.src[self.pos..].starts_with("+++") {
            return Err(self.err(
                DiagnosticCode::MalformedInvocation,
                start,
                "decorator line must begin with `+++`",
            ));
        }
        self.pos += 3;

        if !self.peek().is_some_and(|b| b.is_ascii_alphabetic()) {
            return Err(self.err(
                DiagnosticCode::EmptyName,
                self.pos.min(self.src.len()),
                "`+++` is not followed by a decorator name",
            ));
        }
        let name = self.take_while(|b| b.is_ascii_alphanumeric()).to_string();
        let positional_ok = name.eq_ignore_ascii_case("clear");

        let mut params = Vec::new();
        if self.peek() == Some(b'(') {
            let open = self.pos;
            self.pos += 1;
            params = self.param_list(open, positional_ok)?;
        }

        let end = self.pos;
        if !self.rest_is_blank() {
            return Err(self.err(
                DiagnosticCode::TrailingGarbage,
                self.pos,
                format!("unexpected text after `+++{name}`"),
            ));
        }

        Ok(DecoratorInvocation {
            name,
            params,
            span: Span {
                line: 0,
                start,
                end,
            },
            raw: self.src[start..end].to_string(),
        })
    }

    fn param_list(
        &mut self,
        open: usize,
        positional_ok: bool,
    ) -> Result<Vec<Parameter>, ParseDiagnostic> {
        let mut params: Vec<Parameter> = Vec::new();
        self.skip_inline_ws();
        if self.peek() == Some(b')') {
            self.pos += 1;
            return Ok(params);
        }
        loop {
            self.skip_inline_ws();
            let arg_start = self.pos;
            let param = self.argument(open, positional_ok)?;
            if !param.is_positional_target() && params.iter().any(|p| p.key == param.key) {
                return Err(ParseDiagnostic::error(
                    DiagnosticCode::DuplicateParameterKey,
                    arg_start,
                    self.pos,
                    format!("parameter `{}` is given more than once", param.key),
                ));
            }
            params.push(param);
            self.skip_inline_ws();
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b')') => {
                    self.pos += 1;
                    return Ok(params);
                }
                _ if self.rest_is_blank() => {
                    return Err(self.err(
                        DiagnosticCode::MalformedInvocation,
                        open,
                        "unbalanced parenthesis",
                    ))
                }
                _ => {
                    return Err(self.err(
                        DiagnosticCode::MalformedParameter,
                        self.pos,
                        "expected `,` or `)` after parameter",
                    ))
                }
            }
        }
    }

    fn argument(&mut self, open: usize, positional_ok: bool) -> Result<Parameter, ParseDiagnostic> {
        let start = self.pos;
        if self.src[self.pos..].starts_with("+++") {
            if !positional_ok {
                return Err(self.err(
                    DiagnosticCode::MalformedParameter,
                    start,
                    "positional decorator arguments are only accepted by Clear",
                ));
            }
            self.pos += 3;
            let target = self.take_while(|b| b.is_ascii_alphanumeric());
            if !target.starts_with(|c: char| c.is_ascii_alphabetic()) {
                return Err(self.err(
                    DiagnosticCode::MalformedParameter,
                    start,
                    "`+++` argument is missing a decorator name",
                ));
            }
            return Ok(Parameter::new(
                TARGET_KEY,
                Value::DecoratorName(target.to_string()),
            ));
        }

        match self.peek() {
            Some(b) if b.is_ascii_alphabetic() => {}
            _ if self.rest_is_blank() => {
                return Err(self.err(
                    DiagnosticCode::MalformedInvocation,
                    open,
                    "unbalanced parenthesis",
                ))
            }
            _ => {
                return Err(self.err(
                    DiagnosticCode::MalformedParameter,
                    start,
                    "expected a parameter name",
                ))
            }
        }
        let key = self.take_while(|b| b.is_ascii_alphanumeric() || b == b'_');
        self.skip_inline_ws();
        if self.peek() != Some(b'=') {
            if positional_ok && key.bytes().all(|b| b.is_ascii_alphanumeric()) {
                return Ok(Parameter::new(
                    TARGET_KEY,
                    Value::DecoratorName(key.to_string()),
                ));
            }
            return Err(self.err(
                DiagnosticCode::MalformedParameter,
                start,
                format!("parameter `{key}` is missing `=`"),
            ));
        }
        self.pos += 1;
        self.skip_inline_ws();
        let value = self.value()?;
        Ok(Parameter::new(key, value))
    }

    fn value(&mut self) -> Result<Value, ParseDiagnostic> {
        let start = self.pos;
        match self.peek() {
            Some(b'"') => {
                self.pos += 1;
                let mut out = String::new();
                let mut chunk = self.pos;
                loop {
                    match self.peek() {
                        None => {
                            return Err(self.err(
                                DiagnosticCode::MalformedParameter,
                                start,
                                "unterminated string",
                            ))
                        }
                        Some(b'"') => {
                            out.push_str(&self.src[chunk..self.pos]);
                            self.pos += 1;
                            return Ok(Value::Str(out));
                        }
                        Some(b'\\') => {
                            out.push_str(&self.src[chunk..self.pos]);
                            match self.bytes.get(self.pos + 1) {
                                Some(&c @ (b'"' | b'\\')) => out.push(c as char),
                                _ => {
                                    return Err(self.err(
                                        DiagnosticCode::MalformedParameter,
                                        self.pos,
                                        "only `\\\"` and `\\\\` escapes are allowed in strings",
                                    ))
                                }
                            }
                            self.pos += 2;
                            chunk = self.pos;
                        }
                        Some(_) => self.pos += 1,
                    }
                }
            }
            Some(b) if b == b'-' || b.is_ascii_digit() => {
                if b == b'-' {
                    self.pos += 1;
                }
                let digits = self.take_while(|b| b.is_ascii_digit());
                if digits.is_empty()
                    || self
                        .peek()
                        .is_some_and(|b| b.is_ascii_alphanumeric() || b == b'_')
                {
                    return Err(self.err(
                        DiagnosticCode::MalformedParameter,
                        start,
                        "malformed integer",
                    ));
                }
                self.src[start..self.pos]
                    .parse()
                    .map(Value::Integer)
                    .map_err(|_| {
                        self.err(
                            DiagnosticCode::MalformedParameter,
                            start,
                            "integer out of range",
                        )
                    })
            }
            Some(b) if b.is_ascii_alphabetic() => {
                let ident =
                    self.take_while(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-');
                Ok(Value::Ident(ident.to_string()))
            }
            _ => Err(self.err(
                DiagnosticCode::MalformedParameter,
                start,
                "expected an integer, identifier, or quoted string",
            )),
        }
    }
}
