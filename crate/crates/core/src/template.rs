//! Directive template instantiation.
//!
//! Templates are plain text with `{key}` placeholders. An integer parameter
//! can also be expanded into a label sequence with `{key|seq:Label}`, which
//! renders `Label 1, Label 2, ..., Label N`. `{{` and `}}` produce literal
//! braces.

use thiserror::Error;

use crate::registry::ParamValue;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("unterminated placeholder at byte {0}")]
    Unterminated(usize),
    #[error("stray `}}` at byte {0}")]
    StrayBrace(usize),
    #[error("unknown filter `{0}`")]
    UnknownFilter(String),
    #[error("no value for placeholder `{0}`")]
    MissingValue(String),
    #[error("`{0}` must be a non-negative integer to use `seq`")]
    NotAnInteger(String),
}

enum Piece<'a> {
    Text(&'a str),
    Placeholder { key: &'a str, seq: Option<&'a str> },
}

fn pieces(template: &str) -> Result<Vec<Piece<'_>>, TemplateError> {
    let mut out = Vec::new();
    let mut rest = template;
    let mut offset = 0;
    while let Some(i) = rest.find(['{', '}']) {
        if i > 0 {
            out.push(Piece::Text(&rest[..i]));
        }
        let doubled = rest[i + 1..].starts_with(&rest[i..i + 1]);
        if doubled {
            out.push(Piece::Text(&rest[i..i + 1]));
            rest = &rest[i + 2..];
            offset += i + 2;
            continue;
        }
        if rest.as_bytes()[i] == b'}' {
            return Err(TemplateError::StrayBrace(offset + i));
        }
        let close = rest[i..]
            .find('}')
            .ok_or(TemplateError::Unterminated(offset + i))?;
        let inner = &rest[i + 1..i + close];
        let (key, seq) = match inner.split_once('|') {
            None => (inner.trim(), None),
            Some((key, filter)) => match filter.trim().strip_prefix("seq:") {
                Some(label) => (key.trim(), Some(label.trim())),
                None => return Err(TemplateError::UnknownFilter(filter.trim().to_string())),
            },
        };
        out.push(Piece::Placeholder { key, seq });
        rest = &rest[i + close + 1..];
        offset += i + close + 1;
    }
    if !rest.is_empty() {
        out.push(Piece::Text(rest));
    }
    Ok(out)
}

/// Parameter keys referenced by a template, in first-use order.
pub fn placeholders(template: &str) -> Result<Vec<String>, TemplateError> {
    let mut keys: Vec<String> = Vec::new();
    for piece in pieces(template)? {
        if let Piece::Placeholder { key, .. } = piece {
            if !keys.iter().any(|k| k == key) {
                keys.push(key.to_string());
            }
        }
    }
    Ok(keys)
}

pub fn instantiate<'v>(
    template: &str,
    lookup: impl Fn(&str) -> Option<&'v ParamValue>,
) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(template.len());
    for piece in pieces(template)? {
        match piece {
            Piece::Text(text) => out.push_str(text),
            Piece::Placeholder { key, seq } => {
                let value =
                    lookup(key).ok_or_else(|| TemplateError::MissingValue(key.to_string()))?;
                match seq {
                    None => out.push_str(&value.to_string()),
                    Some(label) => {
                        let n = value
                            .as_integer()
                            .filter(|n| *n >= 0)
                            .ok_or_else(|| TemplateError::NotAnInteger(key.to_string()))?;
                        let labels: Vec<String> = (1..=n).map(|i| format!("{label} {i}")).collect();
                        out.push_str(&labels.join(", "));
                    }
                }
            }
        }
    }
    Ok(out)
}
