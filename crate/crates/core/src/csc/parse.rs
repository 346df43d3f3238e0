//! Parsing model-emitted edit lists.

use serde_json::{Map, Value};

use super::{CorrectionEdit, CscError, EditList, Result};

/// How forgiving [`parse_edit_output_with`] is about surrounding noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Whitespace and code fences are stripped; if the remainder is not JSON
    /// the first balanced `[...]` is parsed instead.
    #[default]
    Lenient,
    /// Only whitespace and code fences are stripped.
    Strict,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedEdits {
    pub edits: EditList,
    /// Edits dropped because an earlier edit claimed the same position.
    pub duplicate_positions: usize,
    /// Edits dropped because `incorrect == correction`.
    pub noop_edits: usize,
}

pub fn parse_edit_output(raw: &str) -> Result<ParsedEdits> {
    parse_edit_output_with(raw, ParseMode::Lenient)
}

pub fn parse_edit_output_with(raw: &str, mode: ParseMode) -> Result<ParsedEdits> {
    let body = strip_fences(raw.trim());
    let value = match serde_json::from_str::<Value>(body) {
        Ok(v) => v,
        Err(e) if mode == ParseMode::Strict => return Err(parse_error(raw, &e.to_string())),
        Err(e) => {
            let slice = first_balanced_array(body).ok_or_else(|| parse_error(raw, &e.to_string()))?;
            serde_json::from_str(slice).map_err(|e| parse_error(raw, &e.to_string()))?
        }
    };
    let Value::Array(items) = value else {
        return Err(CscError::Schema("expected a JSON array of edits".into()));
    };

    let mut parsed = ParsedEdits::default();
    let mut edits = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let Value::Object(obj) = item else {
            return Err(CscError::Schema(format!("item {i} is not an object")));
        };
        let position = obj
            .get("position")
            .and_then(Value::as_u64)
            .filter(|&p| p >= 1)
            .ok_or_else(|| CscError::Schema(format!("item {i}: position must be an integer >= 1")))?;
        let incorrect = single_char_field(obj, "incorrect", i)?;
        let correction = single_char_field(obj, "correction", i)?;
        if incorrect == correction {
            parsed.noop_edits += 1;
            continue;
        }
        edits.push(CorrectionEdit::new(position as usize, incorrect, correction));
    }

    // Stable sort keeps the first occurrence of a position at the front of its run.
    edits.sort_by_key(|e| e.position);
    let before = edits.len();
    edits.dedup_by_key(|e| e.position);
    parsed.duplicate_positions = before - edits.len();
    parsed.edits = EditList::new(edits)?;
    Ok(parsed)
}

fn single_char_field(obj: &Map<String, Value>, key: &str, index: usize) -> Result<char> {
    let s = obj
        .get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| CscError::Schema(format!("item {index}: {key} must be a string")))?;
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Ok(c),
        _ => Err(CscError::Schema(format!("item {index}: {key} must be a single character, found {s:?}"))),
    }
}

fn parse_error(raw: &str, message: &str) -> CscError {
    let excerpt: String = raw.chars().take(80).collect();
    CscError::Parse { message: message.to_string(), excerpt }
}

fn strip_fences(s: &str) -> &str {
    let Some(rest) = s.strip_prefix("```") else { return s };
    // Drop the info string (`json`, ...) on the opening fence line.
    let rest = match rest.find('\n') {
        Some(i) => &rest[i + 1..],
        None => rest.trim_start_matches(|c: char| c.is_ascii_alphanumeric()),
    };
    let rest = rest.trim_end();
    rest.strip_suffix("```").unwrap_or(rest).trim()
}

/// The first `[` ... matching `]` span, skipping brackets inside JSON strings.
fn first_balanced_array(s: &str) -> Option<&str> {
    let start = s.find('[')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in s[start..].char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&s[start..start + i + 1]);
                }
            }
            _ => {}
        }
    }
    None
}
