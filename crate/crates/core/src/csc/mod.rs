//! Position-based spelling correction: equal-length pairs to
//! `{position, incorrect, correction}` edit lists and back.
//!
//! Positions are 1-based indices over Unicode scalar values.

mod io;
mod parse;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::json::quote;

pub use io::{
    read_edit_records, read_pairs, read_predictions, write_edit_records, write_pairs, EditRecord, Prediction,
};
pub use parse::{parse_edit_output, parse_edit_output_with, ParseMode, ParsedEdits};

#[derive(Debug, Error)]
pub enum CscError {
    #[error("length mismatch: source has {source_len} characters, target has {target_len}")]
    LengthMismatch { source_len: usize, target_len: usize },
    #[error("edit position {position} is outside a {len}-character source")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("verification failed at position {position}: expected {expected:?}, found {found:?}")]
    Verification { position: usize, expected: char, found: char },
    #[error("invalid edit list: {0}")]
    InvalidEdits(String),
    #[error("unparseable edit output ({message}): {excerpt:?}")]
    Parse { message: String, excerpt: String },
    #[error("edit output schema error: {0}")]
    Schema(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: line {line}: {message}", path.display())]
    MalformedLine { path: PathBuf, line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, CscError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelPair {
    pub id: String,
    pub source: String,
    pub target: String,
}

impl ParallelPair {
    pub fn new(id: impl Into<String>, source: impl Into<String>, target: impl Into<String>) -> Self {
        Self { id: id.into(), source: source.into(), target: target.into() }
    }

    pub fn is_equal_length(&self) -> bool {
        self.source.chars().count() == self.target.chars().count()
    }
}

/// A single-character substitution at a 1-based position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CorrectionEdit {
    pub position: usize,
    pub incorrect: char,
    pub correction: char,
}

impl CorrectionEdit {
    pub fn new(position: usize, incorrect: char, correction: char) -> Self {
        Self { position, incorrect, correction }
    }

    /// `{"position": 4, "incorrect": "事", "correction": "士"}`
    pub fn to_json(&self) -> String {
        let mut buf = [0u8; 4];
        let incorrect = quote(self.incorrect.encode_utf8(&mut buf));
        let correction = quote(self.correction.encode_utf8(&mut buf));
        format!(r#"{{"position": {}, "incorrect": {incorrect}, "correction": {correction}}}"#, self.position)
    }
}

/// Edits with strictly ascending positions, each a real substitution.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EditList(Vec<CorrectionEdit>);

impl EditList {
    pub fn new(edits: Vec<CorrectionEdit>) -> Result<Self> {
        for e in &edits {
            if e.position == 0 {
                return Err(CscError::InvalidEdits("positions start at 1".into()));
            }
            if e.incorrect == e.correction {
                return Err(CscError::InvalidEdits(format!(
                    "edit at position {} does not change {:?}",
                    e.position, e.incorrect
                )));
            }
        }
        if let Some(w) = edits.windows(2).find(|w| w[0].position >= w[1].position) {
            return Err(CscError::InvalidEdits(format!(
                "positions must be strictly ascending ({} then {})",
                w[0].position, w[1].position
            )));
        }
        Ok(Self(edits))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn edits(&self) -> &[CorrectionEdit] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CorrectionEdit> {
        self.0.iter()
    }

    /// Single-line rendering used for files and token counting:
    /// `[{"position": 4, "incorrect": "事", "correction": "士"}]`.
    pub fn to_json(&self) -> String {
        let body: Vec<String> = self.0.iter().map(CorrectionEdit::to_json).collect();
        format!("[{}]", body.join(", "))
    }
}

impl fmt::Display for EditList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_json())
    }
}

impl<'a> IntoIterator for &'a EditList {
    type Item = &'a CorrectionEdit;
    type IntoIter = std::slice::Iter<'a, CorrectionEdit>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl Serialize for EditList {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for EditList {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let edits = Vec::<CorrectionEdit>::deserialize(deserializer)?;
        EditList::new(edits).map_err(serde::de::Error::custom)
    }
}

/// Every position where `source` and `target` differ.
pub fn diff_texts(source: &str, target: &str) -> Result<EditList> {
    let s: Vec<char> = source.chars().collect();
    let t: Vec<char> = target.chars().collect();
    if s.len() != t.len() {
        return Err(CscError::LengthMismatch { source_len: s.len(), target_len: t.len() });
    }
    Ok(EditList(
        s.iter()
            .zip(&t)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, (&a, &b))| CorrectionEdit::new(i + 1, a, b))
            .collect(),
    ))
}

pub fn diff_pair(pair: &ParallelPair) -> Result<EditList> {
    diff_texts(&pair.source, &pair.target)
}

/// Replaces the character at each edit position. With `strict`, the source
/// character must equal the edit's `incorrect` field.
pub fn apply_edits(source: &str, edits: &EditList, strict: bool) -> Result<String> {
    let mut chars: Vec<char> = source.chars().collect();
    for e in edits {
        let len = chars.len();
        let slot = e
            .position
            .checked_sub(1)
            .and_then(|i| chars.get_mut(i))
            .ok_or(CscError::PositionOutOfRange { position: e.position, len })?;
        if strict && *slot != e.incorrect {
            return Err(CscError::Verification { position: e.position, expected: e.incorrect, found: *slot });
        }
        *slot = e.correction;
    }
    Ok(chars.into_iter().collect())
}

/// Maps full-width forms U+FF01..=U+FF5E to ASCII and U+3000 to a space.
pub fn normalize_char(c: char) -> char {
    match c {
        '\u{FF01}'..='\u{FF5E}' => char::from_u32(c as u32 - 0xFEE0).expect("offset lands in ASCII"),
        '\u{3000}' => ' ',
        _ => c,
    }
}

pub fn normalize_width(s: &str) -> String {
    s.chars().map(normalize_char).collect()
}

/// Splits pairs into equal-length (`kept`) and unequal-length (`dropped`),
/// preserving order.
pub fn filter_equal_length<I>(pairs: I) -> (Vec<ParallelPair>, Vec<ParallelPair>)
where
    I: IntoIterator<Item = ParallelPair>,
{
    pairs.into_iter().partition(ParallelPair::is_equal_length)
}
