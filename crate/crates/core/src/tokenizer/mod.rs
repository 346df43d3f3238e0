//! Vocabulary loading and greedy BPE encoding.

mod bpe;
pub mod byte_level;

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::Value;
use thiserror::Error;

use crate::json::OrderedObject;

pub use bpe::Encoding;
pub use byte_level::{bytes_to_surface, decode_surface, UnmappedChar};

pub type TokenId = u32;

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("failed to read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed vocabulary JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("key {key:?}: id must be a non-negative 32-bit integer, found {found}")]
    InvalidId { key: String, found: String },
    #[error("duplicate surface {surface:?} at {location}")]
    DuplicateSurface { surface: String, location: String },
    #[error("duplicate id {id} at {location}")]
    DuplicateId { id: TokenId, location: String },
    #[error("empty token surface at {location}")]
    EmptySurface { location: String },
    #[error("token {surface:?} at {location}: {source}")]
    Surface {
        surface: String,
        location: String,
        #[source]
        source: UnmappedChar,
    },
    #[error("merges line {line}: expected \"left right\", found {content:?}")]
    MalformedMerge { line: usize, content: String },
    #[error("merges line {line}: {surface:?} is not a vocabulary surface")]
    UnknownMergeSurface { line: usize, surface: String },
    #[error("plain-lines vocabularies cannot carry merges; use json-map")]
    MergesWithPlainLines,
    #[error("unsupported operation: the vocabulary has no merge table")]
    MergesUnavailable,
    #[error("unknown-token id {0} collides with a vocabulary id")]
    UnknownIdCollision(TokenId),
}

pub type Result<T> = std::result::Result<T, TokenizerError>;

/// On-disk vocabulary layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VocabFormat {
    /// A JSON object mapping surfaces to ids.
    JsonMap,
    /// One surface per line; the id is the zero-based line index.
    PlainLines,
}

impl FromStr for VocabFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "json-map" => Ok(Self::JsonMap),
            "plain-lines" => Ok(Self::PlainLines),
            other => Err(format!("unknown vocabulary format {other:?} (expected json-map or plain-lines)")),
        }
    }
}

impl fmt::Display for VocabFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::JsonMap => "json-map",
            Self::PlainLines => "plain-lines",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenEntry {
    pub id: TokenId,
    pub surface: String,
    pub bytes: Vec<u8>,
}

impl TokenEntry {
    /// The token's text when its bytes form complete, valid UTF-8.
    pub fn utf8_text(&self) -> Option<&str> {
        std::str::from_utf8(&self.bytes).ok()
    }
}

/// Returns the decoded text of `entry` when it is fully representable in UTF-8.
pub fn utf8_representable(entry: &TokenEntry) -> Option<String> {
    entry.utf8_text().map(str::to_owned)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeRule {
    pub left: String,
    pub right: String,
    /// Lower priorities are applied first.
    pub priority: u32,
}

/// A loaded tokenizer vocabulary. Immutable once built.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    /// Sorted by ascending id.
    entries: Vec<TokenEntry>,
    by_surface: HashMap<String, TokenId>,
    byte_level: bool,
    merges: Option<Vec<MergeRule>>,
    // (left id, right id) -> (priority, merged id)
    merge_index: HashMap<(TokenId, TokenId), (u32, TokenId)>,
    unknown_id: TokenId,
}

impl Vocabulary {
    /// Builds a vocabulary from `(surface, id)` pairs and an optional merge
    /// table given in priority order.
    pub fn new(
        tokens: Vec<(String, TokenId)>,
        byte_level: bool,
        merges: Option<Vec<(String, String)>>,
    ) -> Result<Self> {
        let tokens = tokens
            .into_iter()
            .map(|(surface, id)| {
                let location = format!("key {surface:?}");
                (surface, id, location)
            })
            .collect();
        let merges = merges.map(|m| m.into_iter().enumerate().map(|(i, (l, r))| (i + 1, l, r)).collect());
        Self::build(tokens, byte_level, merges)
    }

    fn build(
        tokens: Vec<(String, TokenId, String)>,
        byte_level: bool,
        merges: Option<Vec<(usize, String, String)>>,
    ) -> Result<Self> {
        let mut by_surface = HashMap::with_capacity(tokens.len());
        let mut id_seen = HashMap::with_capacity(tokens.len());
        let mut entries = Vec::with_capacity(tokens.len());
        for (surface, id, location) in tokens {
            if surface.is_empty() {
                return Err(TokenizerError::EmptySurface { location });
            }
            if by_surface.contains_key(&surface) {
                return Err(TokenizerError::DuplicateSurface { surface, location });
            }
            if id_seen.insert(id, ()).is_some() {
                return Err(TokenizerError::DuplicateId { id, location });
            }
            let bytes = match decode_surface(&surface, byte_level) {
                Ok(b) => b,
                Err(source) => {
                    return Err(TokenizerError::Surface { surface, location, source });
                }
            };
            by_surface.insert(surface.clone(), id);
            entries.push(TokenEntry { id, surface, bytes });
        }
        entries.sort_by_key(|e| e.id);

        let mut merge_index = HashMap::new();
        let merges = match merges {
            None => None,
            Some(raw) => {
                let mut rules = Vec::with_capacity(raw.len());
                for (priority, (line, left, right)) in raw.into_iter().enumerate() {
                    let lookup = |s: &str| {
                        by_surface
                            .get(s)
                            .copied()
                            .ok_or_else(|| TokenizerError::UnknownMergeSurface { line, surface: s.to_string() })
                    };
                    let l = lookup(&left)?;
                    let r = lookup(&right)?;
                    let merged = lookup(&format!("{left}{right}"))?;
                    let priority = priority as u32;
                    // A repeated rule keeps its first (lowest) priority.
                    merge_index.entry((l, r)).or_insert((priority, merged));
                    rules.push(MergeRule { left, right, priority });
                }
                Some(rules)
            }
        };

        let unknown_id = entries.last().map_or(0, |e| e.id.saturating_add(1));
        Ok(Self { entries, by_surface, byte_level, merges, merge_index, unknown_id })
    }

    /// Replaces the id emitted for atomic units missing from the vocabulary.
    pub fn with_unknown_id(mut self, id: TokenId) -> Result<Self> {
        if self.entries.binary_search_by_key(&id, |e| e.id).is_ok() {
            return Err(TokenizerError::UnknownIdCollision(id));
        }
        self.unknown_id = id;
        Ok(self)
    }

    pub fn entries(&self) -> &[TokenEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_byte_level(&self) -> bool {
        self.byte_level
    }

    pub fn merges(&self) -> Option<&[MergeRule]> {
        self.merges.as_deref()
    }

    pub fn has_merges(&self) -> bool {
        self.merges.is_some()
    }

    /// The placeholder id for atomic units absent from the vocabulary.
    pub fn unknown_id(&self) -> TokenId {
        self.unknown_id
    }

    pub fn id_of(&self, surface: &str) -> Option<TokenId> {
        self.by_surface.get(surface).copied()
    }

    pub fn entry(&self, id: TokenId) -> Option<&TokenEntry> {
        self.entries.binary_search_by_key(&id, |e| e.id).ok().map(|i| &self.entries[i])
    }

    pub fn contains_id(&self, id: TokenId) -> bool {
        self.entry(id).is_some()
    }

    /// Encodes `text` into token ids with the greedy lowest-priority-first
    /// merge procedure.
    pub fn encode(&self, text: &str) -> Result<Vec<TokenId>> {
        self.encode_detailed(text).map(|e| e.ids)
    }

    /// Like [`encode`](Self::encode) but also reports merge and unknown-unit counts.
    pub fn encode_detailed(&self, text: &str) -> Result<Encoding> {
        if !self.has_merges() {
            return Err(TokenizerError::MergesUnavailable);
        }
        Ok(bpe::encode(self, text))
    }

    pub fn count_tokens(&self, text: &str) -> Result<usize> {
        self.encode(text).map(|ids| ids.len())
    }

    pub(crate) fn merge_for(&self, left: TokenId, right: TokenId) -> Option<(u32, TokenId)> {
        self.merge_index.get(&(left, right)).copied()
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| TokenizerError::Io { path: path.to_path_buf(), source })
}

/// Loads a vocabulary file and, optionally, a merges file.
pub fn load_vocabulary(
    path: &Path,
    format: VocabFormat,
    byte_level: bool,
    merges_path: Option<&Path>,
) -> Result<Vocabulary> {
    let text = read_text(path)?;
    let tokens = match format {
        VocabFormat::JsonMap => parse_json_map(&text)?,
        VocabFormat::PlainLines => {
            if merges_path.is_some() {
                return Err(TokenizerError::MergesWithPlainLines);
            }
            parse_plain_lines(&text)
        }
    };
    let merges = merges_path.map(|p| read_text(p).and_then(|t| parse_merges(&t))).transpose()?;
    Vocabulary::build(tokens, byte_level, merges)
}

fn parse_json_map(text: &str) -> Result<Vec<(String, TokenId, String)>> {
    let OrderedObject(entries) = serde_json::from_str::<OrderedObject<Value>>(text)?;
    entries
        .into_iter()
        .map(|(key, value)| {
            let id = value
                .as_u64()
                .and_then(|v| TokenId::try_from(v).ok())
                .ok_or_else(|| TokenizerError::InvalidId { key: key.clone(), found: value.to_string() })?;
            let location = format!("key {key:?}");
            Ok((key, id, location))
        })
        .collect()
}

fn parse_plain_lines(text: &str) -> Vec<(String, TokenId, String)> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() {
        return Vec::new();
    }
    body.split('\n')
        .enumerate()
        .map(|(i, line)| {
            let line = line.strip_suffix('\r').unwrap_or(line);
            (line.to_string(), i as TokenId, format!("line {}", i + 1))
        })
        .collect()
}

fn parse_merges(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut rules = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(' ');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => {
                rules.push((line_no, l.to_string(), r.to_string()));
            }
            _ => {
                return Err(TokenizerError::MalformedMerge { line: line_no, content: line.to_string() });
            }
        }
    }
    Ok(rules)
}
