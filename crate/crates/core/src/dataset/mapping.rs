use std::fmt;
use std::str::FromStr;

use serde_json::Value;

use super::DatasetError;
use crate::json::{quote, OrderedObject};

/// Direction in which `(position, character)` pairs are listed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Order {
    /// `n, n-1, ..., 1`: the first key is the length of the input.
    #[default]
    Reverse,
    /// `1, 2, ..., n`.
    Forward,
}

impl FromStr for Order {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reverse" => Ok(Self::Reverse),
            "forward" => Ok(Self::Forward),
            other => Err(format!("unknown order {other:?} (expected reverse or forward)")),
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Reverse => "reverse",
            Self::Forward => "forward",
        })
    }
}

/// Splits `s` into its Unicode scalar values.
pub fn char_decompose(s: &str) -> Result<Vec<char>, DatasetError> {
    if s.is_empty() {
        return Err(DatasetError::EmptyInput);
    }
    Ok(s.chars().collect())
}

/// Ordered `(1-based position, character)` pairs covering a string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionMapping {
    pairs: Vec<(usize, char)>,
}

impl PositionMapping {
    pub fn build(s: &str, order: Order) -> Result<Self, DatasetError> {
        let chars = char_decompose(s)?;
        let mut pairs: Vec<(usize, char)> = chars.into_iter().enumerate().map(|(i, c)| (i + 1, c)).collect();
        if order == Order::Reverse {
            pairs.reverse();
        }
        Ok(Self { pairs })
    }

    /// Validates raw pairs: positions must be exactly `1..=n` listed strictly
    /// ascending or strictly descending.
    pub fn from_pairs(pairs: Vec<(usize, char)>) -> Result<Self, DatasetError> {
        let n = pairs.len();
        if n == 0 {
            return Err(DatasetError::EmptyInput);
        }
        let ascending = pairs.iter().enumerate().all(|(i, &(p, _))| p == i + 1);
        let descending = pairs.iter().enumerate().all(|(i, &(p, _))| p == n - i);
        if !ascending && !descending {
            return Err(DatasetError::InvalidMapping(format!(
                "positions must run 1..={n} in ascending or descending order"
            )));
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(usize, char)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `Reverse` when the first listed position is the largest. A single pair
    /// reports `Reverse`.
    pub fn order(&self) -> Order {
        if self.pairs.first().map(|&(p, _)| p) == Some(self.pairs.len()) {
            Order::Reverse
        } else {
            Order::Forward
        }
    }

    pub fn reversed(&self) -> Self {
        let mut pairs = self.pairs.clone();
        pairs.reverse();
        Self { pairs }
    }

    /// Reads the characters back in ascending position order.
    pub fn reconstruct(&self) -> String {
        let mut sorted = self.pairs.clone();
        sorted.sort_by_key(|&(p, _)| p);
        sorted.into_iter().map(|(_, c)| c).collect()
    }

    /// Renders `{"4": "l", "3": "r", ...}` keeping the stored pair order.
    pub fn to_json(&self) -> String {
        let mut out = String::with_capacity(self.pairs.len() * 10 + 2);
        out.push('{');
        let mut buf = [0u8; 4];
        for (i, &(pos, ch)) in self.pairs.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push('"');
            out.push_str(&pos.to_string());
            out.push_str("\": ");
            out.push_str(&quote(ch.encode_utf8(&mut buf)));
        }
        out.push('}');
        out
    }

    /// Parses the output of [`to_json`](Self::to_json), honouring textual key order.
    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        let OrderedObject(entries) = serde_json::from_str::<OrderedObject<Value>>(text)
            .map_err(|e| DatasetError::InvalidMapping(e.to_string()))?;
        let mut pairs = Vec::with_capacity(entries.len());
        for (key, value) in entries {
            let pos: usize = key
                .parse()
                .ok()
                .filter(|p: &usize| p.to_string() == key)
                .ok_or_else(|| DatasetError::InvalidMapping(format!("key {key:?} is not a position")))?;
            let ch = value
                .as_str()
                .and_then(single_char)
                .ok_or_else(|| DatasetError::InvalidMapping(format!("value at {key:?} is not one character")))?;
            pairs.push((pos, ch));
        }
        Self::from_pairs(pairs)
    }
}

fn single_char(s: &str) -> Option<char> {
    let mut it = s.chars();
    match (it.next(), it.next()) {
        (Some(c), None) => Some(c),
        _ => None,
    }
}

pub fn build_mapping(s: &str, order: Order) -> Result<PositionMapping, DatasetError> {
    PositionMapping::build(s, order)
}

pub fn serialize_mapping(m: &PositionMapping) -> String {
    m.to_json()
}
