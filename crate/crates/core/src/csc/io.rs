//! Pair corpora, edit files and prediction files.
//!
//! Pair corpora are either TSV (`id\tsource\ttarget`) or JSONL
//! (`{"id", "source", "target"}`); the format is detected from the first
//! non-blank line. Predictions are JSONL `{"id", "prediction"}`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use super::{CscError, EditList, ParallelPair, Result};
use crate::json::quote;

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct EditRecord {
    pub id: String,
    pub edits: EditList,
}

impl EditRecord {
    pub fn to_json_line(&self) -> String {
        format!("{{\"id\": {}, \"edits\": {}}}", quote(&self.id), self.edits.to_json())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub id: String,
    pub prediction: String,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CscError + '_ {
    move |source| CscError::Io { path: path.to_path_buf(), source }
}

fn malformed(path: &Path, line: usize, message: impl Into<String>) -> CscError {
    CscError::MalformedLine { path: path.to_path_buf(), line, message: message.into() }
}

/// Non-blank lines with their 1-based numbers; a trailing `\r` is removed.
fn lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let mut line = line.map_err(io_err(path))?;
        if line.ends_with('\r') {
            line.pop();
        }
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

/// JSON ids may be strings or integers.
fn id_field(obj: &serde_json::Map<String, Value>, path: &Path, line: usize) -> Result<String> {
    match obj.get("id") {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Number(n)) => Ok(n.to_string()),
        _ => Err(malformed(path, line, "missing or non-scalar \"id\"")),
    }
}

fn string_field(obj: &serde_json::Map<String, Value>, key: &str, path: &Path, line: usize) -> Result<String> {
    obj.get(key)
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| malformed(path, line, format!("missing string field {key:?}")))
}

fn json_object(path: &Path, line: usize, text: &str) -> Result<serde_json::Map<String, Value>> {
    match serde_json::from_str::<Value>(text) {
        Ok(Value::Object(obj)) => Ok(obj),
        Ok(_) => Err(malformed(path, line, "expected a JSON object")),
        Err(e) => Err(malformed(path, line, e.to_string())),
    }
}

pub fn read_pairs(path: &Path) -> Result<Vec<ParallelPair>> {
    let lines = lines(path)?;
    let jsonl = lines.first().is_some_and(|(_, l)| l.trim_start().starts_with('{'));
    lines
        .into_iter()
        .map(|(n, line)| {
            if jsonl {
                let obj = json_object(path, n, &line)?;
                Ok(ParallelPair {
                    id: id_field(&obj, path, n)?,
                    source: string_field(&obj, "source", path, n)?,
                    target: string_field(&obj, "target", path, n)?,
                })
            } else {
                let mut cols = line.split('\t');
                match (cols.next(), cols.next(), cols.next(), cols.next()) {
                    (Some(id), Some(source), Some(target), None) => Ok(ParallelPair::new(id, source, target)),
                    _ => Err(malformed(path, n, "expected three tab-separated columns: id, source, target")),
                }
            }
        })
        .collect()
}

/// Writes pairs as JSONL.
pub fn write_pairs(pairs: &[ParallelPair], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for p in pairs {
        serde_json::to_writer(&mut out, p).map_err(|e| io_err(path)(e.into()))?;
        out.write_all(b"\n").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

pub fn write_edit_records(records: &[EditRecord], path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for r in records {
        writeln!(out, "{}", r.to_json_line()).map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

pub fn read_edit_records(path: &Path) -> Result<Vec<EditRecord>> {
    lines(path)?
        .into_iter()
        .map(|(n, line)| serde_json::from_str(&line).map_err(|e| malformed(path, n, e.to_string())))
        .collect()
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    lines(path)?
        .into_iter()
        .map(|(n, line)| {
            let obj = json_object(path, n, &line)?;
            Ok(Prediction { id: id_field(&obj, path, n)?, prediction: string_field(&obj, "prediction", path, n)? })
        })
        .collect()
}
