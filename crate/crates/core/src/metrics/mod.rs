//! Scoring for position-based and traditional spelling correction, plus
//! output token counting.

mod position;
mod ratio;
mod traditional;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::csc::{diff_pair, CscError, ParallelPair};
use crate::tokenizer::{TokenizerError, Vocabulary};

pub use position::{
    char_prf_position, evaluate_position, ppa, score_position_edits, sentence_accuracy, PositionEvalReport,
    PositionOptions, SentenceMode,
};
pub use ratio::{Prf, Ratio};
pub use traditional::{length_consistency, traditional_metrics, TraditionalEvalReport};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("{gold} gold items but {predictions} predictions")]
    LengthMismatch { gold: usize, predictions: usize },
    #[error("gold pair {id:?} has unequal source and target lengths")]
    UnequalGold { id: String },
    #[error(transparent)]
    Csc(#[from] CscError),
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TokenCountRow {
    pub id: String,
    pub traditional: usize,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TokenCountReport {
    pub traditional_total: usize,
    pub position_total: usize,
    pub rows: Vec<TokenCountRow>,
}

/// Per pair: tokens in the corrected sentence versus tokens in the serialized
/// edit list. Counts cover content tokens only (no chat template or special
/// tokens).
pub fn token_count_comparison(pairs: &[ParallelPair], vocab: &Vocabulary) -> Result<TokenCountReport, MetricsError> {
    let rows = pairs
        .par_iter()
        .map(|pair| {
            let edits = diff_pair(pair)?;
            Ok(TokenCountRow {
                id: pair.id.clone(),
                traditional: vocab.count_tokens(&pair.target)?,
                position: vocab.count_tokens(&edits.to_json())?,
            })
        })
        .collect::<Result<Vec<_>, MetricsError>>()?;
    Ok(TokenCountReport {
        traditional_total: rows.iter().map(|r| r.traditional).sum(),
        position_total: rows.iter().map(|r| r.position).sum(),
        rows,
    })
}

impl TokenCountReport {
    pub fn render_table(&self) -> String {
        format!(
            "{:<12} {:>12}\n{:<12} {:>12}\n{:<12} {:>12}\n",
            "method", "tokens", "traditional", self.traditional_total, "position", self.position_total
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn char_vocab(text: &str) -> Vocabulary {
        let mut chars: Vec<char> = text.chars().collect();
        chars.sort_unstable();
        chars.dedup();
        Vocabulary::new(
            chars.into_iter().enumerate().map(|(i, c)| (c.to_string(), i as u32)).collect(),
            false,
            Some(Vec::new()),
        )
        .unwrap()
    }

    #[test]
    fn unchanged_pair_counts_brackets() {
        let v = char_vocab("[]ab");
        let r = token_count_comparison(&[ParallelPair::new("1", "abab", "abab")], &v).unwrap();
        assert_eq!(r.rows[0].position, 2);
        assert_eq!(r.rows[0].traditional, 4);
        assert_eq!(r.traditional_total, 4);
        assert_eq!(r.position_total, 2);
    }

    #[test]
    fn totals_are_row_sums() {
        let v = char_vocab("[]{}\":, positncorecab0123456789");
        let pairs = vec![ParallelPair::new("1", "aaaa", "abaa"), ParallelPair::new("2", "cc", "cc")];
        let r = token_count_comparison(&pairs, &v).unwrap();
        assert_eq!(r.traditional_total, r.rows.iter().map(|x| x.traditional).sum::<usize>());
        assert_eq!(r.position_total, r.rows.iter().map(|x| x.position).sum::<usize>());
        let single = r#"[{"position": 2, "incorrect": "a", "correction": "b"}]"#;
        assert_eq!(r.rows[0].position, single.chars().count());
    }

    #[test]
    fn propagates_errors() {
        let v = char_vocab("ab");
        assert!(matches!(
            token_count_comparison(&[ParallelPair::new("1", "a", "ab")], &v),
            Err(MetricsError::Csc(CscError::LengthMismatch { .. }))
        ));
        let no_merges = Vocabulary::new(vec![("a".into(), 0)], false, None).unwrap();
        assert!(matches!(
            token_count_comparison(&[ParallelPair::new("1", "a", "a")], &no_merges),
            Err(MetricsError::Tokenizer(TokenizerError::MergesUnavailable))
        ));
    }
}
