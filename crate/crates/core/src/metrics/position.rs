//! Metrics for the position-based task: PPA, SA, SAIP, NESSA and
//! character-level CP/CR/CF1 over `(position, incorrect, correction)` triples.

use std::collections::BTreeSet;

use serde::Serialize;

use super::{MetricsError, Prf, Ratio};
use crate::csc::{diff_pair, parse_edit_output_with, EditList, ParallelPair, ParseMode};

/// Which sentence-level accuracy to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SentenceMode {
    /// Predicted triples equal gold triples (SA).
    Exact,
    /// Multisets of `(incorrect, correction)` agree (SAIP).
    IgnorePosition,
    /// Sets of `(incorrect, correction)` agree.
    IgnorePositionSet,
    /// Exact match over sentences whose gold list is non-empty (NESSA).
    NonEmptyOnly,
}

fn check_parallel(a: usize, b: usize) -> Result<(), MetricsError> {
    if a != b {
        return Err(MetricsError::LengthMismatch { gold: a, predictions: b });
    }
    Ok(())
}

/// Fraction of predicted `(position, incorrect)` pairs whose character matches
/// the source. Positions past the end of the source count as mismatches.
pub fn ppa<S: AsRef<str>>(gold_sources: &[S], predictions: &[EditList]) -> Result<Ratio, MetricsError> {
    check_parallel(gold_sources.len(), predictions.len())?;
    let (mut hits, mut total) = (0u64, 0u64);
    for (source, pred) in gold_sources.iter().zip(predictions) {
        let chars: Vec<char> = source.as_ref().chars().collect();
        for e in pred {
            total += 1;
            if chars.get(e.position - 1) == Some(&e.incorrect) {
                hits += 1;
            }
        }
    }
    Ok(Ratio::new(hits, total))
}

fn char_pairs(list: &EditList) -> Vec<(char, char)> {
    let mut v: Vec<_> = list.iter().map(|e| (e.incorrect, e.correction)).collect();
    v.sort_unstable();
    v
}

fn sentence_correct(gold: &EditList, pred: &EditList, mode: SentenceMode) -> bool {
    match mode {
        // Both lists are strictly position-ordered, so equality is set equality.
        SentenceMode::Exact | SentenceMode::NonEmptyOnly => gold == pred,
        SentenceMode::IgnorePosition => char_pairs(gold) == char_pairs(pred),
        SentenceMode::IgnorePositionSet => {
            char_pairs(gold).into_iter().collect::<BTreeSet<_>>() == char_pairs(pred).into_iter().collect()
        }
    }
}

pub fn sentence_accuracy(gold: &[EditList], pred: &[EditList], mode: SentenceMode) -> Result<Ratio, MetricsError> {
    check_parallel(gold.len(), pred.len())?;
    let (mut correct, mut total) = (0u64, 0u64);
    for (g, p) in gold.iter().zip(pred) {
        if mode == SentenceMode::NonEmptyOnly && g.is_empty() {
            continue;
        }
        total += 1;
        if sentence_correct(g, p, mode) {
            correct += 1;
        }
    }
    Ok(Ratio::new(correct, total))
}

/// CP/CR/CF1 where a true positive matches position, incorrect and correction.
pub fn char_prf_position(gold: &[EditList], pred: &[EditList]) -> Result<Prf, MetricsError> {
    check_parallel(gold.len(), pred.len())?;
    let (mut tp, mut n_pred, mut n_gold) = (0u64, 0u64, 0u64);
    for (g, p) in gold.iter().zip(pred) {
        n_gold += g.len() as u64;
        n_pred += p.len() as u64;
        // Both sides are sorted by position: merge-walk.
        let (mut i, mut j) = (0, 0);
        let (ge, pe) = (g.edits(), p.edits());
        while i < ge.len() && j < pe.len() {
            match ge[i].position.cmp(&pe[j].position) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    if ge[i] == pe[j] {
                        tp += 1;
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    Ok(Prf::from_counts(tp, n_pred, n_gold))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PositionEvalReport {
    pub ppa: Ratio,
    pub sa: Ratio,
    pub saip: Ratio,
    pub nessa: Ratio,
    pub cp: Ratio,
    pub cr: Ratio,
    pub cf1: Ratio,
    pub sentences: usize,
    pub parse_failure_count: usize,
    pub missing_predictions: usize,
    pub duplicate_positions: usize,
    pub noop_edits: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PositionOptions {
    pub parse_mode: ParseMode,
    /// Compare `(incorrect, correction)` as sets instead of multisets for SAIP.
    pub saip_as_set: bool,
}

/// Scores already-parsed predictions.
pub fn score_position_edits<S: AsRef<str>>(
    sources: &[S],
    gold: &[EditList],
    pred: &[EditList],
    saip_as_set: bool,
) -> Result<PositionEvalReport, MetricsError> {
    check_parallel(gold.len(), pred.len())?;
    check_parallel(sources.len(), pred.len())?;
    let saip_mode = if saip_as_set { SentenceMode::IgnorePositionSet } else { SentenceMode::IgnorePosition };
    let prf = char_prf_position(gold, pred)?;
    Ok(PositionEvalReport {
        ppa: ppa(sources, pred)?,
        sa: sentence_accuracy(gold, pred, SentenceMode::Exact)?,
        saip: sentence_accuracy(gold, pred, saip_mode)?,
        nessa: sentence_accuracy(gold, pred, SentenceMode::NonEmptyOnly)?,
        cp: prf.precision,
        cr: prf.recall,
        cf1: prf.f1,
        sentences: gold.len(),
        parse_failure_count: 0,
        missing_predictions: 0,
        duplicate_positions: 0,
        noop_edits: 0,
    })
}

/// Scores raw model outputs against equal-length gold pairs. `None` marks a
/// missing prediction. Unparseable or missing outputs score as empty lists.
pub fn evaluate_position(
    pairs: &[ParallelPair],
    raw_predictions: &[Option<&str>],
    options: PositionOptions,
) -> Result<PositionEvalReport, MetricsError> {
    check_parallel(pairs.len(), raw_predictions.len())?;
    let gold = pairs.iter().map(diff_pair).collect::<Result<Vec<_>, _>>()?;
    let mut pred = Vec::with_capacity(pairs.len());
    let (mut failures, mut missing, mut dups, mut noops) = (0, 0, 0, 0);
    for raw in raw_predictions {
        match raw {
            None => {
                missing += 1;
                pred.push(EditList::empty());
            }
            Some(text) => match parse_edit_output_with(text, options.parse_mode) {
                Ok(parsed) => {
                    dups += parsed.duplicate_positions;
                    noops += parsed.noop_edits;
                    pred.push(parsed.edits);
                }
                Err(e) => {
                    log::debug!("unparseable prediction: {e}");
                    failures += 1;
                    pred.push(EditList::empty());
                }
            },
        }
    }
    if dups > 0 {
        log::warn!("{dups} predicted edits repeated an earlier position and were dropped");
    }
    let sources: Vec<&str> = pairs.iter().map(|p| p.source.as_str()).collect();
    let mut report = score_position_edits(&sources, &gold, &pred, options.saip_as_set)?;
    report.parse_failure_count = failures;
    report.missing_predictions = missing;
    report.duplicate_positions = dups;
    report.noop_edits = noops;
    Ok(report)
}

impl PositionEvalReport {
    pub fn metrics(&self) -> [(&'static str, Ratio); 7] {
        [
            ("PPA", self.ppa),
            ("SA", self.sa),
            ("SAIP", self.saip),
            ("NESSA", self.nessa),
            ("CP", self.cp),
            ("CR", self.cr),
            ("CF1", self.cf1),
        ]
    }

    pub fn render_table(&self) -> String {
        let mut out = format!("{:<8} {}\n", "metric", "value");
        for (name, r) in self.metrics() {
            out.push_str(&format!("{name:<8} {r}\n"));
        }
        out.push_str(&format!(
            "sentences {}  parse failures {}  missing {}  duplicate positions {}\n",
            self.sentences, self.parse_failure_count, self.missing_predictions, self.duplicate_positions
        ));
        out
    }
}
