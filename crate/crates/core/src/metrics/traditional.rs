//! Sentence- and character-level detection/correction scores for the
//! rewrite-the-sentence task.
//!
//! Outputs whose character count differs from the source are excluded from
//! every score and tallied separately. Among the remaining sentences:
//!
//! - character level: detection credits a position changed by both the model
//!   and the gold target; correction also needs the model's character to
//!   equal the target's. Precision is over model-changed positions, recall over
//!   gold-changed positions.
//! - sentence level: a sentence is predicted when the output differs from the
//!   source. Detection credits a predicted sentence with gold changes whose
//!   changed-position set equals the gold set; correction credits a predicted
//!   sentence with gold changes whose output equals the target. Precision is
//!   over predicted sentences, recall over sentences with gold changes.

use serde::Serialize;

use super::{MetricsError, Prf, Ratio};
use crate::csc::{normalize_char, ParallelPair};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraditionalEvalReport {
    pub sentence_detection: Prf,
    pub sentence_correction: Prf,
    pub char_detection: Prf,
    pub char_correction: Prf,
    pub length_consistency: Ratio,
    pub excluded_count: usize,
    pub evaluated: usize,
}

/// Share of outputs with the same character count as their source.
pub fn length_consistency<S: AsRef<str>>(pairs: &[ParallelPair], outputs: &[S]) -> Result<Ratio, MetricsError> {
    if pairs.len() != outputs.len() {
        return Err(MetricsError::LengthMismatch { gold: pairs.len(), predictions: outputs.len() });
    }
    let same =
        pairs.iter().zip(outputs).filter(|(p, o)| p.source.chars().count() == o.as_ref().chars().count()).count();
    Ok(Ratio::new(same as u64, pairs.len() as u64))
}

#[derive(Default)]
struct Tally {
    char_pred: u64,
    char_gold: u64,
    char_det_tp: u64,
    char_cor_tp: u64,
    sent_pred: u64,
    sent_gold: u64,
    sent_det_tp: u64,
    sent_cor_tp: u64,
}

/// With `width_normalize`, full-width forms are folded to ASCII in source,
/// target and output before comparison.
pub fn traditional_metrics<S: AsRef<str>>(
    pairs: &[ParallelPair],
    outputs: &[S],
    width_normalize: bool,
) -> Result<TraditionalEvalReport, MetricsError> {
    let length_consistency = length_consistency(pairs, outputs)?;
    let fold = |s: &str| -> Vec<char> {
        if width_normalize {
            s.chars().map(normalize_char).collect()
        } else {
            s.chars().collect()
        }
    };

    let mut t = Tally::default();
    let mut excluded = 0;
    for (pair, output) in pairs.iter().zip(outputs) {
        let src = fold(&pair.source);
        let tgt = fold(&pair.target);
        let out = fold(output.as_ref());
        if out.len() != src.len() {
            excluded += 1;
            continue;
        }
        if tgt.len() != src.len() {
            return Err(MetricsError::UnequalGold { id: pair.id.clone() });
        }

        let mut gold_changed = Vec::new();
        let mut pred_changed = Vec::new();
        for i in 0..src.len() {
            let g = src[i] != tgt[i];
            let p = src[i] != out[i];
            if g {
                gold_changed.push(i);
            }
            if p {
                pred_changed.push(i);
            }
            if g && p {
                t.char_det_tp += 1;
                if out[i] == tgt[i] {
                    t.char_cor_tp += 1;
                }
            }
        }
        t.char_gold += gold_changed.len() as u64;
        t.char_pred += pred_changed.len() as u64;

        let has_gold = !gold_changed.is_empty();
        if has_gold {
            t.sent_gold += 1;
        }
        if !pred_changed.is_empty() {
            t.sent_pred += 1;
            if has_gold && pred_changed == gold_changed {
                t.sent_det_tp += 1;
            }
            if has_gold && out == tgt {
                t.sent_cor_tp += 1;
            }
        }
    }

    Ok(TraditionalEvalReport {
        sentence_detection: Prf::from_counts(t.sent_det_tp, t.sent_pred, t.sent_gold),
        sentence_correction: Prf::from_counts(t.sent_cor_tp, t.sent_pred, t.sent_gold),
        char_detection: Prf::from_counts(t.char_det_tp, t.char_pred, t.char_gold),
        char_correction: Prf::from_counts(t.char_cor_tp, t.char_pred, t.char_gold),
        length_consistency,
        excluded_count: excluded,
        evaluated: pairs.len() - excluded,
    })
}

impl TraditionalEvalReport {
    pub fn grid(&self) -> [(&'static str, Prf); 4] {
        [
            ("sentence/detection", self.sentence_detection),
            ("sentence/correction", self.sentence_correction),
            ("char/detection", self.char_detection),
            ("char/correction", self.char_correction),
        ]
    }

    pub fn render_table(&self) -> String {
        let mut out = format!("{:<20} {:<30} {:<30} {}\n", "level/task", "P", "R", "F1");
        for (name, prf) in self.grid() {
            out.push_str(&format!(
                "{name:<20} {:<30} {:<30} {}\n",
                prf.precision.to_string(),
                prf.recall.to_string(),
                prf.f1
            ));
        }
        out.push_str(&format!(
            "length consistency {}  excluded {}  evaluated {}\n",
            self.length_consistency, self.excluded_count, self.evaluated
        ));
        out
    }
}
