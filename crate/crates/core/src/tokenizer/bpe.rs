use super::byte_level::byte_to_char;
use super::{TokenId, Vocabulary};

/// Result of encoding one text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoding {
    pub ids: Vec<TokenId>,
    /// Number of atomic units before any merge.
    pub initial_units: usize,
    pub merges_applied: usize,
    /// Atomic units that had no vocabulary entry.
    pub unknown_units: usize,
}

/// Greedy BPE: repeatedly pick the lowest-priority rule present among
/// adjacent symbols and apply it at every non-overlapping position, left to
/// right, until no rule applies.
pub(super) fn encode(vocab: &Vocabulary, text: &str) -> Encoding {
    // `None` marks an atomic unit missing from the vocabulary; it never merges.
    let mut symbols: Vec<Option<TokenId>> = if vocab.is_byte_level() {
        let mut buf = [0u8; 4];
        text.bytes().map(|b| vocab.id_of(byte_to_char(b).encode_utf8(&mut buf))).collect()
    } else {
        let mut buf = [0u8; 4];
        text.chars().map(|c| vocab.id_of(c.encode_utf8(&mut buf))).collect()
    };
    let initial_units = symbols.len();
    let unknown_units = symbols.iter().filter(|s| s.is_none()).count();
    let mut merges_applied = 0;

    loop {
        let best = symbols
            .windows(2)
            .filter_map(|w| match (w[0], w[1]) {
                (Some(l), Some(r)) => vocab.merge_for(l, r).map(|(prio, merged)| (prio, l, r, merged)),
                _ => None,
            })
            .min_by_key(|&(prio, ..)| prio);
        let Some((_, left, right, merged)) = best else { break };

        let mut out = Vec::with_capacity(symbols.len());
        let mut i = 0;
        while i < symbols.len() {
            if i + 1 < symbols.len() && symbols[i] == Some(left) && symbols[i + 1] == Some(right) {
                out.push(Some(merged));
                merges_applied += 1;
                i += 2;
            } else {
                out.push(symbols[i]);
                i += 1;
            }
        }
        symbols = out;
    }

    let unknown = vocab.unknown_id();
    Encoding {
        ids: symbols.into_iter().map(|s| s.unwrap_or(unknown)).collect(),
        initial_units,
        merges_applied,
        unknown_units,
    }
}
