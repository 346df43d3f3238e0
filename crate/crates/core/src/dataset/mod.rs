//! Position-mapping instruction records for tokens (TIPA) and whole
//! sentences (MTIPA).

mod mapping;
mod sampling;

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenizer::{utf8_representable, TokenId, TokenizerError, Vocabulary};

pub use mapping::{build_mapping, char_decompose, serialize_mapping, Order, PositionMapping};
pub use sampling::{sample_indices, SamplingRatio};

/// Instruction used for reverse-order records.
pub const DEFAULT_INSTRUCTION: &str = "直接给出json输出，倒序给出输入的Token中包含的所有位置和字符";
/// Instruction used for forward-order records.
pub const DEFAULT_FORWARD_INSTRUCTION: &str = "直接给出json输出，正序给出输入的Token中包含的所有位置和字符";
pub const DEFAULT_SEED: u64 = 20_241_014;
pub const DEFAULT_MAX_TOKEN_LENGTH: usize = 79;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("empty input string")]
    EmptyInput,
    #[error("invalid position mapping: {0}")]
    InvalidMapping(String),
    #[error("invalid sampling ratio {0:?}: expected a value in (0, 1]")]
    InvalidRatio(String),
    #[error("invalid length bounds: min {min} > max {max}")]
    InvalidBounds { min: usize, max: usize },
    #[error("corpus line {line} is empty")]
    EmptySentence { line: usize },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: line {line}: {message}", path.display())]
    MalformedRecord { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
}

/// One instruction-tuning example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TipaRecord {
    pub instruction: String,
    pub input: String,
    pub output: String,
}

impl TipaRecord {
    pub fn new(instruction: &str, input: &str, order: Order) -> Result<Self, DatasetError> {
        let mapping = build_mapping(input, order)?;
        Ok(Self { instruction: instruction.to_string(), input: input.to_string(), output: serialize_mapping(&mapping) })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationConfig {
    pub order: Order,
    pub instruction_text: String,
    pub sampling_ratio: SamplingRatio,
    pub seed: u64,
    pub min_token_length: usize,
    pub max_token_length: usize,
    /// Emit one record per distinct decoded text instead of one per token id.
    pub dedup_texts: bool,
    /// Sentences longer than this many characters are reported (not dropped).
    pub long_input_threshold: usize,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            order: Order::Reverse,
            instruction_text: DEFAULT_INSTRUCTION.to_string(),
            sampling_ratio: SamplingRatio::DEFAULT,
            seed: DEFAULT_SEED,
            min_token_length: 1,
            max_token_length: DEFAULT_MAX_TOKEN_LENGTH,
            dedup_texts: false,
            long_input_threshold: 1024,
        }
    }
}

impl GenerationConfig {
    /// Default configuration for `order`, with the matching instruction text.
    pub fn for_order(order: Order) -> Self {
        let instruction_text = match order {
            Order::Reverse => DEFAULT_INSTRUCTION,
            Order::Forward => DEFAULT_FORWARD_INSTRUCTION,
        };
        Self { order, instruction_text: instruction_text.to_string(), ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.min_token_length > self.max_token_length {
            return Err(DatasetError::InvalidBounds { min: self.min_token_length, max: self.max_token_length });
        }
        Ok(())
    }
}

/// Why tokens were left out of a TIPA dataset.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TipaStats {
    pub tokens_seen: usize,
    pub not_utf8: usize,
    pub outside_length: usize,
    pub not_in_pruned_set: usize,
    pub duplicate_texts: usize,
    pub records: usize,
}

#[derive(Debug, Clone)]
pub struct TipaDataset {
    pub records: Vec<TipaRecord>,
    pub stats: TipaStats,
}

/// One record per UTF-8 representable token within the length bounds, in
/// ascending id order.
pub fn build_tipa_dataset(vocab: &Vocabulary, config: &GenerationConfig) -> Result<TipaDataset, DatasetError> {
    build_tipa(vocab, None, config)
}

/// As [`build_tipa_dataset`], restricted to the ids in `keep`.
pub fn build_pruned_tipa_dataset(
    vocab: &Vocabulary,
    keep: &BTreeSet<TokenId>,
    config: &GenerationConfig,
) -> Result<TipaDataset, DatasetError> {
    build_tipa(vocab, Some(keep), config)
}

fn build_tipa(
    vocab: &Vocabulary,
    keep: Option<&BTreeSet<TokenId>>,
    config: &GenerationConfig,
) -> Result<TipaDataset, DatasetError> {
    config.validate()?;
    let mut stats = TipaStats::default();
    let mut seen_texts = HashSet::new();
    let mut records = Vec::new();
    for entry in vocab.entries() {
        stats.tokens_seen += 1;
        if keep.is_some_and(|k| !k.contains(&entry.id)) {
            stats.not_in_pruned_set += 1;
            continue;
        }
        let Some(text) = utf8_representable(entry) else {
            stats.not_utf8 += 1;
            continue;
        };
        let n = text.chars().count();
        if n < config.min_token_length.max(1) || n > config.max_token_length {
            stats.outside_length += 1;
            continue;
        }
        if config.dedup_texts && !seen_texts.insert(text.clone()) {
            stats.duplicate_texts += 1;
            continue;
        }
        records.push(TipaRecord::new(&config.instruction_text, &text, config.order)?);
    }
    stats.records = records.len();
    if records.is_empty() {
        log::warn!("TIPA dataset is empty: no token passed the UTF-8 and length filters");
    }
    Ok(TipaDataset { records, stats })
}

/// Ids of every token produced when encoding the corpus lines. The unknown
/// placeholder is never included.
pub fn prune_tokens<S: AsRef<str> + Sync>(vocab: &Vocabulary, lines: &[S]) -> Result<BTreeSet<TokenId>, DatasetError> {
    if !vocab.has_merges() {
        return Err(TokenizerError::MergesUnavailable.into());
    }
    let per_line: Vec<Vec<TokenId>> =
        lines.par_iter().map(|line| vocab.encode(line.as_ref())).collect::<Result<_, _>>()?;
    let unknown = vocab.unknown_id();
    Ok(per_line.into_iter().flatten().filter(|&id| id != unknown && vocab.contains_id(id)).collect())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MtipaStats {
    pub corpus_size: usize,
    pub sampled: usize,
    /// Corpus indices (0-based) of sampled sentences above the length threshold.
    pub long_inputs: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct MtipaDataset {
    pub records: Vec<TipaRecord>,
    pub stats: MtipaStats,
}

/// Samples `floor(r * N)` sentences without replacement and emits one
/// position-mapping record per sampled sentence, in corpus order.
pub fn build_mtipa_dataset<S: AsRef<str>>(
    corpus: &[S],
    config: &GenerationConfig,
) -> Result<MtipaDataset, DatasetError> {
    if let Some(i) = corpus.iter().position(|s| s.as_ref().is_empty()) {
        return Err(DatasetError::EmptySentence { line: i + 1 });
    }
    let indices = sample_indices(corpus.len(), config.sampling_ratio, config.seed);
    let mut stats = MtipaStats { corpus_size: corpus.len(), sampled: indices.len(), long_inputs: Vec::new() };
    let mut records = Vec::with_capacity(indices.len());
    for i in indices {
        let sentence = corpus[i].as_ref();
        if sentence.chars().count() > config.long_input_threshold {
            stats.long_inputs.push(i);
        }
        records.push(TipaRecord::new(&config.instruction_text, sentence, config.order)?);
    }
    if records.is_empty() {
        log::warn!(
            "MTIPA dataset is empty: ratio {} of {} sentences rounds down to zero",
            config.sampling_ratio,
            corpus.len()
        );
    }
    if !stats.long_inputs.is_empty() {
        log::warn!("{} sampled sentences exceed {} characters", stats.long_inputs.len(), config.long_input_threshold);
    }
    Ok(MtipaDataset { records, stats })
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

/// Writes one JSON object per line, keys `instruction`, `input`, `output`.
pub fn write_records<W: Write>(records: &[TipaRecord], mut out: W) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write_jsonl(records: &[TipaRecord], path: &Path) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(io_err(path))?;
    write_records(records, BufWriter::new(file)).map_err(io_err(path))
}

pub fn read_jsonl(path: &Path) -> Result<Vec<TipaRecord>, DatasetError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| DatasetError::MalformedRecord {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Reads a one-sentence-per-line corpus; blank lines are skipped.
pub fn read_sentences(path: &Path) -> Result<Vec<String>, DatasetError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io_err(path))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if !line.is_empty() {
            out.push(line.to_string());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::bytes_to_surface;
    use proptest::prelude::*;

    fn plain(tokens: &[&str]) -> Vocabulary {
        Vocabulary::new(tokens.iter().enumerate().map(|(i, s)| (s.to_string(), i as TokenId)).collect(), false, None)
            .unwrap()
    }

    fn toy5() -> Vocabulary {
        Vocabulary::new(
            ["a", "b", "c", "ab", "abc"].iter().enumerate().map(|(i, s)| (s.to_string(), i as TokenId)).collect(),
            false,
            Some(vec![("a".into(), "b".into()), ("ab".into(), "c".into())]),
        )
        .unwrap()
    }

    #[test]
    fn tipa_girl() {
        let ds = build_tipa_dataset(&plain(&["girl"]), &GenerationConfig::default()).unwrap();
        assert_eq!(ds.records.len(), 1);
        assert_eq!(ds.records[0].input, "girl");
        assert_eq!(ds.records[0].output, r#"{"4": "l", "3": "r", "2": "i", "1": "g"}"#);
        assert_eq!(ds.records[0].instruction, DEFAULT_INSTRUCTION);
    }

    #[test]
    fn tipa_skips_truncated_utf8() {
        let surface = bytes_to_surface(&[0xE4, 0xB8]);
        let v = Vocabulary::new(vec![(surface, 0)], true, None).unwrap();
        let ds = build_tipa_dataset(&v, &GenerationConfig::default()).unwrap();
        assert!(ds.records.is_empty());
        assert_eq!(ds.stats.not_utf8, 1);
    }

    #[test]
    fn tipa_single_chars() {
        let v = plain(&["a", "b", "中", "c", "说"]);
        let cfg = GenerationConfig { max_token_length: 80, ..Default::default() };
        let ds = build_tipa_dataset(&v, &cfg).unwrap();
        assert_eq!(ds.records.len(), 5);
        for r in &ds.records {
            assert_eq!(r.output, format!("{{\"1\": \"{}\"}}", r.input));
        }
    }

    #[test]
    fn tipa_length_bounds_and_id_order() {
        let v = Vocabulary::new(vec![("ccc".into(), 9), ("a".into(), 2), ("bb".into(), 4)], false, None).unwrap();
        let cfg = GenerationConfig { min_token_length: 2, max_token_length: 3, ..Default::default() };
        let ds = build_tipa_dataset(&v, &cfg).unwrap();
        let inputs: Vec<_> = ds.records.iter().map(|r| r.input.as_str()).collect();
        assert_eq!(inputs, vec!["bb", "ccc"]);
        assert_eq!(ds.stats.outside_length, 1);

        let bad = GenerationConfig { min_token_length: 5, max_token_length: 3, ..Default::default() };
        assert!(matches!(build_tipa_dataset(&v, &bad), Err(DatasetError::InvalidBounds { .. })));
    }

    #[test]
    fn pruned_variant() {
        let v = toy5();
        let keep = prune_tokens(&v, &["abcab"]).unwrap();
        assert_eq!(keep, BTreeSet::from([3, 4]));
        let ds = build_pruned_tipa_dataset(&v, &keep, &GenerationConfig::default()).unwrap();
        let inputs: Vec<_> = ds.records.iter().map(|r| r.input.as_str()).collect();
        assert_eq!(inputs, vec!["ab", "abc"]);
        assert_eq!(ds.stats.not_in_pruned_set, 3);
    }

    #[test]
    fn prune_examples() {
        let v3 = Vocabulary::new(
            vec![("a".into(), 0), ("b".into(), 1), ("ab".into(), 2)],
            false,
            Some(vec![("a".into(), "b".into())]),
        )
        .unwrap();
        assert_eq!(prune_tokens(&v3, &["ab"]).unwrap(), BTreeSet::from([2]));
        assert!(prune_tokens(&v3, &[] as &[&str]).unwrap().is_empty());
        // unknown placeholder excluded
        assert_eq!(prune_tokens(&v3, &["zab"]).unwrap(), BTreeSet::from([2]));
        assert!(prune_tokens(&plain(&["a"]), &["a"]).is_err());
    }

    #[test]
    fn mtipa_full_ratio() {
        let cfg = GenerationConfig { sampling_ratio: SamplingRatio::ONE, ..Default::default() };
        let ds = build_mtipa_dataset(&["小说"], &cfg).unwrap();
        assert_eq!(ds.records.len(), 1);
        assert_eq!(ds.records[0].output, r#"{"2": "说", "1": "小"}"#);
    }

    #[test]
    fn mtipa_half_is_reproducible() {
        let corpus: Vec<String> = (0..10).map(|i| format!("句子{i}")).collect();
        let cfg = GenerationConfig { sampling_ratio: "0.5".parse().unwrap(), seed: 7, ..Default::default() };
        let a = build_mtipa_dataset(&corpus, &cfg).unwrap();
        let b = build_mtipa_dataset(&corpus, &cfg).unwrap();
        assert_eq!(a.records.len(), 5);
        assert_eq!(a.records, b.records);
        // sampled order follows corpus order
        let pos: Vec<usize> = a.records.iter().map(|r| corpus.iter().position(|s| *s == r.input).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn mtipa_default_ratio_is_ten_percent() {
        assert_eq!(GenerationConfig::default().sampling_ratio, "0.1".parse().unwrap());
        let corpus: Vec<String> = (0..100).map(|i| format!("s{i}")).collect();
        let ds = build_mtipa_dataset(&corpus, &GenerationConfig::default()).unwrap();
        assert_eq!(ds.records.len(), 10);
    }

    #[test]
    fn mtipa_edge_cases() {
        let cfg = GenerationConfig { sampling_ratio: "0.1".parse().unwrap(), ..Default::default() };
        let ds = build_mtipa_dataset(&["a", "b"], &cfg).unwrap();
        assert!(ds.records.is_empty());
        assert!(matches!(build_mtipa_dataset(&["a", ""], &cfg), Err(DatasetError::EmptySentence { line: 2 })));
        let cfg =
            GenerationConfig { sampling_ratio: SamplingRatio::ONE, long_input_threshold: 2, ..Default::default() };
        let ds = build_mtipa_dataset(&["abc", "ab"], &cfg).unwrap();
        assert_eq!(ds.stats.long_inputs, vec![0]);
        assert_eq!(ds.records[0].input, "abc");
    }

    #[test]
    fn jsonl_empty_and_single() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.jsonl");
        write_jsonl(&[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "");
        assert!(read_jsonl(&path).unwrap().is_empty());

        let rec = TipaRecord::new(DEFAULT_INSTRUCTION, "girl", Order::Reverse).unwrap();
        write_jsonl(std::slice::from_ref(&rec), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("{\"instruction\":"));
        assert_eq!(read_jsonl(&path).unwrap(), vec![rec]);
    }

    #[test]
    fn jsonl_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"instruction\":\"i\",\"input\":\"a\",\"output\":\"o\"}\n{oops\n").unwrap();
        let err = read_jsonl(&path).unwrap_err();
        assert!(matches!(err, DatasetError::MalformedRecord { line: 2, .. }), "{err}");
    }

    fn record_strategy() -> impl Strategy<Value = TipaRecord> {
        ("\\PC{0,20}", "\\PC{1,20}", any::<bool>()).prop_map(|(instruction, input, fwd)| {
            let order = if fwd { Order::Forward } else { Order::Reverse };
            TipaRecord::new(&instruction, &input, order).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn jsonl_roundtrip(records in proptest::collection::vec(record_strategy(), 0..100)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("r.jsonl");
            write_jsonl(&records, &path).unwrap();
            prop_assert_eq!(read_jsonl(&path).unwrap(), records);
        }
    }

    proptest! {
        #[test]
        fn records_reconstruct_input(input in "\\PC{1,30}") {
            let rec = TipaRecord::new("i", &input, Order::Reverse).unwrap();
            let m = PositionMapping::parse(&rec.output).unwrap();
            prop_assert_eq!(m.reconstruct(), input.clone());
            prop_assert_eq!(m.pairs()[0].0, input.chars().count());
        }

        #[test]
        fn prune_is_subset(text in "[abcxy]{0,30}") {
            let v = toy5();
            let ids = prune_tokens(&v, &[text.as_str()]).unwrap();
            prop_assert!(ids.iter().all(|&id| v.contains_id(id)));
            for id in v.encode(&text).unwrap() {
                if id != v.unknown_id() {
                    prop_assert!(ids.contains(&id));
                }
            }
        }
    }
}
