use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{
    ApplyArgs, CliError, Command, CorpusFormat, DiffArgs, EvalPositionArgs, EvalTraditionalArgs, GenMtipaArgs,
    GenTipaArgs, PruneArgs, TokenCountArgs, VocabArgs,
};
use crate::csc::{
    apply_edits, diff_pair, filter_equal_length, read_edit_records, read_pairs, read_predictions, write_edit_records,
    write_pairs, EditRecord, ParallelPair, ParseMode,
};
use crate::dataset::{
    build_mtipa_dataset, build_pruned_tipa_dataset, build_tipa_dataset, prune_tokens, read_sentences, write_jsonl,
    GenerationConfig,
};
use crate::metrics::{evaluate_position, token_count_comparison, traditional_metrics, PositionOptions};
use crate::tokenizer::{load_vocabulary, TokenId, Vocabulary};

pub(super) fn execute(cmd: &Command) -> Result<(), CliError> {
    match cmd {
        Command::GenTipa(a) => gen_tipa(a),
        Command::GenMtipa(a) => gen_mtipa(a),
        Command::Prune(a) => prune(a),
        Command::Diff(a) => diff(a),
        Command::Apply(a) => apply(a),
        Command::EvalPosition(a) => eval_position(a),
        Command::EvalTraditional(a) => eval_traditional(a),
        Command::TokenCount(a) => token_count(a),
    }
}

pub(super) fn dropped_path(a: &DiffArgs) -> PathBuf {
    a.dropped.clone().unwrap_or_else(|| {
        let mut name = a.out.as_os_str().to_owned();
        name.push(".dropped.jsonl");
        PathBuf::from(name)
    })
}

fn load_vocab(v: &VocabArgs) -> Result<Vocabulary, CliError> {
    let vocab = load_vocabulary(&v.vocab, v.vocab_format.into(), v.byte_level, v.merges.as_deref())?;
    let vocab = match v.unknown_id {
        Some(id) => vocab.with_unknown_id(id)?,
        None => vocab,
    };
    log::info!("loaded {} tokens from {}", vocab.len(), v.vocab.display());
    Ok(vocab)
}

fn generation_config(order: super::OrderArg, instruction: &Option<String>) -> GenerationConfig {
    let mut cfg = GenerationConfig::for_order(order.into());
    if let Some(text) = instruction {
        cfg.instruction_text = text.clone();
    }
    cfg
}

fn read_keep_ids(path: &Path) -> Result<BTreeSet<TokenId>, CliError> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<TokenId>()
                .map_err(|_| CliError::Data(format!("{}:{}: not a token id: {l:?}", path.display(), i + 1)))
        })
        .collect()
}

fn gen_tipa(a: &GenTipaArgs) -> Result<(), CliError> {
    let vocab = load_vocab(&a.vocab)?;
    let mut cfg = generation_config(a.order, &a.instruction);
    cfg.min_token_length = a.min_len;
    cfg.max_token_length = a.max_len;
    cfg.dedup_texts = a.dedup;
    let dataset = match &a.keep_ids {
        Some(path) => build_pruned_tipa_dataset(&vocab, &read_keep_ids(path)?, &cfg)?,
        None => build_tipa_dataset(&vocab, &cfg)?,
    };
    let s = &dataset.stats;
    log::info!(
        "{} records from {} tokens ({} not UTF-8, {} outside length bounds, {} pruned, {} duplicate texts)",
        s.records,
        s.tokens_seen,
        s.not_utf8,
        s.outside_length,
        s.not_in_pruned_set,
        s.duplicate_texts
    );
    write_jsonl(&dataset.records, &a.out)?;
    Ok(())
}

/// Sentences from a corpus file; pair corpora yield sources, plus targets
/// when `with_targets` is set.
fn corpus_sentences(path: &Path, format: CorpusFormat, with_targets: bool) -> Result<Vec<String>, CliError> {
    Ok(match format {
        CorpusFormat::Lines => read_sentences(path)?,
        CorpusFormat::Pairs => read_pairs(path)?
            .into_iter()
            .flat_map(|p| if with_targets { vec![p.source, p.target] } else { vec![p.source] })
            .collect(),
    })
}

fn gen_mtipa(a: &GenMtipaArgs) -> Result<(), CliError> {
    let corpus = corpus_sentences(&a.corpus, a.corpus_format, false)?;
    let mut cfg = generation_config(a.order, &a.instruction);
    cfg.sampling_ratio = a.ratio;
    cfg.seed = a.seed;
    cfg.long_input_threshold = a.long_threshold;
    let dataset = build_mtipa_dataset(&corpus, &cfg)?;
    let s = &dataset.stats;
    log::info!("sampled {} of {} sentences (ratio {}, seed {})", s.sampled, s.corpus_size, a.ratio, a.seed);
    if !s.long_inputs.is_empty() {
        log::warn!(
            "{} sampled sentences exceed {} characters (first at corpus line {})",
            s.long_inputs.len(),
            a.long_threshold,
            s.long_inputs[0] + 1
        );
    }
    write_jsonl(&dataset.records, &a.out)?;
    Ok(())
}

fn prune(a: &PruneArgs) -> Result<(), CliError> {
    if a.corpus.is_empty() {
        return Err(CliError::Usage("prune needs at least one --corpus".into()));
    }
    let vocab = load_vocab(&a.vocab)?;
    let mut lines = Vec::new();
    for path in &a.corpus {
        lines.extend(corpus_sentences(path, a.corpus_format, true)?);
    }
    if lines.is_empty() {
        log::warn!("corpus is empty; the pruned set is empty");
    }
    let keep = prune_tokens(&vocab, &lines)?;
    if let Some(id) = keep.iter().find(|id| !vocab.contains_id(**id)) {
        return Err(CliError::Data(format!("pruned id {id} is not in the vocabulary")));
    }
    log::info!("{} of {} tokens occur in {} sentences", keep.len(), vocab.len(), lines.len());
    let mut out = BufWriter::new(File::create(&a.out)?);
    for id in &keep {
        writeln!(out, "{id}")?;
    }
    out.flush()?;
    Ok(())
}

fn diff(a: &DiffArgs) -> Result<(), CliError> {
    let pairs = read_pairs(&a.pairs)?;
    let total = pairs.len();
    let (kept, dropped) = filter_equal_length(pairs);
    if !dropped.is_empty() {
        log::warn!("{} of {total} pairs have unequal lengths and were set aside", dropped.len());
    }
    let records = kept
        .iter()
        .map(|p| Ok(EditRecord { id: p.id.clone(), edits: diff_pair(p)? }))
        .collect::<Result<Vec<_>, CliError>>()?;
    write_edit_records(&records, &a.out)?;
    write_pairs(&dropped, &dropped_path(a))?;
    Ok(())
}

fn apply(a: &ApplyArgs) -> Result<(), CliError> {
    let sources: Vec<(String, String)> = match a.source_format {
        CorpusFormat::Pairs => read_pairs(&a.source)?.into_iter().map(|p| (p.id, p.source)).collect(),
        CorpusFormat::Lines => {
            read_sentences(&a.source)?.into_iter().enumerate().map(|(i, s)| ((i + 1).to_string(), s)).collect()
        }
    };
    let mut edits = HashMap::new();
    for record in read_edit_records(&a.edits)? {
        let id = record.id.clone();
        if edits.insert(id.clone(), record.edits).is_some() {
            return Err(CliError::Data(format!("edit file repeats id {id:?}")));
        }
    }
    let mut out = BufWriter::new(File::create(&a.out)?);
    let mut unmatched = 0;
    for (id, source) in &sources {
        let corrected = match edits.remove(id) {
            Some(list) => {
                apply_edits(source, &list, !a.lenient).map_err(|e| CliError::Data(format!("sentence {id:?}: {e}")))?
            }
            None => {
                unmatched += 1;
                source.clone()
            }
        };
        writeln!(out, "{corrected}")?;
    }
    out.flush()?;
    if unmatched > 0 {
        log::warn!("{unmatched} sentences had no edit record and were copied unchanged");
    }
    if !edits.is_empty() {
        log::warn!("{} edit records matched no source sentence", edits.len());
    }
    Ok(())
}

/// Predictions keyed by id, aligned to `pairs`. Returns the aligned list and
/// the number of prediction ids absent from the gold set.
fn align_predictions<'a>(
    pairs: &[ParallelPair],
    predictions: &'a HashMap<String, String>,
) -> (Vec<Option<&'a str>>, usize) {
    let aligned: Vec<Option<&str>> = pairs.iter().map(|p| predictions.get(&p.id).map(String::as_str)).collect();
    let known: BTreeSet<&str> = pairs.iter().map(|p| p.id.as_str()).collect();
    let extra = predictions.keys().filter(|k| !known.contains(k.as_str())).count();
    (aligned, extra)
}

fn load_predictions(path: &Path) -> Result<HashMap<String, String>, CliError> {
    let mut map = HashMap::new();
    for p in read_predictions(path)? {
        if map.insert(p.id.clone(), p.prediction).is_some() {
            return Err(CliError::Data(format!("prediction file repeats id {:?}", p.id)));
        }
    }
    Ok(map)
}

fn write_report<T: Serialize>(report: &T, path: Option<&Path>) -> Result<(), CliError> {
    if let Some(path) = path {
        let mut text = serde_json::to_string_pretty(report)?;
        text.push('\n');
        fs::write(path, text)?;
    }
    Ok(())
}

fn eval_position(a: &EvalPositionArgs) -> Result<(), CliError> {
    let (pairs, dropped) = filter_equal_length(read_pairs(&a.pairs)?);
    if !dropped.is_empty() {
        log::warn!("{} gold pairs have unequal lengths and were excluded", dropped.len());
    }
    let predictions = load_predictions(&a.predictions)?;
    let (aligned, extra) = align_predictions(&pairs, &predictions);
    if extra > 0 {
        log::warn!("{extra} predictions have ids outside the gold set");
    }
    let options = PositionOptions {
        parse_mode: if a.strict_parse { ParseMode::Strict } else { ParseMode::Lenient },
        saip_as_set: a.saip_set,
    };
    let report = evaluate_position(&pairs, &aligned, options)?;
    print!("{}", report.render_table());
    write_report(&report, a.report.as_deref())
}

fn eval_traditional(a: &EvalTraditionalArgs) -> Result<(), CliError> {
    let (pairs, dropped) = filter_equal_length(read_pairs(&a.pairs)?);
    if !dropped.is_empty() {
        log::warn!("{} gold pairs have unequal lengths and were excluded", dropped.len());
    }
    let predictions = load_predictions(&a.predictions)?;
    let (aligned, extra) = align_predictions(&pairs, &predictions);
    if extra > 0 {
        log::warn!("{extra} predictions have ids outside the gold set");
    }
    let missing = aligned.iter().filter(|p| p.is_none()).count();
    if missing > 0 {
        log::warn!("{missing} gold pairs have no prediction; they count as length mismatches");
    }
    let outputs: Vec<&str> = aligned.iter().map(|p| p.unwrap_or("")).collect();
    let report = traditional_metrics(&pairs, &outputs, a.width_normalize)?;
    print!("{}", report.render_table());
    write_report(&report, a.report.as_deref())
}

fn token_count(a: &TokenCountArgs) -> Result<(), CliError> {
    let vocab = load_vocab(&a.vocab)?;
    let (pairs, dropped) = filter_equal_length(read_pairs(&a.pairs)?);
    if !dropped.is_empty() {
        log::warn!("{} pairs have unequal lengths and were excluded", dropped.len());
    }
    let report = token_count_comparison(&pairs, &vocab)?;
    print!("{}", report.render_table());
    write_report(&report, a.report.as_deref())
}
