//! Corpus handling, training, inference, scoring, and grid search.

use std::collections::BTreeMap;
use std::fs;
use std::ops::RangeInclusive;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::aligner::{align_corpus, AlignFailure, AlignedPair};
use crate::dtree::{DecisionTree, TreeError};
use crate::featurizer::{dedup_samples, extract_samples, window_features, Sample, WindowError, WindowSpec};
use crate::model::TranslitModel;
use crate::scripts::{normalize_word, Direction, MappingTable, NormalizationPolicy};

pub const LEXICON_TSV: &str = include_str!("../data/lexicon.tsv");

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("line {line}: {message}")]
    CorpusParse { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("split fractions must each lie in (0, 1) and sum to 1, got {0:?}")]
    InvalidFractions([f64; 3]),
    #[error("split of {total} pairs leaves the {part} part empty")]
    DegenerateSplit { total: usize, part: &'static str },
    #[error("none of the {0} training pairs could be aligned")]
    AllPairsUnalignable(usize),
    #[error("table is for {table}, expected {expected}")]
    TableDirection { table: Direction, expected: Direction },
    #[error("model was trained with table {model}, evaluation table is {table}")]
    FingerprintMismatch { model: String, table: String },
    #[error("models are not inverse directions ({forward} then {back})")]
    DirectionMismatch { forward: Direction, back: Direction },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Window(#[from] WindowError),
}

/// Parallel `(cyrillic, latin)` word pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub pairs: Vec<(String, String)>,
    pub provenance: String,
}

fn check_word(word: &str) -> Result<(), String> {
    if word.is_empty() {
        return Err("empty word".into());
    }
    if let Some(c) = word.chars().find(|c| !(c.is_alphanumeric() || *c == '-' || *c == '\'')) {
        return Err(format!("{word:?} contains {c:?}"));
    }
    Ok(())
}

impl Corpus {
    pub fn new(pairs: Vec<(String, String)>, provenance: impl Into<String>) -> Self {
        Corpus { pairs, provenance: provenance.into() }
    }

    /// Parses `cyrillic<TAB>latin` lines; `#` starts a comment line.
    /// Words are normalized on the way in.
    pub fn parse(text: &str, provenance: impl Into<String>) -> Result<Corpus, PipelineError> {
        let policy = NormalizationPolicy::default();
        let mut pairs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let mut fields = raw.split('\t');
            let (Some(cyr), Some(lat), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(PipelineError::CorpusParse { line, message: "expected cyrillic<TAB>latin".into() });
            };
            let cyr = normalize_word(cyr.trim(), &policy);
            let lat = normalize_word(lat.trim(), &policy);
            check_word(&cyr)
                .and_then(|_| check_word(&lat))
                .map_err(|message| PipelineError::CorpusParse { line, message })?;
            pairs.push((cyr, lat));
        }
        Ok(Corpus { pairs, provenance: provenance.into() })
    }

    pub fn load(path: &Path) -> Result<Corpus, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|source| PipelineError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text, path.display().to_string())
    }

    /// The hand-checked lexicon shipped with the crate.
    pub fn bundled_lexicon() -> Corpus {
        Corpus::parse(LEXICON_TSV, "bundled lexicon").expect("bundled lexicon parses")
    }

    pub fn to_tsv(&self) -> String {
        self.pairs.iter().map(|(c, l)| format!("{c}\t{l}\n")).collect()
    }

    /// Pairs as `(source, target)` for `direction`.
    pub fn oriented(&self, direction: Direction) -> Vec<(&str, &str)> {
        self.pairs.iter().map(|(c, l)| direction.orient(c, l)).collect()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitConfig {
    pub fn new(train: f64, validation: f64, test: f64, seed: u64) -> Result<Self, PipelineError> {
        let f = [train, validation, test];
        if f.iter().any(|v| !(*v > 0.0 && *v < 1.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(PipelineError::InvalidFractions(f));
        }
        Ok(SplitConfig { train_fraction: train, validation_fraction: validation, test_fraction: test, seed })
    }

    fn fractions(&self) -> [f64; 3] {
        [self.train_fraction, self.validation_fraction, self.test_fraction]
    }
}

/// `floor(fraction * n)` per part, then the remainder handed out one at a
/// time to train, validation, test, in that order.
pub fn split_sizes(n: usize, config: &SplitConfig) -> Result<[usize; 3], PipelineError> {
    let mut sizes = config.fractions().map(|f| (f * n as f64).floor() as usize);
    let mut assigned: usize = sizes.iter().sum();
    let mut k = 0;
    while assigned < n {
        sizes[k % 3] += 1;
        assigned += 1;
        k += 1;
    }
    for (size, part) in sizes.iter().zip(["train", "validation", "test"]) {
        if *size == 0 {
            return Err(PipelineError::DegenerateSplit { total: n, part });
        }
    }
    Ok(sizes)
}

/// Uniform integer in `0..bound` by widening multiply with rejection.
fn below(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    let threshold = bound.wrapping_neg() % bound;
    loop {
        let m = rng.next_u64() as u128 * bound as u128;
        if (m as u64) >= threshold {
            return (m >> 64) as u64;
        }
    }
}

/// Fisher-Yates from the last index down, drawing from ChaCha8 seeded with
/// `seed_from_u64(seed)`.
pub fn seeded_shuffle<T>(items: &mut [T], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..items.len()).rev() {
        let j = below(&mut rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}

/// Shuffles by seed and cuts into contiguous train / validation / test parts.
pub fn split_corpus(corpus: &Corpus, config: &SplitConfig) -> Result<(Corpus, Corpus, Corpus), PipelineError> {
    if corpus.is_empty() {
        return Err(PipelineError::EmptyCorpus);
    }
    let [n_train, n_val, _] = split_sizes(corpus.len(), config)?;
    let mut pairs = corpus.pairs.clone();
    seeded_shuffle(&mut pairs, config.seed);
    let test = pairs.split_off(n_train + n_val);
    let validation = pairs.split_off(n_train);
    let tag = |part: &str| format!("{} [{part}, seed {}]", corpus.provenance, config.seed);
    Ok((Corpus::new(pairs, tag("train")), Corpus::new(validation, tag("validation")), Corpus::new(test, tag("test"))))
}

fn samples_for(aligned: &[AlignedPair], window: WindowSpec) -> Vec<Sample> {
    dedup_samples(aligned.iter().flat_map(|a| extract_samples(a, window)).collect())
}

fn check_table(table: &MappingTable, direction: Direction) -> Result<(), PipelineError> {
    if table.direction() != direction {
        return Err(PipelineError::TableDirection { table: table.direction(), expected: direction });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TranslitModel,
    /// Pairs left out because they did not align.
    pub failures: Vec<AlignFailure>,
    /// Samples after deduplication.
    pub samples: usize,
}

fn fit_aligned(
    aligned: &[AlignedPair],
    window: WindowSpec,
    table: &MappingTable,
    direction: Direction,
) -> Result<(TranslitModel, usize), PipelineError> {
    let samples = samples_for(aligned, window);
    let tree = DecisionTree::fit(&samples)?;
    Ok((TranslitModel::new(tree, window, direction, table.fingerprint()), samples.len()))
}

/// Align, extract, deduplicate, and fit one direction.
pub fn train_direction(
    train: &Corpus,
    window: WindowSpec,
    table: &MappingTable,
    direction: Direction,
) -> Result<TrainOutcome, PipelineError> {
    check_table(table, direction)?;
    let (aligned, failures) = align_corpus(&train.oriented(direction), table);
    if aligned.is_empty() {
        return Err(PipelineError::AllPairsUnalignable(train.len()));
    }
    let (model, samples) = fit_aligned(&aligned, window, table, direction)?;
    Ok(TrainOutcome { model, failures, samples })
}

/// Per-character predictions for a normalized word. Characters outside the
/// source alphabet map to themselves.
pub fn predict_segments(model: &TranslitModel, chars: &[char]) -> Vec<String> {
    let script = model.direction.source_script();
    (0..chars.len())
        .map(|i| {
            if script.contains_char(chars[i]) {
                let features = window_features(chars, i, model.window);
                model.predict(&features).expect("window width matches model").to_string()
            } else {
                chars[i].to_string()
            }
        })
        .collect()
}

/// Transliterates one normalized word.
pub fn transliterate_word(model: &TranslitModel, word: &str) -> String {
    let chars: Vec<char> = word.chars().collect();
    predict_segments(model, &chars).concat()
}

fn restore_case(original: &str, output: &str) -> String {
    let cased: Vec<char> = original.chars().filter(|c| c.is_uppercase() || c.is_lowercase()).collect();
    let all_caps = cased.len() >= 2 && cased.iter().all(|c| c.is_uppercase());
    if all_caps {
        return output.to_uppercase();
    }
    match cased.first() {
        Some(c) if c.is_uppercase() => {
            let mut chars = output.chars();
            match chars.next() {
                Some(first) => first.to_uppercase().chain(chars).collect(),
                None => String::new(),
            }
        }
        _ => output.to_string(),
    }
}

/// Transliterates running text: runs of source-alphabet characters are words,
/// everything else passes through. Output case follows each word's input:
/// all caps, initial capital, or lowercase.
pub fn transliterate_text(model: &TranslitModel, text: &str) -> String {
    let policy = NormalizationPolicy::default();
    let script = model.direction.source_script();
    let text: String = text.nfc().collect();
    let in_word = |c: char| normalize_word(&c.to_string(), &policy).chars().all(|n| script.contains_char(n));
    let mut out = String::with_capacity(text.len());
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut String| {
        if !word.is_empty() {
            let translit = transliterate_word(model, &normalize_word(word, &policy));
            out.push_str(&restore_case(word, &translit));
            word.clear();
        }
    };
    for c in text.chars() {
        if in_word(c) {
            word.push(c);
        } else {
            flush(&mut word, &mut out);
            out.push(c);
        }
    }
    flush(&mut word, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordError {
    pub input: String,
    pub output: String,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub char_precision: f64,
    pub char_recall: f64,
    pub char_f1: f64,
    pub word_accuracy: f64,
    pub characters: usize,
    pub words: usize,
    pub errors: Vec<WordError>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report JSON") + "\n"
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!(
            "char_precision\t{}\nchar_recall\t{}\nchar_f1\t{}\nword_accuracy\t{}\ncharacters\t{}\nwords\t{}\n",
            self.char_precision, self.char_recall, self.char_f1, self.word_accuracy, self.characters, self.words
        );
        for e in &self.errors {
            out.push_str(&format!("error\t{}\t{}\t{}\n", e.input, e.output, e.expected));
        }
        out
    }
}

#[derive(Default, Clone, Copy)]
struct ClassCounts {
    tp: u64,
    fp: u64,
    fn_: u64,
}

/// Micro-averaged scoring over aligned source characters.
#[derive(Default)]
struct Scorer {
    classes: BTreeMap<String, ClassCounts>,
    characters: usize,
    words: usize,
    correct_words: usize,
    errors: Vec<WordError>,
}

impl Scorer {
    fn record_char(&mut self, predicted: &str, gold: &str) {
        self.characters += 1;
        if predicted == gold {
            self.classes.entry(gold.to_string()).or_default().tp += 1;
        } else {
            self.classes.entry(predicted.to_string()).or_default().fp += 1;
            self.classes.entry(gold.to_string()).or_default().fn_ += 1;
        }
    }

    /// Counts every character of an unalignable word as wrong.
    fn record_unaligned(&mut self, n_chars: usize) {
        self.characters += n_chars;
        let missed = self.classes.entry(String::new()).or_default();
        missed.fp += n_chars as u64;
        missed.fn_ += n_chars as u64;
    }

    fn record_word(&mut self, input: &str, output: String, expected: &str) {
        self.words += 1;
        if output == expected {
            self.correct_words += 1;
        } else {
            self.errors.push(WordError { input: input.to_string(), output, expected: expected.to_string() });
        }
    }

    fn report(self) -> EvalReport {
        let (tp, fp, fn_) =
            self.classes.values().fold((0u64, 0u64, 0u64), |(a, b, c), k| (a + k.tp, b + k.fp, c + k.fn_));
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        EvalReport {
            char_precision: ratio(tp, tp + fp),
            char_recall: ratio(tp, tp + fn_),
            char_f1: ratio(2 * tp, 2 * tp + fp + fn_),
            word_accuracy: ratio(self.correct_words as u64, self.words as u64),
            characters: self.characters,
            words: self.words,
            errors: self.errors,
        }
    }
}

/// Scores `model` on held-out pairs aligned with `table`.
pub fn evaluate(model: &TranslitModel, heldout: &Corpus, table: &MappingTable) -> Result<EvalReport, PipelineError> {
    check_table(table, model.direction)?;
    if model.table_fingerprint != table.fingerprint() {
        return Err(PipelineError::FingerprintMismatch {
            model: model.table_fingerprint.clone(),
            table: table.fingerprint(),
        });
    }
    let pairs = heldout.oriented(model.direction);
    let (aligned, failures) = align_corpus(&pairs, table);
    Ok(score(model, &aligned, &failures))
}

fn score(model: &TranslitModel, aligned: &[AlignedPair], failures: &[AlignFailure]) -> EvalReport {
    let mut scorer = Scorer::default();
    for pair in aligned {
        let predicted = predict_segments(model, &pair.source_chars);
        for (p, g) in predicted.iter().zip(&pair.target_segments) {
            scorer.record_char(p, g);
        }
        scorer.record_word(&pair.source(), predicted.concat(), &pair.target());
    }
    for f in failures {
        scorer.record_unaligned(f.source.chars().count());
        scorer.record_word(&f.source, transliterate_word(model, &f.source), &f.target);
    }
    scorer.report()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridCell {
    pub x: usize,
    pub y: usize,
    pub validation_f1: f64,
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub best: WindowSpec,
    pub best_f1: f64,
    /// Every cell, ordered by `(x, y)`.
    pub cells: Vec<GridCell>,
}

impl GridResult {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("x\ty\tvalidation_f1\n");
        for c in &self.cells {
            out.push_str(&format!("{}\t{}\t{}\n", c.x, c.y, c.validation_f1));
        }
        out
    }
}

/// Trains one model per `(x, y)` cell on `train`, scores it on `validation`,
/// and returns the best cell. Ties go to the smallest `x + y`, then the
/// smallest `x`.
pub fn grid_search(
    train: &Corpus,
    validation: &Corpus,
    table: &MappingTable,
    direction: Direction,
    xs: RangeInclusive<usize>,
    ys: RangeInclusive<usize>,
) -> Result<GridResult, PipelineError> {
    check_table(table, direction)?;
    let mut windows = Vec::new();
    for x in xs {
        for y in ys.clone() {
            windows.push(WindowSpec::new(x, y)?);
        }
    }
    let (train_aligned, _) = align_corpus(&train.oriented(direction), table);
    if train_aligned.is_empty() {
        return Err(PipelineError::AllPairsUnalignable(train.len()));
    }
    let (val_aligned, val_failures) = align_corpus(&validation.oriented(direction), table);
    let cells = windows
        .par_iter()
        .map(|&w| {
            let (model, _) = fit_aligned(&train_aligned, w, table, direction)?;
            let report = score(&model, &val_aligned, &val_failures);
            Ok(GridCell { x: w.x, y: w.y, validation_f1: report.char_f1 })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let best = cells
        .iter()
        .copied()
        .reduce(|best, c| {
            let better = c.validation_f1 > best.validation_f1
                || (c.validation_f1 == best.validation_f1 && (c.x + c.y, c.x) < (best.x + best.y, best.x));
            if better {
                c
            } else {
                best
            }
        })
        .expect("grid has at least one cell");
    Ok(GridResult { best: WindowSpec::new(best.x, best.y)?, best_f1: best.validation_f1, cells })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundTripFailure {
    pub word: String,
    pub forward: String,
    pub back: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundTripReport {
    pub total: usize,
    pub recovered: usize,
    /// `recovered / total`; 1.0 for an empty word list.
    pub fraction: f64,
    pub failures: Vec<RoundTripFailure>,
}

/// Runs each word forward and back and reports the words that do not return.
pub fn round_trip_check<S: AsRef<str>>(
    forward: &TranslitModel,
    back: &TranslitModel,
    words: &[S],
) -> Result<RoundTripReport, PipelineError> {
    if forward.direction.reverse() != back.direction {
        return Err(PipelineError::DirectionMismatch { forward: forward.direction, back: back.direction });
    }
    let mut failures = Vec::new();
    for w in words {
        let w = w.as_ref();
        let there = transliterate_word(forward, w);
        let again = transliterate_word(back, &there);
        if again != w {
            failures.push(RoundTripFailure { word: w.to_string(), forward: there, back: again });
        }
    }
    let total = words.len();
    let recovered = total - failures.len();
    let fraction = if total == 0 { 1.0 } else { recovered as f64 / total as f64 };
    Ok(RoundTripReport { total, recovered, fraction, failures })
}
