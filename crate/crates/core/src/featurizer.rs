//! Context-window samples built from alignments.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aligner::AlignedPair;
use crate::scripts::EMPTY_MARK;

pub const MAX_CONTEXT: usize = 10;

/// How PAD is written in model files.
pub const PAD_TOKEN: &str = "∅-PAD";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("window ({x}, {y}) outside 0..={MAX_CONTEXT}")]
pub struct WindowError {
    pub x: usize,
    pub y: usize,
}

/// Number of preceding (`x`) and subsequent (`y`) characters in a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WindowSpec {
    pub x: usize,
    pub y: usize,
}

impl WindowSpec {
    pub fn new(x: usize, y: usize) -> Result<Self, WindowError> {
        if x > MAX_CONTEXT || y > MAX_CONTEXT {
            return Err(WindowError { x, y });
        }
        Ok(WindowSpec { x, y })
    }

    pub fn width(&self) -> usize {
        self.x + 1 + self.y
    }
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec { x: 2, y: 3 }
    }
}

/// A feature value: a character, or padding outside the word.
///
/// PAD sorts before every character.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Pad,
    Char(char),
}

impl Symbol {
    /// Model-file encoding.
    pub fn encode(&self) -> String {
        match self {
            Symbol::Pad => PAD_TOKEN.to_string(),
            Symbol::Char(c) => c.to_string(),
        }
    }

    pub fn decode(s: &str) -> Option<Symbol> {
        if s == PAD_TOKEN {
            return Some(Symbol::Pad);
        }
        let mut it = s.chars();
        match (it.next(), it.next()) {
            (Some(c), None) => Some(Symbol::Char(c)),
            _ => None,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Pad => write!(f, "{EMPTY_MARK}"),
            Symbol::Char(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sample {
    pub features: Vec<Symbol>,
    pub label: String,
}

impl Sample {
    /// `features|joined<TAB>label`, with `∅` for the empty label.
    pub fn to_tsv_line(&self) -> String {
        let feats: Vec<String> = self.features.iter().map(Symbol::to_string).collect();
        let label = if self.label.is_empty() { EMPTY_MARK.to_string() } else { self.label.clone() };
        format!("{}\t{}", feats.join("|"), label)
    }
}

/// The window around `chars[i]`.
pub fn window_features(chars: &[char], i: usize, window: WindowSpec) -> Vec<Symbol> {
    let mut out = Vec::with_capacity(window.width());
    for k in 0..window.width() {
        let pos = i as isize + k as isize - window.x as isize;
        out.push(if pos < 0 || pos as usize >= chars.len() { Symbol::Pad } else { Symbol::Char(chars[pos as usize]) });
    }
    out
}

/// One sample per source character, in word order.
pub fn extract_samples(pair: &AlignedPair, window: WindowSpec) -> Vec<Sample> {
    (0..pair.source_chars.len())
        .map(|i| Sample {
            features: window_features(&pair.source_chars, i, window),
            label: pair.target_segments[i].clone(),
        })
        .collect()
}

/// Drops exact `(features, label)` repeats, keeping first occurrences.
pub fn dedup_samples(samples: Vec<Sample>) -> Vec<Sample> {
    let mut seen = HashSet::with_capacity(samples.len());
    samples.into_iter().filter(|s| seen.insert(s.clone())).collect()
}

/// Feature vectors that occur with more than one label.
pub fn conflicting_windows(samples: &[Sample]) -> Vec<(Vec<Symbol>, Vec<String>)> {
    use std::collections::BTreeMap;
    let mut by_features: BTreeMap<&[Symbol], Vec<&str>> = BTreeMap::new();
    for s in samples {
        let labels = by_features.entry(&s.features).or_default();
        if !labels.contains(&s.label.as_str()) {
            labels.push(&s.label);
        }
    }
    by_features
        .into_iter()
        .filter(|(_, labels)| labels.len() > 1)
        .map(|(f, mut labels)| {
            labels.sort();
            (f.to_vec(), labels.into_iter().map(str::to_string).collect())
        })
        .collect()
}
