//! Character alignment between a source word and its target-script form.
//!
//! The source word is always split into single code points. Each one is
//! assigned a candidate string from the mapping table so that the
//! concatenated candidates spell the target word exactly. Search is
//! depth-first over the table's canonical candidate order (longest first),
//! and the first complete tiling wins.

use std::collections::HashSet;

use thiserror::Error;

use crate::scripts::{Direction, MappingTable, EMPTY_MARK};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignError {
    #[error("no alignment tiles the target (stuck at source position {position})")]
    NoAlignment { position: usize },
    #[error("source character {ch:?} at position {position} has no table entry")]
    UnknownSourceChar { ch: char, position: usize },
    #[error("source word is empty")]
    EmptySource,
}

impl AlignError {
    pub fn position(&self) -> usize {
        match self {
            AlignError::NoAlignment { position } | AlignError::UnknownSourceChar { position, .. } => *position,
            AlignError::EmptySource => 0,
        }
    }
}

/// A source word split into code points, each paired with its target segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedPair {
    pub source_chars: Vec<char>,
    pub target_segments: Vec<String>,
    pub direction: Direction,
}

impl AlignedPair {
    pub fn source(&self) -> String {
        self.source_chars.iter().collect()
    }

    pub fn target(&self) -> String {
        self.target_segments.concat()
    }

    pub fn len(&self) -> usize {
        self.source_chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source_chars.is_empty()
    }

    /// Segments joined by `|`, empty segments rendered as `∅`.
    pub fn render_segments(&self) -> String {
        self.target_segments
            .iter()
            .map(|s| if s.is_empty() { EMPTY_MARK.to_string() } else { s.clone() })
            .collect::<Vec<_>>()
            .join("|")
    }
}

struct Search<'a> {
    source: &'a [char],
    target: &'a str,
    candidates: Vec<&'a [String]>,
    dead: HashSet<(usize, usize)>,
    deepest: usize,
    chosen: Vec<&'a str>,
}

impl<'a> Search<'a> {
    /// `i` indexes source chars, `j` is a byte offset into the target.
    fn run(&mut self, i: usize, j: usize) -> bool {
        if i == self.source.len() {
            return j == self.target.len();
        }
        if self.dead.contains(&(i, j)) {
            return false;
        }
        self.deepest = self.deepest.max(i);
        let rest = &self.target[j..];
        for cand in self.candidates[i] {
            if rest.starts_with(cand.as_str()) {
                self.chosen.push(cand);
                if self.run(i + 1, j + cand.len()) {
                    return true;
                }
                self.chosen.pop();
            }
        }
        self.dead.insert((i, j));
        false
    }
}

/// Aligns `source` with `target` under `table`.
pub fn align_word(source: &str, target: &str, table: &MappingTable) -> Result<AlignedPair, AlignError> {
    let chars: Vec<char> = source.chars().collect();
    if chars.is_empty() {
        return Err(AlignError::EmptySource);
    }
    let mut candidates = Vec::with_capacity(chars.len());
    for (position, &ch) in chars.iter().enumerate() {
        match table.candidates(ch) {
            Some(c) => candidates.push(c),
            None => return Err(AlignError::UnknownSourceChar { ch, position }),
        }
    }
    let mut search = Search {
        source: &chars,
        target,
        candidates,
        dead: HashSet::new(),
        deepest: 0,
        chosen: Vec::with_capacity(chars.len()),
    };
    if search.run(0, 0) {
        let target_segments = search.chosen.iter().map(|s| s.to_string()).collect();
        Ok(AlignedPair { source_chars: chars, target_segments, direction: table.direction() })
    } else {
        Err(AlignError::NoAlignment { position: search.deepest })
    }
}

/// A pair that failed to align, kept as data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignFailure {
    pub source: String,
    pub target: String,
    pub error: AlignError,
}

impl AlignFailure {
    /// `<source><TAB><target><TAB><fail-position>`
    pub fn to_tsv_line(&self) -> String {
        format!("{}\t{}\t{}", self.source, self.target, self.error.position())
    }
}

/// Aligns every pair; failures are collected, never fatal.
pub fn align_corpus<S: AsRef<str>, T: AsRef<str>>(
    pairs: &[(S, T)],
    table: &MappingTable,
) -> (Vec<AlignedPair>, Vec<AlignFailure>) {
    let mut aligned = Vec::with_capacity(pairs.len());
    let mut failures = Vec::new();
    for (s, t) in pairs {
        let (s, t) = (s.as_ref(), t.as_ref());
        match align_word(s, t, table) {
            Ok(a) => aligned.push(a),
            Err(error) => failures.push(AlignFailure { source: s.to_string(), target: t.to_string(), error }),
        }
    }
    (aligned, failures)
}
