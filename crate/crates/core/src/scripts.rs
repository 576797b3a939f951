//! Alphabets, input normalization, and the character mapping tables that
//! seed alignment.
//!
//! Both scripts ship as data files under `data/` and are embedded at build
//! time. A [`MappingTable`] lists, for every source code point, the target
//! strings it may align with. The Latin side writes some letters as two code
//! points (`sh`, `o'`), but tables are always keyed by single code points.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::aligner::{self, AlignError};

pub const CYRILLIC_LETTERS: &str = include_str!("../data/cyrillic.letters");
pub const LATIN_LETTERS: &str = include_str!("../data/latin.letters");
pub const CYR2LAT_TABLE: &str = include_str!("../data/cyr2lat.table");
pub const LAT2CYR_TABLE: &str = include_str!("../data/lat2cyr.table");

/// Renders the empty target string in table files and reports.
pub const EMPTY_MARK: char = '∅';

pub const CANONICAL_APOSTROPHE: char = '\'';

/// Code points folded to [`CANONICAL_APOSTROPHE`] by the default policy.
pub const APOSTROPHE_VARIANTS: [char; 7] =
    ['\u{0027}', '\u{2018}', '\u{2019}', '\u{0060}', '\u{00B4}', '\u{02BB}', '\u{02BC}'];

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate key {key:?}")]
    DuplicateKey { line: usize, key: char },
    #[error("line {line}: key {key:?} is not a single character")]
    NonSingleCharKey { line: usize, key: String },
    #[error("line {line}: duplicate letter {letter:?}")]
    DuplicateLetter { line: usize, letter: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Which script is the source and which the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "cyr2lat")]
    CyrToLat,
    #[serde(rename = "lat2cyr")]
    LatToCyr,
}

impl Direction {
    pub fn reverse(self) -> Direction {
        match self {
            Direction::CyrToLat => Direction::LatToCyr,
            Direction::LatToCyr => Direction::CyrToLat,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::CyrToLat => "cyr2lat",
            Direction::LatToCyr => "lat2cyr",
        }
    }

    /// The bundled alphabet of the source side.
    pub fn source_script(self) -> &'static ScriptSpec {
        match self {
            Direction::CyrToLat => ScriptSpec::cyrillic(),
            Direction::LatToCyr => ScriptSpec::latin(),
        }
    }

    /// The bundled mapping table for this direction.
    pub fn bundled_table(self) -> &'static MappingTable {
        use std::sync::OnceLock;
        static CYR2LAT: OnceLock<MappingTable> = OnceLock::new();
        static LAT2CYR: OnceLock<MappingTable> = OnceLock::new();
        match self {
            Direction::CyrToLat => {
                CYR2LAT.get_or_init(|| MappingTable::parse(CYR2LAT_TABLE, self).expect("bundled cyr2lat table"))
            }
            Direction::LatToCyr => {
                LAT2CYR.get_or_init(|| MappingTable::parse(LAT2CYR_TABLE, self).expect("bundled lat2cyr table"))
            }
        }
    }

    /// Orients a `(cyrillic, latin)` pair as `(source, target)`.
    pub fn orient<'a>(self, cyrillic: &'a str, latin: &'a str) -> (&'a str, &'a str) {
        match self {
            Direction::CyrToLat => (cyrillic, latin),
            Direction::LatToCyr => (latin, cyrillic),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cyr2lat" => Ok(Direction::CyrToLat),
            "lat2cyr" => Ok(Direction::LatToCyr),
            other => Err(format!("unknown direction {other:?} (expected cyr2lat or lat2cyr)")),
        }
    }
}

/// An alphabet: ordered letters, each one or two code points, with case pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptSpec {
    pub name: String,
    /// Lowercase letters in alphabet order.
    pub letters: Vec<String>,
    /// `(uppercase, lowercase)` pairs, same order as `letters`.
    pub case_pairs: Vec<(String, String)>,
}

impl ScriptSpec {
    /// Parses the letter file format: one letter per line, uppercase and
    /// lowercase separated by TAB, `#` comment lines.
    pub fn parse(name: &str, text: &str) -> Result<Self, ScriptError> {
        let mut letters = Vec::new();
        let mut case_pairs = Vec::new();
        let mut seen = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let (upper, lower) = raw
                .split_once('\t')
                .ok_or_else(|| ScriptError::Parse { line, message: "expected <uppercase><TAB><lowercase>".into() })?;
            let upper: String = upper.nfc().collect();
            let lower: String = lower.nfc().collect();
            if lower.is_empty() || lower.chars().count() > 2 || upper.is_empty() {
                return Err(ScriptError::Parse {
                    line,
                    message: format!("letter {lower:?} must be one or two code points"),
                });
            }
            if !seen.insert(lower.clone()) {
                return Err(ScriptError::DuplicateLetter { line, letter: lower });
            }
            letters.push(lower.clone());
            case_pairs.push((upper, lower));
        }
        Ok(ScriptSpec { name: name.to_string(), letters, case_pairs })
    }

    pub fn cyrillic() -> &'static ScriptSpec {
        use std::sync::OnceLock;
        static SPEC: OnceLock<ScriptSpec> = OnceLock::new();
        SPEC.get_or_init(|| ScriptSpec::parse("cyrillic", CYRILLIC_LETTERS).expect("bundled alphabet"))
    }

    pub fn latin() -> &'static ScriptSpec {
        use std::sync::OnceLock;
        static SPEC: OnceLock<ScriptSpec> = OnceLock::new();
        SPEC.get_or_init(|| ScriptSpec::parse("latin", LATIN_LETTERS).expect("bundled alphabet"))
    }

    /// Every code point used by some letter, plus the hyphen.
    pub fn code_points(&self) -> BTreeSet<char> {
        let mut set: BTreeSet<char> = self.letters.iter().flat_map(|l| l.chars()).collect();
        set.insert('-');
        set
    }

    pub fn contains_char(&self, c: char) -> bool {
        c == '-' || self.letters.iter().any(|l| l.contains(c))
    }
}

/// How raw input is cleaned before it reaches the aligner or a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizationPolicy {
    pub apostrophe_variants: BTreeSet<char>,
    pub case_folding: bool,
}

impl Default for NormalizationPolicy {
    fn default() -> Self {
        NormalizationPolicy { apostrophe_variants: APOSTROPHE_VARIANTS.into_iter().collect(), case_folding: true }
    }
}

/// NFC, apostrophe folding, and (optionally) lowercasing.
pub fn normalize_word(word: &str, policy: &NormalizationPolicy) -> String {
    let folded: String =
        word.nfc().map(|c| if policy.apostrophe_variants.contains(&c) { CANONICAL_APOSTROPHE } else { c }).collect();
    let cased = if policy.case_folding { folded.to_lowercase() } else { folded };
    cased.nfc().collect()
}

/// Per source code point, the ordered target strings it may align with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingTable {
    direction: Direction,
    entries: BTreeMap<char, Vec<String>>,
}

/// Descending length (in code points), then code-point order.
fn canonical_order(a: &String, b: &String) -> std::cmp::Ordering {
    b.chars().count().cmp(&a.chars().count()).then_with(|| a.cmp(b))
}

impl MappingTable {
    /// Builds a table, putting every candidate list in canonical order.
    ///
    /// Empty or duplicated candidate lists are rejected.
    pub fn from_entries(
        direction: Direction,
        entries: impl IntoIterator<Item = (char, Vec<String>)>,
    ) -> Result<Self, ScriptError> {
        let mut map = BTreeMap::new();
        for (i, (key, mut candidates)) in entries.into_iter().enumerate() {
            if candidates.is_empty() {
                return Err(ScriptError::Parse { line: i + 1, message: format!("no candidates for {key:?}") });
            }
            candidates.sort_by(canonical_order);
            if candidates.windows(2).any(|w| w[0] == w[1]) {
                return Err(ScriptError::Parse { line: i + 1, message: format!("duplicate candidate for {key:?}") });
            }
            if map.insert(key, candidates).is_some() {
                return Err(ScriptError::DuplicateKey { line: i + 1, key });
            }
        }
        Ok(MappingTable { direction, entries: map })
    }

    /// Parses the table file format.
    pub fn parse(text: &str, direction: Direction) -> Result<Self, ScriptError> {
        let mut entries: BTreeMap<char, Vec<String>> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let (key, rest) = raw.split_once('\t').ok_or_else(|| ScriptError::Parse {
                line,
                message: "expected <source-char><TAB><candidates>".into(),
            })?;
            let key: String = key.nfc().collect();
            let mut chars = key.chars();
            let key = match (chars.next(), chars.next()) {
                (Some(c), None) => c,
                _ => return Err(ScriptError::NonSingleCharKey { line, key }),
            };
            if entries.contains_key(&key) {
                return Err(ScriptError::DuplicateKey { line, key });
            }
            let mut candidates = Vec::new();
            for cand in rest.split(',') {
                let cand = cand.trim();
                if cand.is_empty() {
                    return Err(ScriptError::Parse {
                        line,
                        message: "empty candidate (write ∅ for the empty string)".into(),
                    });
                }
                let cand: String = if cand == EMPTY_MARK.to_string() { String::new() } else { cand.nfc().collect() };
                if candidates.contains(&cand) {
                    return Err(ScriptError::Parse { line, message: format!("duplicate candidate {cand:?}") });
                }
                candidates.push(cand);
            }
            candidates.sort_by(canonical_order);
            entries.insert(key, candidates);
        }
        Ok(MappingTable { direction, entries })
    }

    /// Reads a table file from disk.
    pub fn load(path: &Path, direction: Direction) -> Result<Self, ScriptError> {
        let text =
            fs::read_to_string(path).map_err(|source| ScriptError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text, direction)
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn candidates(&self, c: char) -> Option<&[String]> {
        self.entries.get(&c).map(Vec::as_slice)
    }

    pub fn entries(&self) -> impl Iterator<Item = (char, &[String])> {
        self.entries.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Serializes back to the file format, keys sorted.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, cands) in &self.entries {
            out.push(*key);
            out.push('\t');
            let rendered: Vec<String> =
                cands.iter().map(|c| if c.is_empty() { EMPTY_MARK.to_string() } else { c.clone() }).collect();
            out.push_str(&rendered.join(","));
            out.push('\n');
        }
        out
    }

    /// SHA-256 over the direction and canonical text form, lowercase hex.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.direction.as_str().as_bytes());
        hasher.update(b"\n");
        hasher.update(self.to_text().as_bytes());
        format!("{:x}", hasher.finalize())
    }

    /// A copy with `candidate` removed from `key`'s list; the key is dropped
    /// when its list becomes empty.
    pub fn without_candidate(&self, key: char, candidate: &str) -> MappingTable {
        let mut entries = self.entries.clone();
        if let Some(list) = entries.get_mut(&key) {
            list.retain(|c| c != candidate);
            if list.is_empty() {
                entries.remove(&key);
            }
        }
        MappingTable { direction: self.direction, entries }
    }
}

/// A word pair the current table cannot align.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnmappedPair {
    pub source: String,
    pub target: String,
    /// Deepest source index at which every candidate failed.
    pub position: usize,
}

impl UnmappedPair {
    pub fn to_tsv_line(&self) -> String {
        format!("{}\t{}\t{}", self.source, self.target, self.position)
    }
}

/// Lists every `(source, target)` pair that does not align under `table`.
///
/// An empty result means the table covers the corpus.
pub fn discover_unmapped<S: AsRef<str>, T: AsRef<str>>(pairs: &[(S, T)], table: &MappingTable) -> Vec<UnmappedPair> {
    pairs
        .iter()
        .filter_map(|(s, t)| {
            let (s, t) = (s.as_ref(), t.as_ref());
            match aligner::align_word(s, t, table) {
                Ok(_) => None,
                Err(AlignError::NoAlignment { position }) | Err(AlignError::UnknownSourceChar { position, .. }) => {
                    Some(UnmappedPair { source: s.to_string(), target: t.to_string(), position })
                }
                Err(AlignError::EmptySource) => {
                    Some(UnmappedPair { source: s.to_string(), target: t.to_string(), position: 0 })
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn alphabet_sizes() {
        assert_eq!(ScriptSpec::cyrillic().letters.len(), 35);
        assert_eq!(ScriptSpec::latin().letters.len(), 30);
    }

    #[test]
    fn normalize_examples() {
        let p = NormalizationPolicy::default();
        assert_eq!(normalize_word("o`zbek", &p), "o'zbek");
        assert_eq!(normalize_word("КЎЗИЧОҚ", &p), "кўзичоқ");
        assert_eq!(normalize_word("sirk", &p), "sirk");
        assert_eq!(normalize_word("Oʻzbekiston", &p), "o'zbekiston");
        assert_eq!(normalize_word("g’isht", &p), "g'isht");
    }

    #[test]
    fn normalize_composes_decomposed_cyrillic() {
        let p = NormalizationPolicy::default();
        // е + combining diaeresis, и + combining breve
        assert_eq!(normalize_word("е\u{0308}з", &p), "ёз");
        assert_eq!(normalize_word("и\u{0306}ил", &p), "йил");
    }

    #[test]
    fn normalize_without_case_folding() {
        let p = NormalizationPolicy { case_folding: false, ..Default::default() };
        assert_eq!(normalize_word("O‘zbek", &p), "O'zbek");
    }

    #[test]
    fn table_rows_parse() {
        let t = MappingTable::parse("ч\tch,∅\nб\tb\n", Direction::CyrToLat).unwrap();
        assert_eq!(t.candidates('ч').unwrap(), ["ch", ""]);
        assert_eq!(t.candidates('б').unwrap(), ["b"]);
        let t = MappingTable::parse("ч\tCH, ∅\n", Direction::CyrToLat).unwrap();
        assert_eq!(t.candidates('ч').unwrap(), ["CH", ""]);
    }

    #[test]
    fn table_errors_carry_line_numbers() {
        let err = MappingTable::parse("# c\nа\ta\nа\tya\n", Direction::CyrToLat).unwrap_err();
        assert!(matches!(err, ScriptError::DuplicateKey { line: 3, key: 'а' }), "{err}");
        let err = MappingTable::parse("аб\ta\n", Direction::CyrToLat).unwrap_err();
        assert!(matches!(err, ScriptError::NonSingleCharKey { line: 1, .. }), "{err}");
        let err = MappingTable::parse("\nа a\n", Direction::CyrToLat).unwrap_err();
        assert!(matches!(err, ScriptError::Parse { line: 2, .. }), "{err}");
        let err = MappingTable::parse("а\ta,a\n", Direction::CyrToLat).unwrap_err();
        assert!(matches!(err, ScriptError::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn candidates_sorted_longest_first() {
        let t = MappingTable::parse("s\t∅,ц,сь,с\n", Direction::LatToCyr).unwrap();
        assert_eq!(t.candidates('s').unwrap(), ["сь", "с", "ц", ""]);
    }

    #[test]
    fn bundled_cyr2lat_has_25_single_valued_keys() {
        let t = Direction::CyrToLat.bundled_table();
        assert_eq!(t.len(), 36);
        assert_eq!(t.entries().filter(|(_, c)| c.len() == 1).count(), 25);
    }

    #[test]
    fn bundled_tables_cover_alphabets() {
        for dir in [Direction::CyrToLat, Direction::LatToCyr] {
            let t = dir.bundled_table();
            for c in dir.source_script().code_points() {
                assert!(t.candidates(c).is_some(), "{dir}: no entry for {c:?}");
            }
            assert_eq!(t.candidates('-').unwrap(), ["-"]);
        }
    }

    #[test]
    fn letters_round_trip_through_table_format() {
        for script in [ScriptSpec::cyrillic(), ScriptSpec::latin()] {
            for (upper, lower) in &script.case_pairs {
                let text = if upper == lower { format!("x\t{lower}\n") } else { format!("x\t{lower},{upper}\n") };
                let t = MappingTable::parse(&text, Direction::CyrToLat).unwrap();
                let cands = t.candidates('x').unwrap();
                assert!(cands.contains(lower) && cands.contains(upper), "{lower}");
                let reparsed = MappingTable::parse(&t.to_text(), Direction::CyrToLat).unwrap();
                assert_eq!(reparsed, t);
            }
        }
    }

    #[test]
    fn fingerprint_tracks_content() {
        let t = Direction::CyrToLat.bundled_table();
        assert_eq!(t.fingerprint(), t.clone().fingerprint());
        assert_ne!(t.fingerprint(), t.without_candidate('ц', "s").fingerprint());
        assert_eq!(t.fingerprint().len(), 64);
    }

    #[test]
    fn discover_examples() {
        let full = Direction::CyrToLat.bundled_table();
        let truncated = full.without_candidate('ц', "s");
        let report = discover_unmapped(&[("цирк", "sirk")], &truncated);
        assert_eq!(report, vec![UnmappedPair { source: "цирк".into(), target: "sirk".into(), position: 0 }]);
        assert!(discover_unmapped(&[("бола", "bola")], full).is_empty());
        let empty: [(&str, &str); 0] = [];
        assert!(discover_unmapped(&empty, full).is_empty());
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(word in "\\PC{1,16}") {
            let p = NormalizationPolicy::default();
            let once = normalize_word(&word, &p);
            prop_assert_eq!(normalize_word(&once, &p), once);
        }

        #[test]
        fn normalization_idempotent_on_script_text(word in "[а-яёўқғҳА-ЯЁЎҚҒҲa-zA-Z'`ʻʼ‘’´-]{1,12}") {
            let p = NormalizationPolicy::default();
            let once = normalize_word(&word, &p);
            prop_assert_eq!(normalize_word(&once, &p), once.clone());
            for v in APOSTROPHE_VARIANTS.iter().filter(|c| **c != CANONICAL_APOSTROPHE) {
                prop_assert!(!once.contains(*v));
            }
        }
    }
}
