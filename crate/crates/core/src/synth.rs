//! Rule-generated word pairs.
//!
//! Pseudo-words are assembled in Cyrillic from syllables and converted to
//! Latin by fixed orthography rules, so every label is determined by the
//! immediate neighbours of a character. With at least one character of
//! context on each side, the samples extracted in either direction never
//! conflict.
//!
//! Letters used: the consonants `б в г д ж з к л м н п р т ф х ш қ ғ ч ц`,
//! the vowels `а о у и ў`, word-initial `э`, and the iotated `е я ю ё`.
//! Context rules:
//!
//! * `ц` is `s` at either edge of the word or after a consonant, `ts` after a vowel;
//! * `е` is `ye` at the start of a word or after a vowel, `e` after a consonant;
//! * `я ю ё` are always `ya yu yo`.
//!
//! `с`, `ҳ` and `й` are left out, and `т` never precedes `ц` or `ш`: each
//! of these would make some Latin spelling ambiguous.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::pipeline::Corpus;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("corpus size must be positive")]
    ZeroSize,
    #[error("only {reached} distinct words found after {attempts} attempts")]
    Exhausted { reached: usize, attempts: usize },
}

const CONSONANTS: &[char] =
    &['б', 'в', 'г', 'д', 'ж', 'з', 'к', 'л', 'м', 'н', 'п', 'р', 'т', 'ф', 'х', 'ш', 'қ', 'ғ', 'ч', 'ц', 'ц', 'ц'];
const PLAIN_VOWELS: &[char] = &['а', 'о', 'у', 'и', 'ў', 'а', 'о', 'и'];
const IOTATED: &[char] = &['е', 'я', 'ю', 'ё'];

fn is_vowel(c: char) -> bool {
    matches!(c, 'а' | 'о' | 'у' | 'и' | 'ў' | 'э' | 'е' | 'я' | 'ю' | 'ё')
}

fn plain_latin(c: char) -> &'static str {
    match c {
        'б' => "b",
        'в' => "v",
        'г' => "g",
        'д' => "d",
        'ж' => "j",
        'з' => "z",
        'к' => "k",
        'л' => "l",
        'м' => "m",
        'н' => "n",
        'п' => "p",
        'р' => "r",
        'т' => "t",
        'ф' => "f",
        'х' => "x",
        'ш' => "sh",
        'қ' => "q",
        'ғ' => "g'",
        'ч' => "ch",
        'а' => "a",
        'о' => "o",
        'у' => "u",
        'и' => "i",
        'ў' => "o'",
        'э' => "e",
        'я' => "ya",
        'ю' => "yu",
        'ё' => "yo",
        other => panic!("{other:?} is outside the generator alphabet"),
    }
}

/// Converts a generator word to Latin by the context rules above.
pub fn rule_latin(word: &str) -> String {
    let chars: Vec<char> = word.chars().collect();
    let mut out = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let prev = i.checked_sub(1).map(|p| chars[p]);
        let at_end = i + 1 == chars.len();
        match c {
            'ц' => match prev {
                Some(p) if is_vowel(p) && !at_end => out.push_str("ts"),
                _ => out.push('s'),
            },
            'е' => match prev {
                Some(p) if !is_vowel(p) => out.push('e'),
                _ => out.push_str("ye"),
            },
            other => out.push_str(plain_latin(other)),
        }
    }
    out
}

fn admissible(word: &[char]) -> bool {
    word.windows(2).all(|w| !matches!((w[0], w[1]), ('т', 'ц') | ('т', 'ш') | ('ц', 'ц') | ('ц', 'ш')))
}

fn random_word(rng: &mut ChaCha8Rng) -> Vec<char> {
    let syllables = rng.random_range(1..=3);
    let mut word = Vec::new();
    for s in 0..syllables {
        let onset = if s == 0 { rng.random_bool(0.7) } else { rng.random_bool(0.9) };
        if onset {
            word.push(*CONSONANTS.choose(rng).expect("consonants"));
        }
        let nucleus = if s == 0 && !onset && rng.random_bool(0.25) {
            'э'
        } else if !onset && s > 0 || rng.random_bool(0.25) {
            *IOTATED.choose(rng).expect("iotated")
        } else {
            *PLAIN_VOWELS.choose(rng).expect("vowels")
        };
        word.push(nucleus);
        if rng.random_bool(0.35) {
            word.push(*CONSONANTS.choose(rng).expect("consonants"));
        }
    }
    word
}

/// `size` distinct rule-consistent `(cyrillic, latin)` pairs.
pub fn gen_corpus(size: usize, seed: u64) -> Result<Corpus, SynthError> {
    if size == 0 {
        return Err(SynthError::ZeroSize);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut pairs = Vec::with_capacity(size);
    let max_attempts = size.saturating_mul(200).max(10_000);
    let mut attempts = 0;
    while pairs.len() < size {
        if attempts == max_attempts {
            return Err(SynthError::Exhausted { reached: pairs.len(), attempts });
        }
        attempts += 1;
        let word = random_word(&mut rng);
        if !admissible(&word) {
            continue;
        }
        let cyr: String = word.iter().collect();
        if seen.insert(cyr.clone()) {
            let lat = rule_latin(&cyr);
            pairs.push((cyr, lat));
        }
    }
    Ok(Corpus::new(pairs, format!("synthetic (size {size}, seed {seed})")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aligner::align_corpus;
    use crate::featurizer::{conflicting_windows, extract_samples, WindowSpec};
    use crate::scripts::Direction;

    #[test]
    fn rules() {
        assert_eq!(rule_latin("доцент"), "dotsent");
        assert_eq!(rule_latin("цемент"), "sement");
        assert_eq!(rule_latin("бац"), "bas");
        assert_eq!(rule_latin("ганцо"), "ganso");
        assert_eq!(rule_latin("ебе"), "yebe");
        assert_eq!(rule_latin("оебя"), "oyebya");
        assert_eq!(rule_latin("ғўча"), "g'o'cha");
    }

    #[test]
    fn zero_size_rejected() {
        assert_eq!(gen_corpus(0, 1).unwrap_err(), SynthError::ZeroSize);
    }

    #[test]
    fn deterministic_and_distinct() {
        let a = gen_corpus(300, 5).unwrap();
        assert_eq!(a, gen_corpus(300, 5).unwrap());
        assert_ne!(a.pairs, gen_corpus(300, 6).unwrap().pairs);
        let distinct: HashSet<_> = a.pairs.iter().map(|(c, _)| c).collect();
        assert_eq!(distinct.len(), 300);
        let distinct_lat: HashSet<_> = a.pairs.iter().map(|(_, l)| l).collect();
        assert_eq!(distinct_lat.len(), 300);
    }

    #[test]
    fn tse_rule_cases_appear() {
        let c = gen_corpus(2000, 42).unwrap();
        let after_vowel = c.pairs.iter().find(|(cyr, _)| {
            let v: Vec<char> = cyr.chars().collect();
            v.windows(2).enumerate().any(|(i, w)| is_vowel(w[0]) && w[1] == 'ц' && i + 2 < v.len())
        });
        assert!(after_vowel.unwrap().1.contains("ts"));
        let initial = c.pairs.iter().find(|(cyr, _)| cyr.starts_with('ц')).unwrap();
        assert!(initial.1.starts_with('s'));
    }

    #[test]
    fn conflict_free_in_both_directions() {
        let corpus = gen_corpus(3000, 42).unwrap();
        for dir in [Direction::CyrToLat, Direction::LatToCyr] {
            let (aligned, failed) = align_corpus(&corpus.oriented(dir), dir.bundled_table());
            assert!(failed.is_empty(), "{dir}: {:?}", &failed[..failed.len().min(5)]);
            for (x, y) in [(1, 1), (1, 2), (2, 1), (2, 3), (3, 3)] {
                let w = WindowSpec::new(x, y).unwrap();
                let samples: Vec<_> = aligned.iter().flat_map(|a| extract_samples(a, w)).collect();
                let conflicts = conflicting_windows(&samples);
                assert!(conflicts.is_empty(), "{dir} ({x},{y}): {:?}", &conflicts[..conflicts.len().min(3)]);
            }
        }
    }
}
