//! Binary decision tree over categorical character features.
//!
//! Internal nodes test `features[feature] == symbol`. Splits are chosen by
//! Gini impurity decrease, the tree grows without a depth limit, and a node
//! becomes a leaf only when it is pure or every feature is constant over its
//! samples. Labels are strings; the empty string is an ordinary class.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::featurizer::{Sample, Symbol};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("sample {index} has {found} features, expected {expected}")]
    InconsistentFeatureWidth { index: usize, expected: usize, found: usize },
    #[error("feature vector has width {found}, model expects {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("class counts are empty")]
    EmptyCounts,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeNode {
    Split {
        feature: usize,
        symbol: Symbol,
        /// Taken when `features[feature] == symbol`.
        equal: Box<TreeNode>,
        otherwise: Box<TreeNode>,
    },
    Leaf {
        counts: BTreeMap<String, usize>,
        prediction: String,
    },
}

impl TreeNode {
    /// Builds a leaf whose prediction is the majority label, ties going to
    /// the lexicographically smallest label.
    pub fn leaf(counts: BTreeMap<String, usize>) -> TreeNode {
        let prediction = majority(&counts).unwrap_or_default();
        TreeNode::Leaf { counts, prediction }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { equal, otherwise, .. } => 1 + equal.depth().max(otherwise.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { equal, otherwise, .. } => equal.leaf_count() + otherwise.leaf_count(),
        }
    }

    pub(crate) fn max_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split { feature, equal, otherwise, .. } => {
                Some(*feature).max(equal.max_feature()).max(otherwise.max_feature())
            }
        }
    }
}

fn majority(counts: &BTreeMap<String, usize>) -> Option<String> {
    // BTreeMap iterates labels in ascending order; keep the first maximum.
    let mut best: Option<(&String, usize)> = None;
    for (label, &n) in counts {
        if best.is_none_or(|(_, b)| n > b) {
            best = Some((label, n));
        }
    }
    best.map(|(l, _)| l.clone())
}

/// `1 - Σ p²` over the given class counts.
pub fn gini<I: IntoIterator<Item = usize>>(counts: I) -> Result<f64, TreeError> {
    let counts: Vec<usize> = counts.into_iter().collect();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(TreeError::EmptyCounts);
    }
    let total = total as f64;
    Ok(1.0 - counts.iter().map(|&c| (c as f64 / total).powi(2)).sum::<f64>())
}

/// A chosen equality test and the impurity decrease it achieves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub symbol: Symbol,
    pub decrease: f64,
}

/// Exact score of a split: `Σ l²/n_l + Σ r²/n_r`, kept as a fraction.
///
/// Maximizing it minimizes the weighted Gini impurity of the children.
#[derive(Debug, Clone, Copy)]
struct SplitScore {
    num: u128,
    den: u128,
}

impl SplitScore {
    fn new(sq_left: u128, n_left: u128, sq_right: u128, n_right: u128) -> Self {
        SplitScore { num: sq_left * n_right + sq_right * n_left, den: n_left * n_right }
    }

    fn cmp(&self, other: &SplitScore) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

struct Trainer<'a> {
    features: Vec<&'a [Symbol]>,
    classes: Vec<usize>,
    labels: Vec<String>,
    width: usize,
}

impl Trainer<'_> {
    fn class_counts(&self, idx: &[usize]) -> Vec<u64> {
        let mut counts = vec![0u64; self.labels.len()];
        for &i in idx {
            counts[self.classes[i]] += 1;
        }
        counts
    }

    fn label_counts(&self, counts: &[u64]) -> BTreeMap<String, usize> {
        counts.iter().enumerate().filter(|(_, &n)| n > 0).map(|(c, &n)| (self.labels[c].clone(), n as usize)).collect()
    }

    /// Best split over the samples in `idx`, or `None` when every feature is
    /// constant. Ties go to the lowest feature index, then the lowest symbol.
    fn find_split(&self, idx: &[usize], totals: &[u64]) -> Option<(usize, Symbol)> {
        let n = idx.len() as u128;
        let n_classes = self.labels.len();
        let mut best: Option<(SplitScore, usize, Symbol)> = None;
        let mut slots: HashMap<Symbol, usize> = HashMap::new();
        let mut table: Vec<u64> = Vec::new();
        let mut symbols: Vec<Symbol> = Vec::new();
        for f in 0..self.width {
            slots.clear();
            table.clear();
            symbols.clear();
            for &i in idx {
                let sym = self.features[i][f];
                let slot = *slots.entry(sym).or_insert_with(|| {
                    symbols.push(sym);
                    table.extend(std::iter::repeat_n(0, n_classes));
                    symbols.len() - 1
                });
                table[slot * n_classes + self.classes[i]] += 1;
            }
            if symbols.len() < 2 {
                continue;
            }
            let mut order: Vec<usize> = (0..symbols.len()).collect();
            order.sort_by_key(|&s| symbols[s]);
            for s in order {
                let left = &table[s * n_classes..(s + 1) * n_classes];
                let n_left: u64 = left.iter().sum();
                let n_right = n as u64 - n_left;
                let (mut sq_l, mut sq_r) = (0u128, 0u128);
                for (l, t) in left.iter().zip(totals) {
                    sq_l += (*l as u128).pow(2);
                    sq_r += ((t - l) as u128).pow(2);
                }
                let score = SplitScore::new(sq_l, n_left as u128, sq_r, n_right as u128);
                if best.as_ref().is_none_or(|(b, _, _)| score.cmp(b) == Ordering::Greater) {
                    best = Some((score, f, symbols[s]));
                }
            }
        }
        best.map(|(_, f, s)| (f, s))
    }

    fn grow(&self, idx: Vec<usize>) -> TreeNode {
        let totals = self.class_counts(&idx);
        let present = totals.iter().filter(|&&c| c > 0).count();
        if present <= 1 {
            return TreeNode::leaf(self.label_counts(&totals));
        }
        match self.find_split(&idx, &totals) {
            None => TreeNode::leaf(self.label_counts(&totals)),
            Some((feature, symbol)) => {
                let (eq, ne): (Vec<usize>, Vec<usize>) =
                    idx.into_iter().partition(|&i| self.features[i][feature] == symbol);
                TreeNode::Split { feature, symbol, equal: Box::new(self.grow(eq)), otherwise: Box::new(self.grow(ne)) }
            }
        }
    }
}

fn check_widths(samples: &[Sample]) -> Result<usize, TreeError> {
    let first = samples.first().ok_or(TreeError::EmptyTrainingSet)?;
    let width = first.features.len();
    for (index, s) in samples.iter().enumerate() {
        if s.features.len() != width {
            return Err(TreeError::InconsistentFeatureWidth { index, expected: width, found: s.features.len() });
        }
    }
    Ok(width)
}

fn trainer(samples: &[Sample], width: usize) -> Trainer<'_> {
    let mut labels: Vec<String> = samples.iter().map(|s| s.label.clone()).collect();
    labels.sort();
    labels.dedup();
    let classes = samples.iter().map(|s| labels.binary_search(&s.label).expect("label indexed")).collect();
    Trainer { features: samples.iter().map(|s| s.features.as_slice()).collect(), classes, labels, width }
}

/// The split the trainer would make at a node holding `samples`.
pub fn best_split(samples: &[Sample]) -> Result<Option<SplitChoice>, TreeError> {
    let width = check_widths(samples)?;
    let t = trainer(samples, width);
    let idx: Vec<usize> = (0..samples.len()).collect();
    let totals = t.class_counts(&idx);
    let Some((feature, symbol)) = t.find_split(&idx, &totals) else {
        return Ok(None);
    };
    let (eq, ne): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| t.features[i][feature] == symbol);
    let n = samples.len() as f64;
    let g = |ix: &[usize]| gini(t.class_counts(ix).into_iter().map(|c| c as usize)).unwrap();
    let decrease = g(&idx) - (eq.len() as f64 / n) * g(&eq) - (ne.len() as f64 / n) * g(&ne);
    Ok(Some(SplitChoice { feature, symbol, decrease }))
}

/// A trained tree together with the feature width it expects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub width: usize,
}

impl DecisionTree {
    pub fn fit(samples: &[Sample]) -> Result<DecisionTree, TreeError> {
        let width = check_widths(samples)?;
        let t = trainer(samples, width);
        let root = t.grow((0..samples.len()).collect());
        Ok(DecisionTree { root, width })
    }

    pub fn predict(&self, features: &[Symbol]) -> Result<&str, TreeError> {
        if features.len() != self.width {
            return Err(TreeError::WidthMismatch { expected: self.width, found: features.len() });
        }
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { prediction, .. } => return Ok(prediction),
                TreeNode::Split { feature, symbol, equal, otherwise } => {
                    node = if features[*feature] == *symbol { equal } else { otherwise };
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(f: &str, label: &str) -> Sample {
        Sample { features: f.chars().map(Symbol::Char).collect(), label: label.into() }
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini([5]).unwrap(), 0.0);
        assert_eq!(gini([1, 1]).unwrap(), 0.5);
        assert_eq!(gini([3, 1]).unwrap(), 0.375);
        assert_eq!(gini([0, 0]), Err(TreeError::EmptyCounts));
        assert_eq!(gini(Vec::<usize>::new()), Err(TreeError::EmptyCounts));
    }

    #[test]
    fn single_sample_is_a_leaf() {
        let t = DecisionTree::fit(&[sample("f", "b")]).unwrap();
        assert!(matches!(t.root, TreeNode::Leaf { ref prediction, .. } if prediction == "b"));
        assert_eq!(t.predict(&[Symbol::Char('z')]).unwrap(), "b");
    }

    #[test]
    fn unsplittable_node_takes_majority() {
        let t = DecisionTree::fit(&[sample("f", "a"), sample("f", "a"), sample("f", "b")]).unwrap();
        assert_eq!(t.root.leaf_count(), 1);
        assert_eq!(t.predict(&[Symbol::Char('f')]).unwrap(), "a");
    }

    #[test]
    fn majority_ties_go_to_smallest_label() {
        let t = DecisionTree::fit(&[sample("f", "рь"), sample("f", "р")]).unwrap();
        assert_eq!(t.predict(&[Symbol::Char('f')]).unwrap(), "р");
        let t = DecisionTree::fit(&[sample("f", "a"), sample("f", "")]).unwrap();
        assert_eq!(t.predict(&[Symbol::Char('f')]).unwrap(), "");
    }

    #[test]
    fn xor_is_fit_despite_zero_first_gain() {
        let data = [sample("aa", "0"), sample("ab", "1"), sample("ba", "1"), sample("bb", "0")];
        let t = DecisionTree::fit(&data).unwrap();
        for s in &data {
            assert_eq!(t.predict(&s.features).unwrap(), s.label);
        }
    }

    #[test]
    fn errors() {
        assert_eq!(DecisionTree::fit(&[]), Err(TreeError::EmptyTrainingSet));
        assert_eq!(
            DecisionTree::fit(&[sample("ab", "x"), sample("a", "y")]),
            Err(TreeError::InconsistentFeatureWidth { index: 1, expected: 2, found: 1 })
        );
        let t = DecisionTree::fit(&[sample("ab", "x")]).unwrap();
        assert_eq!(t.predict(&[Symbol::Pad]), Err(TreeError::WidthMismatch { expected: 2, found: 1 }));
    }

    #[test]
    fn split_tie_break_prefers_lowest_feature_then_symbol() {
        // both features separate the classes perfectly
        let data = [sample("xa", "1"), sample("yb", "2")];
        let s = best_split(&data).unwrap().unwrap();
        assert_eq!((s.feature, s.symbol), (0, Symbol::Char('x')));
        assert_eq!(s.decrease, 0.5);
    }

    #[test]
    fn unseen_symbols_follow_the_false_branch() {
        let data = [sample("a", "1"), sample("b", "2")];
        let t = DecisionTree::fit(&data).unwrap();
        let TreeNode::Split { symbol, otherwise, .. } = &t.root else { panic!() };
        let TreeNode::Leaf { prediction, .. } = otherwise.as_ref() else { panic!() };
        assert_eq!(*symbol, Symbol::Char('a'));
        assert_eq!(t.predict(&[Symbol::Char('q')]).unwrap(), prediction);
    }

    proptest! {
        #[test]
        fn conflict_free_data_is_fit_exactly(raw in proptest::collection::vec(("[abc∅]{3}", 0u8..4), 1..60)) {
            let mut seen = std::collections::HashMap::new();
            let data: Vec<Sample> = raw
                .into_iter()
                .filter(|(f, l)| *seen.entry(f.clone()).or_insert(*l) == *l)
                .map(|(f, l)| sample(&f, &l.to_string()))
                .collect();
            let t = DecisionTree::fit(&data).unwrap();
            for s in &data {
                prop_assert_eq!(t.predict(&s.features).unwrap(), s.label.as_str());
            }
        }

        #[test]
        fn training_is_deterministic(raw in proptest::collection::vec(("[abc]{2}", 0u8..3), 1..40)) {
            let data: Vec<Sample> = raw.iter().map(|(f, l)| sample(f, &l.to_string())).collect();
            prop_assert_eq!(DecisionTree::fit(&data).unwrap(), DecisionTree::fit(&data).unwrap());
        }
    }
}
