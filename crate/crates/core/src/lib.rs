//! Character-level transliteration between the Cyrillic and Latin Uzbek
//! alphabets, learned from a parallel word list.
//!
//! The pipeline aligns each source character of a word pair with a
//! (possibly empty) target substring, turns every aligned character into a
//! fixed-width context window, and fits a decision tree that maps windows to
//! target substrings. Transliterating a word predicts one substring per
//! character and concatenates them.
//!
//! ```
//! use translit::{pipeline, Corpus, Direction, WindowSpec};
//!
//! let corpus = Corpus::bundled_lexicon();
//! let dir = Direction::CyrToLat;
//! let model = pipeline::train_direction(&corpus, WindowSpec::default(), dir.bundled_table(), dir)
//!     .unwrap()
//!     .model;
//! assert_eq!(pipeline::transliterate_word(&model, "цирк"), "sirk");
//! ```

pub mod aligner;
pub mod dtree;
pub mod featurizer;
pub mod model;
pub mod pipeline;
pub mod scripts;
pub mod synth;

pub use aligner::{align_corpus, align_word, AlignError, AlignedPair};
pub use dtree::{DecisionTree, TreeNode};
pub use featurizer::{Sample, Symbol, WindowSpec};
pub use model::TranslitModel;
pub use pipeline::{Corpus, EvalReport, SplitConfig};
pub use scripts::{Direction, MappingTable, NormalizationPolicy, ScriptSpec};
