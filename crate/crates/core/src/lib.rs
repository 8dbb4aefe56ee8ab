//! Tree-constrained subword tokenization.
//!
//! Words are tokenized by walking a binary character-level parse tree from
//! the root and keeping the first vocabulary hit on every branch, then
//! repairing over-split runs with a minimum-entropy merge. The vocabulary is
//! grown from sibling pairs in the trees and pruned by the entropy each token
//! saves under a tree-restricted Viterbi segmentation.
//!
//! ```
//! use arbortok::{parse_tree_expr, tokenize_word, ToolConfig, TokenizerModel, Vocabulary};
//!
//! let vocab = Vocabulary::from_counts([("book", 40), ("e", 30), ("d", 30), ("ed", 40)]);
//! let model = TokenizerModel::new(vocab, ToolConfig::default());
//! let tree = parse_tree_expr("(((b (o (o k))) e) d)").unwrap();
//! let seg = tokenize_word(&model, "booked", &tree).unwrap();
//! assert_eq!(seg.pre_merge_tokens, ["book", "e", "d"]);
//! assert_eq!(seg.tokens, ["book", "ed"]);
//! ```

pub mod baselines;
pub mod builder;
pub mod config;
pub mod error;
pub mod metrics;
pub mod model;
pub mod segmenter;
pub mod tree;
pub mod treeio;
pub mod vocab;

pub use baselines::{bpe_tokenize, bpe_train, fallback_tree, FallbackStrategy, MergeList};
pub use builder::{
    build_vocabulary, count_tree_pairs, e_step, init_vocab, m_step, prune_vocab, tree_viterbi, DeltaLossTable,
    PairCandidates, WeightedTree,
};
pub use config::ToolConfig;
pub use error::{Error, Result, TreeViolation};
pub use metrics::{
    corpus_entropy, corpus_stats, morpheme_recall, renyi_efficiency, segmentation_accuracy, CorpusTokenStats,
    TokenDistribution,
};
pub use model::{TokenCache, TokenizerModel};
pub use segmenter::{post_merge, tokenize_corpus, tokenize_word, top_down_tokenize, SegmentationResult, TreeSource};
pub use tree::{validate_tree, ParseNode};
pub use treeio::{
    load_corpus, load_gold, load_trees, parse_tree_expr, parse_tree_record, serialize_tree, CorpusStats,
    GoldSegmentation, TreeBank, TreeRecord,
};
pub use vocab::{entropy_of, EntropyTable, Vocabulary};
