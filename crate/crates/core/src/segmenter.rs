//! Top-down segmentation over a parse tree, followed by an interval DP that
//! re-merges over-split runs when that lowers total entropy.

use std::sync::Arc;

use rayon::prelude::*;

use crate::baselines::{fallback_tree, FallbackStrategy};
use crate::error::{Error, Result};
use crate::metrics::CorpusTokenStats;
use crate::model::TokenizerModel;
use crate::tree::{validate_tree, ParseNode};
use crate::treeio::TreeBank;
use crate::vocab::{EntropyTable, Vocabulary};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentationResult {
    pub tokens: Vec<String>,
    /// Emitted tokens that are not vocabulary entries.
    pub unk_count: usize,
    /// Top-down output before post-merge, kept for diagnostics.
    pub pre_merge_tokens: Vec<String>,
}

/// Walks the tree from the root and emits the first vocabulary hit on each
/// branch. Leaves missing from the vocabulary are emitted as-is.
pub fn top_down_tokenize(tree: &ParseNode, vocab: &Vocabulary) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut stack = vec![tree];
    while let Some(node) = stack.pop() {
        if vocab.contains(&node.token) {
            tokens.push(node.token.clone());
        } else if let Some((left, right)) = node.children() {
            stack.push(right);
            stack.push(left);
        } else {
            tokens.push(node.token.clone());
        }
    }
    tokens
}

/// Minimum-entropy re-merging of a token sequence.
///
/// Any contiguous run may be replaced by its concatenation when that string
/// has an entry in `entropies`. Emitted tokens cost their entropy, or the
/// table's UNK cost when they have no finite entry. Ties prefer splitting,
/// and among equal splits the last split point wins.
pub fn post_merge(tokens: &[String], entropies: &EntropyTable) -> Vec<String> {
    let n = tokens.len();
    if n <= 1 {
        return tokens.to_vec();
    }
    let idx = |i: usize, j: usize| i * n + j;
    let mut best = vec![f64::INFINITY; n * n];
    // `None` marks a merged interval, `Some(k)` a split after position k.
    let mut split: Vec<Option<usize>> = vec![None; n * n];
    for (i, t) in tokens.iter().enumerate() {
        best[idx(i, i)] = entropies.emitted_cost(t);
    }
    let mut merged = String::new();
    for h in 1..n {
        for i in 0..n - h {
            let j = i + h;
            merged.clear();
            for t in &tokens[i..=j] {
                merged.push_str(t);
            }
            let mut h_best = entropies.get(&merged);
            let mut k_best = None;
            for k in i..j {
                let cand = best[idx(i, k)] + best[idx(k + 1, j)];
                if cand <= h_best {
                    k_best = Some(k);
                    h_best = cand;
                }
            }
            best[idx(i, j)] = h_best;
            split[idx(i, j)] = k_best;
        }
    }
    let mut out = Vec::with_capacity(n);
    let mut stack = vec![(0, n - 1)];
    while let Some((i, j)) = stack.pop() {
        if i == j {
            out.push(tokens[i].clone());
            continue;
        }
        match split[idx(i, j)] {
            Some(k) => {
                stack.push((k + 1, j));
                stack.push((i, k));
            }
            None => out.push(tokens[i..=j].concat()),
        }
    }
    out
}

fn segment(model: &TokenizerModel, tree: &ParseNode) -> SegmentationResult {
    let pre_merge_tokens = top_down_tokenize(tree, &model.vocabulary);
    let tokens = post_merge(&pre_merge_tokens, &model.entropies);
    let unk_count = tokens.iter().filter(|t| !model.vocabulary.contains(t)).count();
    SegmentationResult {
        tokens,
        unk_count,
        pre_merge_tokens,
    }
}

/// Cached top-down tokenization with post-merge.
pub fn tokenize_word(model: &TokenizerModel, word: &str, tree: &ParseNode) -> Result<Arc<SegmentationResult>> {
    if let Some(hit) = model.cache.get(word) {
        return Ok(hit);
    }
    validate_tree(tree, word)?;
    let result = Arc::new(segment(model, tree));
    model.cache.insert(word, Arc::clone(&result));
    Ok(result)
}

/// Same as [`tokenize_word`] but never consults or fills the cache.
pub fn tokenize_word_uncached(model: &TokenizerModel, word: &str, tree: &ParseNode) -> Result<SegmentationResult> {
    validate_tree(tree, word)?;
    Ok(segment(model, tree))
}

/// Where trees come from when tokenizing running text.
#[derive(Debug, Clone, Copy)]
pub struct TreeSource<'a> {
    pub bank: &'a TreeBank,
    /// Used for words absent from `bank`; `None` makes them an error.
    pub fallback: Option<FallbackStrategy>,
}

impl TreeSource<'_> {
    fn with_tree<T>(&self, word: &str, f: impl FnOnce(&ParseNode) -> Result<T>) -> Result<T> {
        if let Some(tree) = self.bank.get(word) {
            return f(tree);
        }
        match self.fallback.and_then(|s| fallback_tree(word, s)) {
            Some(tree) => f(&tree),
            None => Err(Error::MissingTree(word.to_owned())),
        }
    }
}

/// Tokenizes every sentence. Output order follows input order.
pub fn tokenize_corpus(
    model: &TokenizerModel,
    trees: TreeSource<'_>,
    sentences: &[Vec<String>],
) -> Result<(Vec<Vec<String>>, CorpusTokenStats)> {
    let per_sentence: Vec<(Vec<String>, usize)> = sentences
        .par_iter()
        .map(|sentence| {
            let mut tokens = Vec::new();
            let mut unk = 0;
            for word in sentence {
                let seg = trees.with_tree(word, |tree| tokenize_word(model, word, tree))?;
                tokens.extend(seg.tokens.iter().cloned());
                unk += seg.unk_count;
            }
            Ok((tokens, unk))
        })
        .collect::<Result<_>>()?;
    let mut stats = CorpusTokenStats::default();
    let mut stream = Vec::with_capacity(per_sentence.len());
    for (tokens, unk) in per_sentence {
        stats.record(tokens.len(), unk);
        stream.push(tokens);
    }
    Ok((stream, stats))
}
