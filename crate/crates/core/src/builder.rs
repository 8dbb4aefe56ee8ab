//! Tree-constrained vocabulary construction.
//!
//! Construction has two phases. Initialization starts from the character
//! inventory and repeatedly adds the concatenations of sibling subtrees whose
//! children are both already in the vocabulary, as long as they are frequent
//! enough. Pruning then alternates between re-estimating token counts with a
//! minimum-entropy segmentation restricted to tree nodes ([`tree_viterbi`])
//! and removing the tokens whose removal costs the least entropy, until the
//! target size is reached.
//!
//! Single characters are never removed, so every word stays tokenizable.

use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;

use crate::config::ToolConfig;
use crate::error::{Error, Result};
use crate::tree::ParseNode;
use crate::treeio::TreeRecord;
use crate::vocab::{is_character, EntropyTable, Vocabulary};

/// Concatenated sibling pairs and their accumulated frequency.
pub type PairCandidates = HashMap<String, u64>;

/// Accumulated entropy increase caused by removing each token (nats, >= 0).
pub type DeltaLossTable = HashMap<String, f64>;

/// A word's tree weighted by the word's corpus frequency.
pub type WeightedTree = (TreeRecord, u64);

/// Counts candidate merges: internal nodes whose children both resolve to
/// vocabulary entries while the node itself does not.
pub fn count_tree_pairs(trees: &[WeightedTree], vocab: &Vocabulary) -> PairCandidates {
    let mut out = PairCandidates::new();
    for (rec, freq) in trees {
        recur_count(&rec.tree, *freq, vocab, &mut out);
    }
    out
}

fn recur_count(node: &ParseNode, freq: u64, vocab: &Vocabulary, out: &mut PairCandidates) -> bool {
    let Some((left, right)) = node.children() else {
        return true;
    };
    let hit_left = recur_count(left, freq, vocab, out);
    let hit_right = recur_count(right, freq, vocab, out);
    if !(hit_left && hit_right) {
        return false;
    }
    if vocab.contains(&node.token) {
        true
    } else {
        *out.entry(node.token.clone()).or_insert(0) += freq;
        false
    }
}

/// Character frequencies over all trees, weighted by word frequency.
pub fn character_vocab(trees: &[WeightedTree]) -> Vocabulary {
    let mut vocab = Vocabulary::new();
    let mut buf = [0u8; 4];
    for (rec, freq) in trees {
        for c in rec.word.chars() {
            vocab.add(&*c.encode_utf8(&mut buf), *freq);
        }
    }
    vocab
}

/// Grows the character vocabulary with pair candidates seen more than
/// `pair_threshold` times, until a pass adds nothing.
pub fn init_vocab(trees: &[WeightedTree], pair_threshold: u64) -> Vocabulary {
    let mut vocab = character_vocab(trees);
    loop {
        let before = vocab.len();
        let mut accepted: Vec<(String, u64)> = count_tree_pairs(trees, &vocab)
            .into_iter()
            .filter(|&(_, f)| f > pair_threshold)
            .collect();
        accepted.sort_unstable();
        for (token, freq) in accepted {
            vocab.add(token, freq);
        }
        if vocab.len() == before {
            return vocab;
        }
    }
}

/// Minimum-entropy segmentation of the word under `root` using only subtree
/// tokens. A node is kept whole only when its entropy is strictly below the
/// best split of its children.
///
/// When `delta` is given, every internal node adds `max(s_L + s_R - s, 0)`
/// under its token.
pub fn tree_viterbi(
    root: &ParseNode,
    entropies: &EntropyTable,
    delta: Option<&mut DeltaLossTable>,
) -> (f64, Vec<String>) {
    let mut tokens = Vec::new();
    let entropy = match delta {
        Some(d) => viterbi(root, entropies, &mut Some(d), &mut tokens),
        None => viterbi(root, entropies, &mut None, &mut tokens),
    };
    (entropy, tokens.into_iter().map(str::to_owned).collect())
}

fn viterbi<'a>(
    node: &'a ParseNode,
    entropies: &EntropyTable,
    delta: &mut Option<&mut DeltaLossTable>,
    out: &mut Vec<&'a str>,
) -> f64 {
    let own = entropies.get(&node.token);
    let Some((left, right)) = node.children() else {
        out.push(&node.token);
        return own;
    };
    let mark = out.len();
    let split = viterbi(left, entropies, delta, out) + viterbi(right, entropies, delta, out);
    if let Some(d) = delta.as_deref_mut() {
        let gain = split - own;
        // NaN (inf - inf) and negative gains both clamp to zero.
        let gain = if gain > 0.0 { gain } else { 0.0 };
        *d.entry(node.token.clone()).or_insert(0.0) += gain;
    }
    if split > own {
        out.truncate(mark);
        out.push(&node.token);
        own
    } else {
        split
    }
}

fn segment_all<'a>(trees: &'a [WeightedTree], entropies: &EntropyTable) -> Vec<Vec<&'a str>> {
    trees
        .par_iter()
        .map(|(rec, _)| {
            let mut tokens = Vec::new();
            viterbi(&rec.tree, entropies, &mut None, &mut tokens);
            tokens
        })
        .collect()
}

/// Re-estimates counts from tree-Viterbi segmentations. Every entry of
/// `vocab` is kept, with count 0 when never selected.
fn recount(trees: &[WeightedTree], vocab: &Vocabulary) -> Vocabulary {
    let entropies = vocab.entropy_table();
    let segs = segment_all(trees, &entropies);
    let mut counts: HashMap<&str, u64> = vocab.tokens().map(|t| (t, 0)).collect();
    for ((_, freq), seg) in trees.iter().zip(&segs) {
        for token in seg {
            *counts.entry(token).or_insert(0) += freq;
        }
    }
    Vocabulary::from_counts(counts)
}

/// E-step: token counts from tree-Viterbi segmentations weighted by word
/// frequency. Tokens that are never selected are dropped, except single
/// characters, which stay at count 0.
pub fn e_step(trees: &[WeightedTree], vocab: &Vocabulary) -> Vocabulary {
    let mut counts = recount(trees, vocab);
    let dead: Vec<String> = counts
        .iter()
        .filter(|&(t, c)| c == 0 && !is_character(t))
        .map(|(t, _)| t.to_owned())
        .collect();
    for t in dead {
        counts.remove(&t);
    }
    counts
}

/// M-step: for each word, the per-word entropy increase of every token in its
/// segmentation, scaled by the word frequency and summed over the corpus in
/// input order.
pub fn m_step(trees: &[WeightedTree], vocab: &Vocabulary) -> DeltaLossTable {
    let entropies = vocab.entropy_table();
    let partials: Vec<Vec<(&str, f64)>> = trees
        .par_iter()
        .map(|(rec, freq)| {
            let mut word_delta = DeltaLossTable::new();
            let mut seg = Vec::new();
            viterbi(&rec.tree, &entropies, &mut Some(&mut word_delta), &mut seg);
            seg.into_iter()
                .map(|t| (t, word_delta.get(t).copied().unwrap_or(0.0) * *freq as f64))
                .collect()
        })
        .collect();
    let mut table = DeltaLossTable::new();
    for part in partials {
        for (token, loss) in part {
            *table.entry(token.to_owned()).or_insert(0.0) += loss;
        }
    }
    table
}

/// Number of tokens removed in a round at vocabulary size `size`. Always at
/// least one while above target.
pub fn removal_count(size: usize, target: usize, prune_rate: f64) -> usize {
    let by_rate = (prune_rate * size as f64).floor() as usize;
    size.saturating_sub(target).min(by_rate.max(1))
}

/// Alternates E- and M-steps, removing the lowest-delta non-character tokens
/// each round until exactly `target` entries remain. Returned counts are
/// re-estimated against the final vocabulary.
pub fn prune_vocab(
    trees: &[WeightedTree],
    vocab: &Vocabulary,
    target: usize,
    prune_rate: f64,
) -> Result<Vocabulary> {
    prune_vocab_traced(trees, vocab, target, prune_rate, |_| {})
}

/// [`prune_vocab`] that reports the vocabulary size after every round.
pub fn prune_vocab_traced(
    trees: &[WeightedTree],
    vocab: &Vocabulary,
    target: usize,
    prune_rate: f64,
    mut on_round: impl FnMut(usize),
) -> Result<Vocabulary> {
    let characters = vocab.character_count();
    if target < characters {
        return Err(Error::TargetBelowCharacterFloor { target, characters });
    }
    if !(prune_rate > 0.0 && prune_rate < 1.0) {
        return Err(Error::InvalidConfig(format!("prune_rate must lie in (0, 1), got {prune_rate}")));
    }
    let mut current = vocab.clone();
    while current.len() > target {
        // Zero-count entries are kept so that the removal step, not the
        // re-estimation, decides the vocabulary size.
        let counts = recount(trees, &current);
        let delta = m_step(trees, &counts);
        let mut candidates: Vec<(&str, f64, u64)> = counts
            .iter()
            .filter(|(t, _)| !is_character(t))
            .map(|(t, c)| (t, delta.get(t).copied().unwrap_or(0.0), c))
            .collect();
        candidates.sort_unstable_by(|a, b| {
            a.1.partial_cmp(&b.1)
                .unwrap_or(Ordering::Equal)
                .then(a.2.cmp(&b.2))
                .then_with(|| a.0.cmp(b.0))
        });
        let n = removal_count(counts.len(), target, prune_rate).min(candidates.len());
        let doomed: Vec<String> = candidates[..n].iter().map(|c| c.0.to_owned()).collect();
        let mut next = counts.clone();
        for t in &doomed {
            next.remove(t);
        }
        if next.len() == current.len() {
            break;
        }
        current = next;
        on_round(current.len());
    }
    Ok(recount(trees, &current))
}

/// Sorts trees by word and merges duplicate words, so construction does not
/// depend on input order. Zero-frequency entries are dropped.
pub fn canonicalize(trees: &[WeightedTree]) -> Result<Vec<WeightedTree>> {
    let mut merged: std::collections::BTreeMap<&str, (&TreeRecord, u64)> = Default::default();
    for (rec, freq) in trees {
        match merged.get_mut(rec.word.as_str()) {
            Some((existing, f)) => {
                if existing.tree != rec.tree {
                    return Err(Error::DuplicateWord(rec.word.clone()));
                }
                *f += freq;
            }
            None => {
                merged.insert(&rec.word, (rec, *freq));
            }
        }
    }
    Ok(merged
        .into_values()
        .filter(|&(_, f)| f > 0)
        .map(|(rec, f)| (rec.clone(), f))
        .collect())
}

/// Initialization followed by pruning down to `config.target_vocab_size`.
///
/// If initialization yields fewer entries than the target, the initial
/// vocabulary is returned with re-estimated counts.
pub fn build_vocabulary(trees: &[WeightedTree], config: &ToolConfig) -> Result<Vocabulary> {
    build_vocabulary_traced(trees, config, |_| {})
}

pub fn build_vocabulary_traced(
    trees: &[WeightedTree],
    config: &ToolConfig,
    on_round: impl FnMut(usize),
) -> Result<Vocabulary> {
    config.validate()?;
    let trees = canonicalize(trees)?;
    if trees.is_empty() {
        return Err(Error::EmptyInput("no trees with positive frequency".into()));
    }
    let characters = character_vocab(&trees).len();
    if config.target_vocab_size < characters {
        return Err(Error::TargetBelowCharacterFloor {
            target: config.target_vocab_size,
            characters,
        });
    }
    let initial = init_vocab(&trees, config.pair_threshold);
    prune_vocab_traced(&trees, &initial, config.target_vocab_size, config.prune_rate, on_round)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treeio::{parse_tree_expr, parse_tree_record};
    use crate::vocab::entropy_of;

    fn rec(word: &str, expr: &str) -> TreeRecord {
        parse_tree_record(&format!("{word}\t{expr}")).unwrap()
    }

    fn table(values: &[(&str, f64)]) -> EntropyTable {
        EntropyTable::from_values(values.iter().copied(), 100.0)
    }

    #[test]
    fn book_counts_only_the_oo_pair() {
        let trees = vec![(rec("book", "((b (o o)) k)"), 4)];
        let chars = character_vocab(&trees);
        let pairs = count_tree_pairs(&trees, &chars);
        assert_eq!(pairs, PairCandidates::from([("oo".to_string(), 4)]));
    }

    #[test]
    fn book_recount_after_oo_is_added() {
        let trees = vec![(rec("book", "((b (o o)) k)"), 4)];
        let mut vocab = character_vocab(&trees);
        vocab.add("oo", 4);
        let pairs = count_tree_pairs(&trees, &vocab);
        assert_eq!(pairs, PairCandidates::from([("boo".to_string(), 4)]));
    }

    #[test]
    fn in_vocab_root_gives_no_candidates() {
        let trees = vec![(rec("ab", "(a b)"), 3)];
        let vocab = Vocabulary::from_counts([("a", 3), ("b", 3), ("ab", 3)]);
        assert!(count_tree_pairs(&trees, &vocab).is_empty());
    }

    #[test]
    fn init_reaches_fixpoint_in_two_rounds() {
        let trees = vec![(rec("aaaa", "((a a) (a a))"), 10)];
        let vocab = init_vocab(&trees, 5);
        assert_eq!(vocab.count("a"), Some(40));
        assert_eq!(vocab.count("aa"), Some(20));
        assert_eq!(vocab.count("aaaa"), Some(10));
        assert_eq!(vocab.len(), 3);
    }

    #[test]
    fn threshold_is_strict() {
        let trees = vec![(rec("ab", "(a b)"), 5)];
        assert_eq!(init_vocab(&trees, 5).len(), 2);
        assert_eq!(init_vocab(&trees, 4).len(), 3);
    }

    #[test]
    fn high_threshold_keeps_characters_only() {
        let trees = vec![(rec("abc", "((a b) c)"), 3), (rec("cab", "(c (a b))"), 2)];
        let v = init_vocab(&trees, 1000);
        assert_eq!(v.len(), 3);
        assert_eq!(v.character_count(), 3);
    }

    #[test]
    fn viterbi_keeps_cheap_whole_word() {
        let tree = parse_tree_expr("((b o) (o k))").unwrap();
        let t = table(&[("book", 1.0), ("bo", 2.0), ("ok", 2.5), ("b", 3.0), ("o", 3.0), ("k", 3.0)]);
        assert_eq!(tree_viterbi(&tree, &t, None), (1.0, vec!["book".to_string()]));
    }

    #[test]
    fn viterbi_splits_absent_node() {
        let tree = parse_tree_expr("(a b)").unwrap();
        let t = table(&[("a", 1.0), ("b", 1.0)]);
        assert_eq!(tree_viterbi(&tree, &t, None), (2.0, vec!["a".to_string(), "b".to_string()]));
    }

    #[test]
    fn viterbi_tie_splits() {
        let tree = parse_tree_expr("(a b)").unwrap();
        let t = table(&[("a", 1.0), ("b", 1.0), ("ab", 2.0)]);
        assert_eq!(tree_viterbi(&tree, &t, None).1, ["a", "b"]);
    }

    #[test]
    fn viterbi_records_clamped_delta() {
        let tree = parse_tree_expr("((a b) c)").unwrap();
        let t = table(&[("a", 1.0), ("b", 1.0), ("c", 1.0), ("ab", 0.5), ("abc", 4.0)]);
        let mut delta = DeltaLossTable::new();
        let (h, seg) = tree_viterbi(&tree, &t, Some(&mut delta));
        assert_eq!(h, 1.5);
        assert_eq!(seg, ["ab", "c"]);
        assert_eq!(delta["ab"], 1.5);
        assert_eq!(delta["abc"], 0.0);
    }

    #[test]
    fn missing_leaf_yields_infinite_entropy() {
        let tree = parse_tree_expr("(a z)").unwrap();
        let (h, seg) = tree_viterbi(&tree, &table(&[("a", 1.0)]), None);
        assert!(h.is_infinite());
        assert_eq!(seg, ["a", "z"]);
    }

    #[test]
    fn e_step_single_tree_trace() {
        let trees = vec![(rec("ab", "(a b)"), 100)];
        // e(ab) = ln 3 < e(a) + e(b) = 2 ln 3
        let vocab = Vocabulary::from_counts([("a", 1), ("b", 1), ("ab", 1)]);
        let counts = e_step(&trees, &vocab);
        assert_eq!(counts.count("ab"), Some(100));
        assert_eq!(counts.count("a"), Some(0));
        assert_eq!(counts.count("b"), Some(0));
        assert_eq!(counts.total(), 100);
    }

    #[test]
    fn e_step_drops_unselected_tokens() {
        let trees = vec![(rec("ab", "(a b)"), 1)];
        let vocab = Vocabulary::from_counts([("a", 10), ("b", 10), ("ab", 1), ("zz", 5)]);
        let counts = e_step(&trees, &vocab);
        assert!(!counts.contains("zz"));
        assert!(!counts.contains("ab"));
        assert_eq!(counts.count("a"), Some(1));
    }

    #[test]
    fn m_step_single_word() {
        let trees = [(rec("ab", "(a b)"), 7)];
        // Entropies e(ab) = 1, e(a) = e(b) = 2 via counts: T = e^2 * c(a) ...
        // use explicit values through the table-level helper instead.
        let t = table(&[("a", 2.0), ("b", 2.0), ("ab", 1.0)]);
        let mut word_delta = DeltaLossTable::new();
        let (_, seg) = tree_viterbi(&trees[0].0.tree, &t, Some(&mut word_delta));
        assert_eq!(seg, ["ab"]);
        assert_eq!(word_delta["ab"] * 7.0, 21.0);
    }

    #[test]
    fn m_step_zero_when_removal_is_free() {
        let trees = vec![(rec("ab", "(a b)"), 3)];
        let vocab = Vocabulary::from_counts([("a", 3), ("b", 3), ("ab", 1)]);
        let delta = m_step(&trees, &vocab);
        assert_eq!(delta.get("ab").copied().unwrap_or(0.0), 0.0);
        assert_eq!(delta.get("a").copied().unwrap_or(0.0), 0.0);
    }

    #[test]
    fn removal_count_examples() {
        assert_eq!(removal_count(30_000, 29_000, 0.1), 1_000);
        assert_eq!(removal_count(30_000, 100, 0.1), 3_000);
        assert_eq!(removal_count(5, 3, 0.1), 1);
        assert_eq!(removal_count(5, 5, 0.1), 0);
    }

    #[test]
    fn prune_to_current_size_is_identity_on_entries() {
        let trees = vec![(rec("ab", "(a b)"), 3)];
        let vocab = Vocabulary::from_counts([("a", 3), ("b", 3), ("ab", 3)]);
        let mut rounds = 0;
        let out = prune_vocab_traced(&trees, &vocab, 3, 0.1, |_| rounds += 1).unwrap();
        assert_eq!(rounds, 0);
        let mut tokens: Vec<_> = out.tokens().collect();
        tokens.sort_unstable();
        assert_eq!(tokens, ["a", "ab", "b"]);
    }

    #[test]
    fn prune_rejects_target_below_characters() {
        let trees = vec![(rec("abc", "((a b) c)"), 1)];
        let vocab = character_vocab(&trees);
        assert!(matches!(
            prune_vocab(&trees, &vocab, 2, 0.1),
            Err(Error::TargetBelowCharacterFloor { target: 2, characters: 3 })
        ));
    }

    // Corpus entropy of the tree-Viterbi segmentation of `trees` under `vocab`
    // (counts re-estimated against `vocab`), computed independently of the
    // builder's bookkeeping.
    fn segmentation_entropy(trees: &[WeightedTree], vocab: &Vocabulary) -> f64 {
        let table = vocab.entropy_table();
        let mut counts: HashMap<String, u64> = HashMap::new();
        for (rec, f) in trees {
            for tok in tree_viterbi(&rec.tree, &table, None).1 {
                *counts.entry(tok).or_insert(0) += f;
            }
        }
        let total: u64 = counts.values().sum();
        counts
            .values()
            .map(|&c| {
                let p = c as f64 / total as f64;
                -p * p.ln()
            })
            .sum()
    }

    #[test]
    fn prune_removes_cheapest_token_first() {
        let trees = vec![(rec("abab", "((a b) (a b))"), 100)];
        let vocab = init_vocab(&trees, 10);
        assert_eq!(vocab.len(), 4);
        // Brute force: corpus entropy with each candidate removed.
        let counts = recount(&trees, &vocab);
        let mut best: Option<(&str, f64)> = None;
        for cand in ["ab", "abab"] {
            let mut v = counts.clone();
            v.remove(cand);
            let h = segmentation_entropy(&trees, &v);
            if best.is_none_or(|(_, bh)| h < bh) {
                best = Some((cand, h));
            }
        }
        let pruned = prune_vocab(&trees, &vocab, 3, 0.1).unwrap();
        assert_eq!(pruned.len(), 3);
        let removed = ["ab", "abab"].into_iter().find(|t| !pruned.contains(t)).unwrap();
        assert_eq!(removed, best.unwrap().0);
        assert!(pruned.contains("a") && pruned.contains("b"));
    }

    #[test]
    fn entropies_follow_counts() {
        let v = Vocabulary::from_counts([("a", 1), ("b", 3)]);
        assert_eq!(v.entropy_table().get("a"), entropy_of(&v, "a"));
    }
}
