//! Intrinsic evaluation: exact-match segmentation accuracy, morpheme recall of
//! tree spans, Rényi efficiency, corpus entropy and token statistics.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::tree::ParseNode;
use crate::treeio::GoldSegmentation;
use crate::vocab::Vocabulary;

/// Fraction of words whose predicted token list equals the gold morphs.
/// Returns 0 for empty input.
pub fn segmentation_accuracy(preds: &[Vec<String>], golds: &[GoldSegmentation]) -> Result<f64> {
    if preds.len() != golds.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: golds.len(),
        });
    }
    if preds.is_empty() {
        return Ok(0.0);
    }
    let correct = preds.iter().zip(golds).filter(|(p, g)| **p == g.morphs).count();
    Ok(correct as f64 / preds.len() as f64)
}

/// Spans of the tree that can count as morphemes: internal nodes other than
/// the root.
pub fn nontrivial_spans(tree: &ParseNode) -> HashSet<(usize, usize)> {
    tree.spans()
        .into_iter()
        .filter(|&(i, j)| i != j && (i, j) != tree.span())
        .collect()
}

/// Character intervals of morphs that are neither single characters nor the
/// whole word.
pub fn eligible_morph_spans(gold: &GoldSegmentation) -> Vec<(usize, usize)> {
    let n = gold.word.chars().count();
    let mut out = Vec::new();
    let mut start = 0;
    for m in &gold.morphs {
        let len = m.chars().count();
        if len >= 2 && len < n {
            out.push((start, start + len - 1));
        }
        start += len;
    }
    out
}

/// Share of eligible gold morphs that appear as a non-trivial tree span.
/// `None` when the word has no eligible morphs.
pub fn morpheme_recall(tree: &ParseNode, gold: &GoldSegmentation) -> Result<Option<f64>> {
    if tree.token != gold.word {
        return Err(Error::CoverageMismatch {
            tree: tree.token.clone(),
            gold: gold.word.clone(),
        });
    }
    let eligible = eligible_morph_spans(gold);
    if eligible.is_empty() {
        return Ok(None);
    }
    let spans = nontrivial_spans(tree);
    let found = eligible.iter().filter(|s| spans.contains(s)).count();
    Ok(Some(found as f64 / eligible.len() as f64))
}

/// Word-level (macro) average, skipping words without eligible morphs.
pub fn mean_morpheme_recall<'a>(
    pairs: impl IntoIterator<Item = (&'a ParseNode, &'a GoldSegmentation)>,
) -> Result<Option<f64>> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (tree, gold) in pairs {
        if let Some(r) = morpheme_recall(tree, gold)? {
            sum += r;
            n += 1;
        }
    }
    Ok((n > 0).then(|| sum / n as f64))
}

/// Empirical token distribution. Only tokens with positive count are kept.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TokenDistribution {
    probs: HashMap<String, f64>,
}

impl TokenDistribution {
    pub fn from_counts<I, S>(counts: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let counts: Vec<(String, u64)> = counts
            .into_iter()
            .filter(|&(_, c)| c > 0)
            .map(|(t, c)| (t.into(), c))
            .collect();
        let total: u64 = counts.iter().map(|(_, c)| c).sum();
        let probs = counts
            .into_iter()
            .map(|(t, c)| (t, c as f64 / total as f64))
            .collect();
        TokenDistribution { probs }
    }

    pub fn from_token_stream<'a>(stream: impl IntoIterator<Item = &'a Vec<String>>) -> Self {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for sentence in stream {
            for t in sentence {
                *counts.entry(t).or_insert(0) += 1;
            }
        }
        Self::from_counts(counts)
    }

    pub fn support(&self) -> usize {
        self.probs.len()
    }

    pub fn probability(&self, token: &str) -> f64 {
        self.probs.get(token).copied().unwrap_or(0.0)
    }

    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.probs.values().copied()
    }
}

/// Rényi entropy of order `alpha` divided by `ln |support|`.
pub fn renyi_efficiency(dist: &TokenDistribution, alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha <= 0.0 || alpha == 1.0 || !alpha.is_finite() {
        return Err(Error::InvalidAlpha(alpha));
    }
    let support = dist.support();
    if support == 0 {
        return Err(Error::EmptyInput("token distribution".into()));
    }
    if support == 1 {
        return Ok(0.0);
    }
    let mut probs: Vec<f64> = dist.probabilities().collect();
    probs.sort_unstable_by(f64::total_cmp);
    let power_sum: f64 = probs.iter().map(|p| p.powf(alpha)).sum();
    let renyi = power_sum.ln() / (1.0 - alpha);
    Ok((renyi / (support as f64).ln()).clamp(0.0, 1.0))
}

/// Shannon entropy of the vocabulary's count distribution, in nats.
pub fn corpus_entropy(vocab: &Vocabulary) -> f64 {
    let total = vocab.total() as f64;
    let mut terms: Vec<f64> = vocab
        .iter()
        .filter(|&(_, c)| c > 0)
        .map(|(_, c)| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .collect();
    terms.sort_unstable_by(f64::total_cmp);
    terms.iter().sum()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusTokenStats {
    pub sentences: usize,
    pub total_tokens: usize,
    pub unk_tokens: usize,
}

impl CorpusTokenStats {
    pub fn record(&mut self, tokens: usize, unk: usize) {
        self.sentences += 1;
        self.total_tokens += tokens;
        self.unk_tokens += unk;
    }

    pub fn average_tokens(&self) -> f64 {
        if self.sentences == 0 {
            0.0
        } else {
            self.total_tokens as f64 / self.sentences as f64
        }
    }

    pub fn unk_rate(&self) -> f64 {
        if self.total_tokens == 0 {
            0.0
        } else {
            self.unk_tokens as f64 / self.total_tokens as f64
        }
    }
}

/// Sentence and token counts of a tokenized corpus. Tokens count as unknown
/// only when a vocabulary is supplied and lacks them.
pub fn corpus_stats(stream: &[Vec<String>], vocab: Option<&Vocabulary>) -> CorpusTokenStats {
    let mut stats = CorpusTokenStats::default();
    for sentence in stream {
        let unk = vocab.map_or(0, |v| sentence.iter().filter(|t| !v.contains(t)).count());
        stats.record(sentence.len(), unk);
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treeio::parse_tree_expr;

    fn gold(word: &str, morphs: &[&str]) -> GoldSegmentation {
        GoldSegmentation {
            word: word.into(),
            morphs: morphs.iter().map(|m| m.to_string()).collect(),
        }
    }

    fn toks(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn accuracy_counts_exact_matches() {
        let golds = vec![gold("windsurfing", &["wind", "surf", "ing"]), gold("bed", &["bed"])];
        let all = vec![toks(&["wind", "surf", "ing"]), toks(&["bed"])];
        assert_eq!(segmentation_accuracy(&all, &golds).unwrap(), 1.0);
        let half = vec![toks(&["wind", "sur", "fing"]), toks(&["bed"])];
        assert_eq!(segmentation_accuracy(&half, &golds).unwrap(), 0.5);
        assert!(matches!(
            segmentation_accuracy(&all[..1], &golds),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn recall_full_when_all_morphs_are_spans() {
        let tree = parse_tree_expr("(((w (i (n d))) (s (u (r f)))) ((i n) g))").unwrap();
        let g = gold("windsurfing", &["wind", "surf", "ing"]);
        assert_eq!(morpheme_recall(&tree, &g).unwrap(), Some(1.0));
    }

    #[test]
    fn recall_skips_single_characters() {
        // Spans: tri (0,2) and cycles (3,8); "cycle" is missing, "s" excluded.
        let tree = parse_tree_expr("((t (r i)) (c (y (c (l (e s))))))").unwrap();
        let g = gold("tricycles", &["tri", "cycle", "s"]);
        assert_eq!(morpheme_recall(&tree, &g).unwrap(), Some(0.5));
    }

    #[test]
    fn recall_not_applicable_for_whole_word_morph() {
        let tree = parse_tree_expr("((b e) d)").unwrap();
        assert_eq!(morpheme_recall(&tree, &gold("bed", &["bed"])).unwrap(), None);
    }

    #[test]
    fn recall_checks_coverage() {
        let tree = parse_tree_expr("(a b)").unwrap();
        assert!(matches!(
            morpheme_recall(&tree, &gold("abc", &["ab", "c"])),
            Err(Error::CoverageMismatch { .. })
        ));
    }

    #[test]
    fn renyi_uniform_is_one() {
        let d = TokenDistribution::from_counts([("a", 1), ("b", 1), ("c", 1), ("d", 1)]);
        assert!((renyi_efficiency(&d, 2.5).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn renyi_single_token_is_zero() {
        let d = TokenDistribution::from_counts([("a", 7)]);
        assert_eq!(renyi_efficiency(&d, 2.5).unwrap(), 0.0);
    }

    #[test]
    fn renyi_prefers_balanced() {
        let skewed = TokenDistribution::from_counts([("a", 9), ("b", 1)]);
        let even = TokenDistribution::from_counts([("a", 5), ("b", 5)]);
        let s = renyi_efficiency(&skewed, 2.5).unwrap();
        let e = renyi_efficiency(&even, 2.5).unwrap();
        // (1/(1-2.5)) ln(0.9^2.5 + 0.1^2.5) / ln 2
        let expected = (0.9f64.powf(2.5) + 0.1f64.powf(2.5)).ln() / -1.5 / 2f64.ln();
        assert!((s - expected).abs() < 1e-12);
        assert!(s < e);
    }

    #[test]
    fn renyi_rejects_bad_alpha() {
        let d = TokenDistribution::from_counts([("a", 1), ("b", 2)]);
        for a in [1.0, 0.0, -2.0, f64::NAN] {
            assert!(matches!(renyi_efficiency(&d, a), Err(Error::InvalidAlpha(_))));
        }
    }

    #[test]
    fn corpus_entropy_examples() {
        let two = Vocabulary::from_counts([("a", 1), ("b", 1)]);
        assert!((corpus_entropy(&two) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(corpus_entropy(&Vocabulary::from_counts([("a", 5)])), 0.0);
    }

    #[test]
    fn stats_average() {
        let stream = vec![toks(&["a", "b", "c"]), toks(&["a", "b", "c", "d", "e"])];
        let vocab = Vocabulary::from_counts([("a", 1), ("b", 1), ("c", 1), ("d", 1)]);
        let s = corpus_stats(&stream, Some(&vocab));
        assert_eq!(s.average_tokens(), 4.0);
        assert_eq!(s.total_tokens, 8);
        assert_eq!(s.unk_rate(), 1.0 / 8.0);
    }

    #[test]
    fn stats_single_empty_sentence() {
        let s = corpus_stats(&[vec![]], None);
        assert_eq!(s.average_tokens(), 0.0);
        assert_eq!(s.unk_rate(), 0.0);
    }
}
