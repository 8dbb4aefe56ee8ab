//! Generators and brute-force oracles shared by the integration suites.
//!
//! The oracles enumerate solution spaces directly and never call the DP or
//! recursion they are used to check.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use arbortok::{EntropyTable, GoldSegmentation, ParseNode};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn random_word<R: Rng>(rng: &mut R, alphabet: &[char], min_len: usize, max_len: usize) -> String {
    let n = rng.gen_range(min_len..=max_len);
    (0..n).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

/// Uniformly random split points, recursively.
pub fn random_tree<R: Rng>(rng: &mut R, word: &str) -> ParseNode {
    let chars: Vec<char> = word.chars().collect();
    fn go<R: Rng>(rng: &mut R, chars: &[char], i: usize, j: usize) -> ParseNode {
        if i == j {
            return ParseNode::leaf(i, chars[i]);
        }
        let k = rng.gen_range(i..j);
        let l = go(rng, chars, i, k);
        let r = go(rng, chars, k + 1, j);
        ParseNode::join(l, r)
    }
    go(rng, &chars, 0, chars.len() - 1)
}

/// Random dyadic value `k / 8` so that sums are exact in binary floating point.
pub fn dyadic<R: Rng>(rng: &mut R, max_k: u32) -> f64 {
    f64::from(rng.gen_range(0..=max_k)) / 8.0
}

/// Every segmentation obtainable by cutting the tree: a node contributes
/// either its own token or a segmentation of each child.
pub fn tree_cuts(node: &ParseNode) -> Vec<Vec<String>> {
    let mut out = vec![vec![node.token.clone()]];
    if let (Some(l), Some(r)) = (&node.left, &node.right) {
        let left = tree_cuts(l);
        let right = tree_cuts(r);
        for a in &left {
            for b in &right {
                let mut seg = a.clone();
                seg.extend(b.iter().cloned());
                out.push(seg);
            }
        }
    }
    out
}

pub fn cost_left_to_right(seg: &[String], values: &HashMap<String, f64>) -> f64 {
    seg.iter()
        .map(|t| values.get(t).copied().unwrap_or(f64::INFINITY))
        .fold(0.0, |acc, v| acc + v)
}

/// All ways to cut a sequence of `n` items into contiguous runs, as run lengths.
pub fn compositions(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for mask in 0u32..(1 << (n - 1)) {
        let mut runs = Vec::new();
        let mut len = 1;
        for bit in 0..n - 1 {
            if mask & (1 << bit) != 0 {
                runs.push(len);
                len = 1;
            } else {
                len += 1;
            }
        }
        runs.push(len);
        out.push(runs);
    }
    out
}

/// Cost of re-merging `tokens` into runs: single tokens cost their finite
/// entropy or `unk`, merged runs cost the entropy of their concatenation.
pub fn merge_cost(tokens: &[String], runs: &[usize], values: &HashMap<String, f64>, unk: f64) -> f64 {
    let mut pos = 0;
    let mut total = 0.0;
    for &len in runs {
        let part = &tokens[pos..pos + len];
        let c = if len == 1 {
            match values.get(&part[0]) {
                Some(v) if v.is_finite() => *v,
                _ => unk,
            }
        } else {
            values.get(&part.concat()).copied().unwrap_or(f64::INFINITY)
        };
        total += c;
        pos += len;
    }
    total
}

pub fn apply_runs(tokens: &[String], runs: &[usize]) -> Vec<String> {
    let mut pos = 0;
    runs.iter()
        .map(|&len| {
            let s = tokens[pos..pos + len].concat();
            pos += len;
            s
        })
        .collect()
}

pub fn table_from(values: &HashMap<String, f64>, unk: f64) -> EntropyTable {
    EntropyTable::from_values(values.iter().map(|(k, v)| (k.clone(), *v)), unk)
}

/// Collects `(i, j)` of every node by explicit recursion over children.
pub fn all_node_spans(node: &ParseNode, out: &mut HashSet<(usize, usize)>) {
    out.insert((node.i, node.j));
    if let Some(l) = &node.left {
        all_node_spans(l, out);
    }
    if let Some(r) = &node.right {
        all_node_spans(r, out);
    }
}

/// Morpheme recall by enumerating every candidate span of the word.
pub fn recall_by_enumeration(tree: &ParseNode, gold: &GoldSegmentation) -> Option<f64> {
    let n = gold.word.chars().count();
    let mut nodes = HashSet::new();
    all_node_spans(tree, &mut nodes);
    let mut morph_spans = HashSet::new();
    let mut start = 0;
    for m in &gold.morphs {
        let len = m.chars().count();
        morph_spans.insert((start, start + len - 1));
        start += len;
    }
    let (mut eligible, mut found) = (0usize, 0usize);
    for i in 0..n {
        for j in i + 1..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if morph_spans.contains(&(i, j)) {
                eligible += 1;
                if nodes.contains(&(i, j)) {
                    found += 1;
                }
            }
        }
    }
    (eligible > 0).then(|| found as f64 / eligible as f64)
}

pub fn random_gold<R: Rng>(rng: &mut R, word: &str) -> GoldSegmentation {
    let chars: Vec<char> = word.chars().collect();
    let mut morphs = Vec::new();
    let mut cur = String::new();
    for (idx, c) in chars.iter().enumerate() {
        cur.push(*c);
        if idx + 1 < chars.len() && rng.gen_bool(0.35) {
            morphs.push(std::mem::take(&mut cur));
        }
    }
    morphs.push(cur);
    GoldSegmentation {
        word: word.to_owned(),
        morphs,
    }
}
