//! Comparison baselines: classic pair-merge BPE and deterministic fallback
//! trees for words that have no induced parse.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tree::ParseNode;
use crate::treeio::CorpusStats;
use crate::vocab::Vocabulary;

// ---------------------------------------------------------------------------
// Fallback trees

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FallbackStrategy {
    Right,
    Left,
    Balanced,
    Random(u64),
}

impl FromStr for FallbackStrategy {
    type Err = String;

    /// Accepts `right`, `left`, `balanced`, `random` and `random:SEED`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "right" => Ok(FallbackStrategy::Right),
            "left" => Ok(FallbackStrategy::Left),
            "balanced" => Ok(FallbackStrategy::Balanced),
            "random" => Ok(FallbackStrategy::Random(0)),
            _ => match s.strip_prefix("random:") {
                Some(seed) => seed
                    .parse()
                    .map(FallbackStrategy::Random)
                    .map_err(|_| format!("bad seed in {s:?}")),
                None => Err(format!("unknown tree strategy {s:?} (right|left|balanced|random[:SEED])")),
            },
        }
    }
}

impl fmt::Display for FallbackStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FallbackStrategy::Right => f.write_str("right"),
            FallbackStrategy::Left => f.write_str("left"),
            FallbackStrategy::Balanced => f.write_str("balanced"),
            FallbackStrategy::Random(seed) => write!(f, "random:{seed}"),
        }
    }
}

// FNV-1a, so random trees depend on (seed, word) and not on visiting order.
fn word_hash(word: &str) -> u64 {
    word.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Deterministic binary tree over `word`. Returns `None` for the empty word.
pub fn fallback_tree(word: &str, strategy: FallbackStrategy) -> Option<ParseNode> {
    let chars: Vec<char> = word.chars().collect();
    if chars.is_empty() {
        return None;
    }
    let mut rng = match strategy {
        FallbackStrategy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed ^ word_hash(word))),
        _ => None,
    };
    Some(build(&chars, 0, chars.len() - 1, strategy, &mut rng))
}

fn build(
    chars: &[char],
    i: usize,
    j: usize,
    strategy: FallbackStrategy,
    rng: &mut Option<ChaCha8Rng>,
) -> ParseNode {
    if i == j {
        return ParseNode::leaf(i, chars[i]);
    }
    // `k` is the last index of the left child.
    let k = match strategy {
        FallbackStrategy::Right => i,
        FallbackStrategy::Left => j - 1,
        FallbackStrategy::Balanced => i + (j - i).div_ceil(2) - 1,
        FallbackStrategy::Random(_) => rng.as_mut().map_or(i, |r| r.gen_range(i..j)),
    };
    let left = build(chars, i, k, strategy, rng);
    let right = build(chars, k + 1, j, strategy, rng);
    ParseNode::join(left, right)
}

// ---------------------------------------------------------------------------
// BPE

/// Ordered merge operations with a rank index for segmentation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeList {
    merges: Vec<(String, String)>,
    ranks: HashMap<(String, String), usize>,
}

impl MergeList {
    pub fn new(merges: Vec<(String, String)>) -> Self {
        let mut ranks = HashMap::with_capacity(merges.len());
        for (rank, pair) in merges.iter().enumerate() {
            ranks.entry(pair.clone()).or_insert(rank);
        }
        MergeList { merges, ranks }
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn len(&self) -> usize {
        self.merges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merges.is_empty()
    }

    fn rank(&self, left: &str, right: &str) -> Option<usize> {
        // Avoids allocating a key tuple for misses on short lists.
        if self.merges.is_empty() {
            return None;
        }
        self.ranks.get(&(left.to_owned(), right.to_owned())).copied()
    }
}

/// Splits `word` into characters and applies merges in learned order until
/// none applies.
pub fn bpe_tokenize(word: &str, merges: &MergeList) -> Vec<String> {
    let mut symbols: Vec<String> = word.chars().map(String::from).collect();
    loop {
        let best = symbols
            .windows(2)
            .filter_map(|w| merges.rank(&w[0], &w[1]))
            .min();
        let Some(rank) = best else { break };
        let (left, right) = &merges.merges[rank];
        let mut merged = Vec::with_capacity(symbols.len());
        let mut iter = symbols.into_iter().peekable();
        while let Some(sym) = iter.next() {
            if sym == *left && iter.peek() == Some(right) {
                let r = iter.next().unwrap_or_default();
                merged.push(sym + &r);
            } else {
                merged.push(sym);
            }
        }
        symbols = merged;
    }
    symbols
}

#[derive(Debug, PartialEq, Eq)]
struct HeapEntry {
    count: u64,
    left: String,
    right: String,
    pair: (u32, u32),
}

impl Ord for HeapEntry {
    // Highest count first, then lexicographically smallest (left, right).
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| Reverse((&self.left, &self.right)).cmp(&Reverse((&other.left, &other.right))))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct BpeState {
    symbols: Vec<String>,
    ids: HashMap<String, u32>,
    words: Vec<(Vec<u32>, u64)>,
    pair_counts: HashMap<(u32, u32), u64>,
    pair_words: HashMap<(u32, u32), HashSet<usize>>,
}

impl BpeState {
    fn intern(&mut self, s: String) -> u32 {
        if let Some(&id) = self.ids.get(&s) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.ids.insert(s.clone(), id);
        self.symbols.push(s);
        id
    }

    fn account(&mut self, w: usize, sign_add: bool) {
        let (ref seq, freq) = self.words[w];
        for pair in seq.windows(2).map(|p| (p[0], p[1])) {
            let c = self.pair_counts.entry(pair).or_insert(0);
            if sign_add {
                *c += freq;
                self.pair_words.entry(pair).or_default().insert(w);
            } else {
                *c -= freq;
            }
        }
    }

    fn entry(&self, pair: (u32, u32)) -> HeapEntry {
        HeapEntry {
            count: self.pair_counts.get(&pair).copied().unwrap_or(0),
            left: self.symbols[pair.0 as usize].clone(),
            right: self.symbols[pair.1 as usize].clone(),
            pair,
        }
    }
}

/// Greedy pair-merge training over word frequencies. Stops when the
/// vocabulary holds `vocab_size` distinct tokens or no pair occurs at least
/// twice. Ties are broken lexicographically on `(left, right)`.
pub fn bpe_train(corpus: &CorpusStats, vocab_size: usize) -> (MergeList, Vocabulary) {
    let mut state = BpeState {
        symbols: Vec::new(),
        ids: HashMap::new(),
        words: Vec::new(),
        pair_counts: HashMap::new(),
        pair_words: HashMap::new(),
    };
    for (word, freq) in corpus.sorted_words() {
        let seq: Vec<u32> = word.chars().map(|c| state.intern(c.to_string())).collect();
        state.words.push((seq, freq));
    }
    let mut known: HashSet<String> = state.symbols.iter().cloned().collect();
    for w in 0..state.words.len() {
        state.account(w, true);
    }
    let mut heap: BinaryHeap<HeapEntry> = state.pair_counts.keys().map(|&p| state.entry(p)).collect();

    let mut merges = Vec::new();
    while known.len() < vocab_size {
        let Some(top) = heap.pop() else { break };
        let current = state.pair_counts.get(&top.pair).copied().unwrap_or(0);
        if current != top.count {
            if current > 0 {
                heap.push(state.entry(top.pair));
            }
            continue;
        }
        if current < 2 {
            break;
        }
        let (a, b) = top.pair;
        let merged = format!("{}{}", top.left, top.right);
        known.insert(merged.clone());
        let new_id = state.intern(merged);
        merges.push((top.left, top.right));

        let mut affected: Vec<usize> = state
            .pair_words
            .remove(&top.pair)
            .map(|s| s.into_iter().collect())
            .unwrap_or_default();
        affected.sort_unstable();
        let mut touched = HashSet::new();
        for w in affected {
            state.account(w, false);
            let seq = &state.words[w].0;
            let mut out = Vec::with_capacity(seq.len());
            let mut idx = 0;
            while idx < seq.len() {
                if idx + 1 < seq.len() && seq[idx] == a && seq[idx + 1] == b {
                    out.push(new_id);
                    idx += 2;
                } else {
                    out.push(seq[idx]);
                    idx += 1;
                }
            }
            state.words[w].0 = out;
            state.account(w, true);
            for p in state.words[w].0.windows(2) {
                touched.insert((p[0], p[1]));
            }
        }
        state.pair_counts.remove(&top.pair);
        let mut touched: Vec<_> = touched.into_iter().collect();
        touched.sort_unstable();
        for p in touched {
            if state.pair_counts.get(&p).copied().unwrap_or(0) > 0 {
                heap.push(state.entry(p));
            }
        }
    }

    let mut vocab = Vocabulary::from_counts(known.into_iter().map(|t| (t, 0)));
    for (seq, freq) in &state.words {
        for &id in seq {
            vocab.add(state.symbols[id as usize].as_str(), *freq);
        }
    }
    (MergeList::new(merges), vocab)
}
