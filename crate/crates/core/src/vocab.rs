//! Token counts and the entropy view derived from them.

use std::collections::HashMap;

/// True when `token` is exactly one Unicode scalar value.
pub fn is_character(token: &str) -> bool {
    let mut chars = token.chars();
    chars.next().is_some() && chars.next().is_none()
}

/// Association from token string to a non-negative count, with the running
/// total `T`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    counts: HashMap<String, u64>,
    total: u64,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut vocab = Vocabulary::new();
        for (token, count) in entries {
            vocab.add(token, count);
        }
        vocab
    }

    /// Adds `count` to `token`, inserting it if absent.
    pub fn add(&mut self, token: impl Into<String>, count: u64) {
        *self.counts.entry(token.into()).or_insert(0) += count;
        self.total += count;
    }

    /// Sets the count of `token`, replacing any previous value.
    pub fn set(&mut self, token: impl Into<String>, count: u64) {
        let prev = self.counts.insert(token.into(), count).unwrap_or(0);
        self.total = self.total - prev + count;
    }

    pub fn remove(&mut self, token: &str) -> Option<u64> {
        let count = self.counts.remove(token)?;
        self.total -= count;
        Some(count)
    }

    pub fn count(&self, token: &str) -> Option<u64> {
        self.counts.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.counts.contains_key(token)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `T`, the sum of all counts.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(t, &c)| (t.as_str(), c))
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }

    /// Number of single-character entries.
    pub fn character_count(&self) -> usize {
        self.counts.keys().filter(|t| is_character(t)).count()
    }

    /// Entries in file order: descending count, ties broken lexicographically.
    pub fn sorted_entries(&self) -> Vec<(&str, u64)> {
        let mut entries: Vec<_> = self.iter().collect();
        entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        entries
    }

    pub fn entropy_table(&self) -> EntropyTable {
        EntropyTable::from_vocabulary(self)
    }
}

/// `-ln(count/T)` for present tokens, `+inf` otherwise.
pub fn entropy_of(vocab: &Vocabulary, token: &str) -> f64 {
    match vocab.count(token) {
        Some(count) => count_entropy(count, vocab.total()),
        None => f64::INFINITY,
    }
}

fn count_entropy(count: u64, total: u64) -> f64 {
    if count == 0 || total == 0 {
        f64::INFINITY
    } else if count == total {
        0.0
    } else {
        (total as f64).ln() - (count as f64).ln()
    }
}

/// Token entropies in nats, derived from a [`Vocabulary`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EntropyTable {
    values: HashMap<String, f64>,
    unk_entropy: f64,
}

impl EntropyTable {
    pub fn from_vocabulary(vocab: &Vocabulary) -> Self {
        let total = vocab.total();
        let values = vocab
            .iter()
            .map(|(t, c)| (t.to_owned(), count_entropy(c, total)))
            .collect();
        EntropyTable {
            values,
            unk_entropy: (total.max(1) as f64).ln() + 1.0,
        }
    }

    /// Builds a table from explicit values. `unk_entropy` is the finite cost
    /// charged to tokens with no usable entry.
    pub fn from_values<I, S>(values: I, unk_entropy: f64) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        EntropyTable {
            values: values.into_iter().map(|(t, v)| (t.into(), v)).collect(),
            unk_entropy,
        }
    }

    /// Entropy of `token`, `+inf` when absent.
    pub fn get(&self, token: &str) -> f64 {
        self.values.get(token).copied().unwrap_or(f64::INFINITY)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.values.contains_key(token)
    }

    /// Cost of an already-emitted token: its entropy when finite, the UNK
    /// cost (`ln T + 1`) otherwise.
    pub fn emitted_cost(&self, token: &str) -> f64 {
        match self.values.get(token) {
            Some(v) if v.is_finite() => *v,
            _ => self.unk_entropy,
        }
    }

    pub fn unk_entropy(&self) -> f64 {
        self.unk_entropy
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
