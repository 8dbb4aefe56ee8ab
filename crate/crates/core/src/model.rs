use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use parking_lot::RwLock;

use crate::config::ToolConfig;
use crate::error::Result;
use crate::segmenter::SegmentationResult;
use crate::treeio::load_vocabulary;
use crate::vocab::{EntropyTable, Vocabulary};

/// Bounded word-level memo of segmentation results.
///
/// Admission is insert-on-miss until `capacity` entries are held; after that
/// new words are computed but not stored. Concurrent inserts of the same word
/// are idempotent since results are deterministic.
#[derive(Debug)]
pub struct TokenCache {
    capacity: usize,
    entries: RwLock<HashMap<String, Arc<SegmentationResult>>>,
}

impl TokenCache {
    pub fn new(capacity: usize) -> Self {
        TokenCache {
            capacity,
            entries: RwLock::new(HashMap::new()),
        }
    }

    pub fn get(&self, word: &str) -> Option<Arc<SegmentationResult>> {
        if self.capacity == 0 {
            return None;
        }
        self.entries.read().get(word).cloned()
    }

    pub fn insert(&self, word: &str, result: Arc<SegmentationResult>) {
        if self.capacity == 0 {
            return;
        }
        let mut entries = self.entries.write();
        if entries.len() < self.capacity || entries.contains_key(word) {
            entries.insert(word.to_owned(), result);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn clear(&self) {
        self.entries.write().clear();
    }
}

/// A frozen vocabulary with its entropy table and a word cache.
///
/// The cache is keyed by word: a model assumes each word is always
/// tokenized with the same tree.
#[derive(Debug)]
pub struct TokenizerModel {
    pub vocabulary: Vocabulary,
    pub entropies: EntropyTable,
    pub cache: TokenCache,
    pub config: ToolConfig,
}

impl TokenizerModel {
    pub fn new(vocabulary: Vocabulary, config: ToolConfig) -> Self {
        let entropies = vocabulary.entropy_table();
        let cache = TokenCache::new(config.cache_capacity);
        TokenizerModel {
            vocabulary,
            entropies,
            cache,
            config,
        }
    }

    /// Loads a vocabulary file; entropies are derived from its counts.
    pub fn load(path: &Path, config: ToolConfig) -> Result<Self> {
        Ok(Self::new(load_vocabulary(path)?, config))
    }
}
