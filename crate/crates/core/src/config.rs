use crate::error::{Error, Result};

/// Knobs shared by vocabulary construction, tokenization and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolConfig {
    /// Pair candidates must be seen strictly more often than this to be added.
    pub pair_threshold: u64,
    /// Fraction of the vocabulary removed per pruning round, in (0, 1).
    pub prune_rate: f64,
    pub target_vocab_size: usize,
    pub renyi_alpha: f64,
    pub lowercase: bool,
    pub cache_capacity: usize,
}

impl Default for ToolConfig {
    fn default() -> Self {
        ToolConfig {
            pair_threshold: 10,
            prune_rate: 0.10,
            target_vocab_size: 30_000,
            renyi_alpha: 2.5,
            lowercase: true,
            cache_capacity: 100_000,
        }
    }
}

impl ToolConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.prune_rate > 0.0 && self.prune_rate < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "prune_rate must lie in (0, 1), got {}",
                self.prune_rate
            )));
        }
        if self.renyi_alpha.is_nan() || self.renyi_alpha <= 0.0 || self.renyi_alpha == 1.0 || !self.renyi_alpha.is_finite() {
            return Err(Error::InvalidAlpha(self.renyi_alpha));
        }
        if self.target_vocab_size == 0 {
            return Err(Error::InvalidConfig("target_vocab_size must be positive".into()));
        }
        Ok(())
    }

    /// Applies one `key = value` setting. Keys use the field names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::InvalidConfig(format!("bad value {value:?} for {what}"));
        match key {
            "pair_threshold" => self.pair_threshold = value.parse().map_err(|_| bad(key))?,
            "prune_rate" => self.prune_rate = value.parse().map_err(|_| bad(key))?,
            "target_vocab_size" | "vocab_size" => {
                self.target_vocab_size = value.parse().map_err(|_| bad(key))?
            }
            "renyi_alpha" | "alpha" => self.renyi_alpha = value.parse().map_err(|_| bad(key))?,
            "lowercase" => self.lowercase = value.parse().map_err(|_| bad(key))?,
            "cache_capacity" | "cache" => self.cache_capacity = value.parse().map_err(|_| bad(key))?,
            _ => return Err(Error::InvalidConfig(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parses a flat config file: one `key = value` per line, `#` comments.
    /// Keys that belong to other tools are returned untouched in `extra`.
    pub fn parse_flat(text: &str, known_extra: &[&str]) -> Result<(Self, Vec<(String, String)>)> {
        let mut config = ToolConfig::default();
        let mut extra = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::MalformedLine {
                line: n + 1,
                reason: "expected key = value".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if known_extra.contains(&key) {
                extra.push((key.to_owned(), value.to_owned()));
            } else {
                config.set(key, value)?;
            }
        }
        Ok((config, extra))
    }
}
