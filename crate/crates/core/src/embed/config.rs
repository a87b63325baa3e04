use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    pub dim: usize,
    pub window: usize,
    /// Negative samples per positive pair.
    pub negative: usize,
    pub epochs: usize,
    /// Learning rate at the start; decays linearly to `min_lr`.
    pub lr: f64,
    pub min_lr: f64,
    /// Tokens rarer than this are dropped before training.
    pub min_count: u64,
    pub seed: u64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self::micro()
    }
}

impl EmbedConfig {
    /// Skip-gram over customer documents.
    pub fn micro() -> Self {
        EmbedConfig {
            dim: 200,
            window: 20,
            negative: 20,
            epochs: 5,
            lr: 0.025,
            min_lr: 1e-4,
            min_count: 2,
            seed: 0,
        }
    }

    /// Paragraph vectors over restaurant documents.
    pub fn macro_() -> Self {
        EmbedConfig {
            dim: 100,
            window: 200,
            min_count: 1,
            ..Self::micro()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.window == 0 || self.negative == 0 || self.epochs == 0 {
            return Err(Error::config("embed: dim, window, negative and epochs must be >= 1"));
        }
        if !(self.lr > 0.0) || !(self.min_lr >= 0.0) || self.min_lr > self.lr {
            return Err(Error::config("embed: need 0 <= min_lr <= lr and lr > 0"));
        }
        Ok(())
    }

    /// Learning rate after `done` of `total` token steps.
    pub(crate) fn rate(&self, done: usize, total: usize) -> f32 {
        let frac = if total == 0 { 0.0 } else { done as f64 / total as f64 };
        (self.lr * (1.0 - frac)).max(self.min_lr) as f32
    }
}
