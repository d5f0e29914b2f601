use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::optim::{Optimizer, OptimizerKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscMode {
    /// Human-vs-generated classification.
    Binary,
    /// Regression onto CDR targets.
    #[default]
    Regression,
}

impl std::str::FromStr for DiscMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "binary" | "adversarial" => Ok(Self::Binary),
            "regression" => Ok(Self::Regression),
            other => Err(format!("unknown discriminator mode {other:?}")),
        }
    }
}

/// Steps per phase of an alternating round; `None` means one pass over the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Schedule {
    pub g_steps: Option<usize>,
    pub d_steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub sharpness: f64,
    pub reward_baseline: f64,
    pub mle_mix_ratio: f64,
    pub mrt_sample_size: usize,
    pub mrt_alpha: f64,
    pub schedule: Schedule,
    pub seed: u64,
    pub batch_size: usize,
    pub clip_norm: f64,
    pub optimizer: OptimizerKind,
    pub disc_learning_rate: f64,
    pub disc_mode: DiscMode,
    pub patience: usize,
    pub max_mle_epochs: usize,
    pub disc_pretrain_epochs: usize,
    /// Decoding cap during training; `None` uses [`decode_limit`].
    pub max_len: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            sharpness: 1.0,
            reward_baseline: 1e-4,
            mle_mix_ratio: 0.5,
            mrt_sample_size: 25,
            mrt_alpha: 5e-3,
            schedule: Schedule::default(),
            seed: 1,
            batch_size: 16,
            clip_norm: 5.0,
            optimizer: OptimizerKind::Sgd,
            disc_learning_rate: 0.5,
            disc_mode: DiscMode::Regression,
            patience: 2,
            max_mle_epochs: 30,
            disc_pretrain_epochs: 3,
            max_len: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(contract(format!("invalid training config: {what}")));
        if !(self.learning_rate > 0.0) || !(self.disc_learning_rate > 0.0) {
            return bad("learning rates must be positive");
        }
        if !(self.sharpness > 0.0) || !self.sharpness.is_finite() {
            return bad("sharpness must be positive");
        }
        if !(self.reward_baseline >= 0.0) {
            return bad("reward_baseline must be nonnegative");
        }
        if !(0.0..=1.0).contains(&self.mle_mix_ratio) {
            return bad("mle_mix_ratio must lie in [0, 1]");
        }
        if self.mrt_sample_size < 2 {
            return bad("mrt_sample_size must be at least 2");
        }
        if !self.mrt_alpha.is_finite() || self.mrt_alpha <= 0.0 {
            return bad("mrt_alpha must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.max_len == Some(0) {
            return bad("max_len must be positive");
        }
        Ok(())
    }

    pub fn decode_len(&self, source_len: usize) -> usize {
        self.max_len.unwrap_or_else(|| decode_limit(source_len))
    }

    pub fn generator_optimizer(&self) -> Optimizer {
        Optimizer::new(self.optimizer, self.learning_rate, self.clip_norm)
    }

    pub fn discriminator_optimizer(&self) -> Optimizer {
        Optimizer::new(self.optimizer, self.disc_learning_rate, self.clip_norm)
    }
}

/// Decoding cap for a source of length `j`.
pub fn decode_limit(j: usize) -> usize {
    2 * j + 5
}
