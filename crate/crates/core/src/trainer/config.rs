use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr0: 0.01, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Linear decay from `lr0` to `lr0 * decay_factor` over `decay_steps`
/// updates, constant afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    pub decay_steps: usize,
    pub decay_factor: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { decay_steps: 80_000, decay_factor: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub schedule: Schedule,
    pub batch_size: usize,
    pub total_examples: usize,
    pub checkpoint_every: usize,
    /// Series per forward pass when evaluating; does not affect results.
    pub eval_batch: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            adam: AdamConfig::default(),
            schedule: Schedule::default(),
            batch_size: 4,
            total_examples: 320_000,
            checkpoint_every: 20_000,
            eval_batch: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid training config: {0}")]
    Invalid(String),
    #[error("cannot parse training config: {0}")]
    Parse(String),
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.into()));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.total_examples == 0 || !self.total_examples.is_multiple_of(self.batch_size) {
            return bad("total_examples must be a positive multiple of batch_size");
        }
        if self.checkpoint_every == 0 || !self.checkpoint_every.is_multiple_of(self.batch_size) {
            return bad("checkpoint_every must be a positive multiple of batch_size");
        }
        if !(0.0..=1.0).contains(&self.schedule.decay_factor) {
            return bad("decay_factor must lie in [0, 1]");
        }
        if !(self.adam.lr0 > 0.0) || !(0.0..1.0).contains(&self.adam.beta1) || !(0.0..1.0).contains(&self.adam.beta2) || !(self.adam.epsilon > 0.0) {
            return bad("adam parameters out of range");
        }
        if self.eval_batch == 0 {
            return bad("eval_batch must be at least 1");
        }
        Ok(())
    }

    /// Number of weight updates in a full session.
    pub fn updates(&self) -> usize {
        self.total_examples / self.batch_size
    }

    /// Validation evaluations in a full session.
    pub fn evaluations(&self) -> usize {
        self.total_examples.div_ceil(self.checkpoint_every)
    }

    pub fn lr_at(&self, step: usize) -> f64 {
        let s = &self.schedule;
        let lr0 = self.adam.lr0;
        if s.decay_steps == 0 || step >= s.decay_steps {
            return lr0 * s.decay_factor;
        }
        let frac = step as f64 / s.decay_steps as f64;
        lr0 * (1.0 - (1.0 - s.decay_factor) * frac)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: TrainConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}
