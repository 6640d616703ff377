use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::TrainConfig;
use crate::rng;

/// A closed interval, sampled uniformly or log-uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub log: bool,
}

impl Range {
    pub const fn linear(lo: f64, hi: f64) -> Self {
        Range { lo, hi, log: false }
    }

    pub const fn log(lo: f64, hi: f64) -> Self {
        Range { lo, hi, log: true }
    }

    fn check(&self, name: &str) -> Result<(), SearchError> {
        let ok = self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi && (!self.log || self.lo > 0.0);
        if ok { Ok(()) } else { Err(SearchError::EmptyRange(name.to_owned())) }
    }

    pub fn sample(&self, r: &mut rng::Rng) -> f64 {
        if self.lo == self.hi {
            return self.lo;
        }
        let v = if self.log {
            r.random_range(self.lo.ln()..=self.hi.ln()).exp()
        } else {
            r.random_range(self.lo..=self.hi)
        };
        v.clamp(self.lo, self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.lo..=self.hi).contains(&v)
    }
}

/// Ranges for the ADAM hyperparameters and the decay schedule. The decay
/// length is a fraction of the session's update count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSpace {
    pub lr0: Range,
    pub one_minus_beta1: Range,
    pub one_minus_beta2: Range,
    pub epsilon: Range,
    pub decay_fraction: Range,
    pub decay_factor: Range,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            lr0: Range::log(1e-4, 1e-1),
            one_minus_beta1: Range::log(1e-3, 1.0),
            one_minus_beta2: Range::log(1e-4, 1e-1),
            epsilon: Range::log(1e-10, 1.0),
            decay_fraction: Range::linear(0.5, 1.0),
            decay_factor: Range::log(1e-3, 0.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("search range for {0} is empty or invalid")]
    EmptyRange(String),
    #[error("search budget must be at least 1")]
    NoBudget,
}

impl SearchSpace {
    pub fn validate(&self) -> Result<(), SearchError> {
        self.lr0.check("lr0")?;
        self.one_minus_beta1.check("one_minus_beta1")?;
        self.one_minus_beta2.check("one_minus_beta2")?;
        self.epsilon.check("epsilon")?;
        self.decay_fraction.check("decay_fraction")?;
        self.decay_factor.check("decay_factor")?;
        let unit = |r: &Range| r.lo >= 0.0 && r.hi <= 1.0;
        if !unit(&self.decay_factor) || !unit(&self.decay_fraction) || !(self.one_minus_beta1.lo > 0.0) || !(self.one_minus_beta2.lo > 0.0) || self.one_minus_beta1.hi > 1.0 || self.one_minus_beta2.hi > 1.0 {
            return Err(SearchError::EmptyRange("a range outside (0, 1]".into()));
        }
        Ok(())
    }

    /// One configuration: `base` with the searched fields replaced.
    pub fn sample(&self, base: &TrainConfig, r: &mut rng::Rng) -> TrainConfig {
        let mut c = *base;
        c.adam.lr0 = self.lr0.sample(r);
        c.adam.beta1 = 1.0 - self.one_minus_beta1.sample(r);
        c.adam.beta2 = 1.0 - self.one_minus_beta2.sample(r);
        c.adam.epsilon = self.epsilon.sample(r);
        c.schedule.decay_steps = (self.decay_fraction.sample(r) * base.updates() as f64).round() as usize;
        c.schedule.decay_factor = self.decay_factor.sample(r);
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best_index: usize,
    pub best: TrainConfig,
    pub samples: Vec<TrainConfig>,
    pub scores: Vec<f64>,
}

/// Samples `budget` configurations, scores each with `objective` (lower is
/// better; evaluated in parallel) and returns the argmin. Non-finite scores
/// never win; ties go to the lowest sample index.
pub fn random_search<F>(space: &SearchSpace, base: &TrainConfig, budget: usize, seed: u64, objective: F) -> Result<SearchResult, SearchError>
where
    F: Fn(usize, &TrainConfig) -> f64 + Sync,
{
    space.validate()?;
    if budget == 0 {
        return Err(SearchError::NoBudget);
    }
    let mut r = rng::stream(seed, rng::streams::SEARCH);
    let samples: Vec<TrainConfig> = (0..budget).map(|_| space.sample(base, &mut r)).collect();
    let scores: Vec<f64> = samples.par_iter().enumerate().map(|(i, c)| objective(i, c)).collect();
    let mut best_index = 0;
    for (i, &s) in scores.iter().enumerate() {
        let b = scores[best_index];
        if s.is_finite() && (!b.is_finite() || s < b) {
            best_index = i;
        }
    }
    Ok(SearchResult { best_index, best: samples[best_index], samples, scores })
}
