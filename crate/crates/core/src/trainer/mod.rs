//! ADAM training with a linear learning-rate decay and validation
//! checkpointing, plus random hyperparameter search.

mod adam;
mod config;
mod search;

use serde::{Deserialize, Serialize};

use crate::data::Series;
use crate::model::{self, Batch, ModelError, NetWeights, Network};
use crate::rng;

pub use adam::{adam_step, adam_update, AdamState};
pub use config::{AdamConfig, ConfigError, Schedule, TrainConfig};
pub use search::{random_search, Range, SearchError, SearchResult, SearchSpace};

/// Weights with the best validation loss seen so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub val_loss: f64,
    pub weights: NetWeights,
    /// Training examples consumed when captured.
    pub examples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub examples: usize,
    pub updates: usize,
    /// Mean minibatch loss since the previous checkpoint.
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub best: Checkpoint,
    pub history: Vec<HistoryRow>,
    pub updates: usize,
    pub evaluations: usize,
    /// Training hit a non-finite loss or gradient and stopped.
    pub diverged: bool,
}

impl TrainResult {
    /// The evaluation value of the session: best validation loss, or +inf
    /// if the session diverged.
    pub fn score(&self) -> f64 {
        if self.diverged || !self.best.val_loss.is_finite() {
            f64::INFINITY
        } else {
            self.best.val_loss
        }
    }
}

/// Endless minibatch order over `n` items with a fresh shuffle each epoch.
pub struct Shuffler {
    order: Vec<usize>,
    pos: usize,
    rng: rng::Rng,
}

impl Shuffler {
    pub fn new(n: usize, seed: u64) -> Self {
        Shuffler { order: (0..n).collect(), pos: n, rng: rng::stream(seed, rng::streams::SHUFFLE) }
    }

    pub fn next_batch(&mut self, size: usize) -> Vec<usize> {
        use rand::seq::SliceRandom;
        let mut out = Vec::with_capacity(size);
        while out.len() < size {
            if self.pos == self.order.len() {
                self.order.shuffle(&mut self.rng);
                self.pos = 0;
            }
            out.push(self.order[self.pos]);
            self.pos += 1;
        }
        out
    }
}

/// Trains `net` in place from its current weights and returns the best
/// checkpoint. `net.weights` holds the final weights afterwards.
pub fn train(net: &mut Network, train_set: &[&Series], val_set: &[&Series], cfg: &TrainConfig) -> Result<TrainResult, ModelError> {
    cfg.validate().map_err(|e| ModelError::Shape(e.to_string()))?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(ModelError::Shape("training and validation sets must be non-empty".into()));
    }
    let mut shuffler = Shuffler::new(train_set.len(), cfg.seed);
    let mut adam = AdamState::new(&net.weights);
    let mut best = Checkpoint { val_loss: f64::INFINITY, weights: net.weights.clone(), examples: 0 };
    let mut history = Vec::new();
    let mut examples = 0;
    let mut updates = 0;
    let mut evaluations = 0;
    let mut running = (0.0, 0usize);
    let mut diverged = false;

    let mut checkpoint = |net: &Network, examples: usize, updates: usize, running: &mut (f64, usize), best: &mut Checkpoint| -> Result<(), ModelError> {
        let val = model::evaluate(net, val_set, cfg.eval_batch)?.loss;
        if val.is_finite() && val < best.val_loss {
            *best = Checkpoint { val_loss: val, weights: net.weights.clone(), examples };
        }
        history.push(HistoryRow {
            examples,
            updates,
            train_loss: running.0 / running.1.max(1) as f64,
            val_loss: val,
            lr: cfg.lr_at(updates),
        });
        *running = (0.0, 0);
        Ok(())
    };

    while examples < cfg.total_examples {
        let idx = shuffler.next_batch(cfg.batch_size);
        let batch_series: Vec<&Series> = idx.iter().map(|&i| train_set[i]).collect();
        let batch = Batch::collate(&batch_series)?;
        let (loss, grads) = model::loss_and_grads(net, &batch)?;
        if !loss.is_finite() || !grads.iter().all(|g| g.is_finite()) {
            diverged = true;
            break;
        }
        let lr = cfg.lr_at(updates);
        adam_step(&mut net.weights, &grads, &mut adam, lr, &cfg.adam);
        updates += 1;
        examples += cfg.batch_size;
        running.0 += loss;
        running.1 += 1;
        if examples % cfg.checkpoint_every == 0 {
            evaluations += 1;
            checkpoint(net, examples, updates, &mut running, &mut best)?;
        }
    }
    if !diverged && examples % cfg.checkpoint_every != 0 {
        evaluations += 1;
        checkpoint(net, examples, updates, &mut running, &mut best)?;
    }
    if diverged {
        best.val_loss = f64::INFINITY;
    }
    Ok(TrainResult { best, history, updates, evaluations, diverged })
}
