//! Datasets of equally long multivariate series.

mod csv_format;
mod pendulum;
mod preprocess;
mod snapshot;
mod split;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Task;
use crate::tensor::Tensor;

pub use csv_format::{load_csv, read_csv, write_csv};
pub use pendulum::{gen_double_pendulum, pendulum_energy, simulate_pendulum, PendulumParams, PendulumState, DT_INTERNAL, GRAVITY};
pub use preprocess::{one_hot, preprocess, Scaling};
pub use snapshot::{cache_dir, load_snapshot, save_snapshot, CACHE_DIR_ENV};
pub use split::{split, Splits};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Target {
    Class(usize),
    /// `n_t x n_out`
    Values(Tensor),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub id: String,
    /// `n_t x n_in`
    pub inputs: Tensor,
    pub target: Target,
}

impl Series {
    pub fn timesteps(&self) -> usize {
        self.inputs.rows()
    }

    /// The final `k` timesteps (all of them if the series is shorter).
    pub fn last_steps(&self, k: usize) -> Series {
        let nt = self.timesteps();
        let start = nt.saturating_sub(k);
        let len = nt - start;
        Series {
            id: self.id.clone(),
            inputs: self.inputs.rows_slice(start, len),
            target: match &self.target {
                Target::Class(c) => Target::Class(*c),
                Target::Values(v) => Target::Values(v.rows_slice(start, len)),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub task: Task,
    pub inputs: usize,
    /// Target width for regression, class count for classification.
    pub outputs: usize,
    pub series: Vec<Series>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn timesteps(&self) -> usize {
        self.series.first().map_or(0, Series::timesteps)
    }

    pub fn refs(&self, idx: &[usize]) -> Vec<&Series> {
        idx.iter().map(|&i| &self.series[i]).collect()
    }
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("missing column: {0}")]
    MissingColumn(String),
    #[error("line {line}, column {column}: not a number: {value:?}")]
    NonNumeric { line: usize, column: String, value: String },
    #[error("series {series}: {msg}")]
    Ragged { series: String, msg: String },
    #[error("{0} series cannot be split into non-empty train, validation and test parts")]
    TooFewSeries(usize),
    #[error("snapshot: {0}")]
    Snapshot(String),
}
