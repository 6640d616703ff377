use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::DataError;
use crate::rng;

/// Disjoint series indices. The test part is meant to be evaluated once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub test_use_once: bool,
}

/// Shuffles `0..n` and cuts it into `ceil(n/2)`, `ceil(n/4)` and the rest.
pub fn split(n: usize, seed: u64) -> Result<Splits, DataError> {
    let n_train = n.div_ceil(2);
    let n_val = n.div_ceil(4);
    if n < 4 || n_train + n_val >= n {
        return Err(DataError::TooFewSeries(n));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, rng::streams::SPLIT));
    let test = idx.split_off(n_train + n_val);
    let validation = idx.split_off(n_train);
    Ok(Splits { train: idx, validation, test, test_use_once: true })
}
