use serde::{Deserialize, Serialize};

use super::{Dataset, Target};
use crate::tensor::Tensor;

/// Below this standard deviation a column is only centred.
pub const SIGMA_GUARD: f64 = 1e-12;

/// Per-column centre and scale, estimated on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
    /// Empty for classification.
    pub target_mean: Vec<f64>,
    pub target_scale: Vec<f64>,
}

fn moments<'a>(rows: impl Iterator<Item = &'a [f64]>, width: usize) -> (Vec<f64>, Vec<f64>) {
    let mut n = 0usize;
    let mut sum = vec![0.0; width];
    let rows: Vec<&[f64]> = rows.collect();
    for r in &rows {
        n += 1;
        for (s, v) in sum.iter_mut().zip(r.iter()) {
            *s += v;
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / n.max(1) as f64).collect();
    let mut var = vec![0.0; width];
    for r in &rows {
        for c in 0..width {
            let d = r[c] - mean[c];
            var[c] += d * d;
        }
    }
    let scale = var
        .iter()
        .map(|v| {
            let sd = (v / n.max(1) as f64).sqrt();
            if sd < SIGMA_GUARD { 1.0 } else { sd }
        })
        .collect();
    (mean, scale)
}

fn apply(t: &Tensor, mean: &[f64], scale: &[f64]) -> Tensor {
    let mut out = t.clone();
    for r in 0..t.rows() {
        for c in 0..t.cols() {
            out.set(r, c, (t.get(r, c) - mean[c]) / scale[c]);
        }
    }
    out
}

impl Scaling {
    pub fn apply_inputs(&self, x: &Tensor) -> Tensor {
        apply(x, &self.input_mean, &self.input_scale)
    }

    pub fn apply_targets(&self, y: &Tensor) -> Tensor {
        apply(y, &self.target_mean, &self.target_scale)
    }

    pub fn invert_targets(&self, y: &Tensor) -> Tensor {
        let mut out = y.clone();
        for r in 0..y.rows() {
            for c in 0..y.cols() {
                out.set(r, c, y.get(r, c) * self.target_scale[c] + self.target_mean[c]);
            }
        }
        out
    }

    pub fn invert_inputs(&self, x: &Tensor) -> Tensor {
        let mut out = x.clone();
        for r in 0..x.rows() {
            for c in 0..x.cols() {
                out.set(r, c, x.get(r, c) * self.input_scale[c] + self.input_mean[c]);
            }
        }
        out
    }

    pub fn apply(&self, d: &Dataset) -> Dataset {
        let mut out = d.clone();
        for s in &mut out.series {
            s.inputs = self.apply_inputs(&s.inputs);
            if let Target::Values(v) = &s.target {
                s.target = Target::Values(self.apply_targets(v));
            }
        }
        out
    }
}

/// Centres and scales inputs and real-valued targets with statistics from
/// the series listed in `train`. Class labels are left as indices; see
/// [`one_hot`].
pub fn preprocess(d: &Dataset, train: &[usize]) -> (Dataset, Scaling) {
    let (input_mean, input_scale) = moments(
        train.iter().flat_map(|&i| {
            let x = &d.series[i].inputs;
            (0..x.rows()).map(move |r| x.row(r))
        }),
        d.inputs,
    );
    let (target_mean, target_scale) = match d.task {
        crate::model::Task::Regression => moments(
            train.iter().flat_map(|&i| match &d.series[i].target {
                Target::Values(v) => (0..v.rows()).map(move |r| v.row(r)),
                Target::Class(_) => unreachable!("regression dataset with a class target"),
            }),
            d.outputs,
        ),
        crate::model::Task::Classification => (Vec::new(), Vec::new()),
    };
    let scaling = Scaling { input_mean, input_scale, target_mean, target_scale };
    (scaling.apply(d), scaling)
}

pub fn one_hot(label: usize, classes: usize) -> Vec<f64> {
    let mut v = vec![0.0; classes];
    v[label] = 1.0;
    v
}
