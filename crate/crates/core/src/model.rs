//! The full network: one recurrent layer of compiled neurons followed by a
//! tanh layer and a linear layer with `n_out` nodes each.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::{self, CompileError, NeuronKernel};
use crate::data::{Series, Target};
use crate::dsl::TypedProgram;
use crate::rng;
use crate::tensor::tape::{log_softmax_at, softmax};
use crate::tensor::{forward_kernel, glorot_uniform, init_weights, InitOptions, LayerState, LayerVars, LayerWeights, Tape, Tensor, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub nodes: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub task: Task,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.nodes.is_power_of_two() || !(2..=128).contains(&self.nodes) {
            return Err(ModelError::Nodes(self.nodes));
        }
        if self.inputs == 0 || self.outputs == 0 {
            return Err(ModelError::Shape("inputs and outputs must be positive".into()));
        }
        if self.task == Task::Classification && self.outputs < 2 {
            return Err(ModelError::Shape("classification needs at least 2 classes".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("node count must be a power of two in 2..=128, got {0}")]
    Nodes(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Compile(#[from] CompileError),
}

/// All trainable weights. Parameter order on a tape is the order of
/// [`NetWeights::tensors`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetWeights {
    pub layer: LayerWeights,
    /// `n_out x l`
    pub v1: Tensor,
    pub c1: Tensor,
    /// `n_out x n_out`
    pub v2: Tensor,
    pub c2: Tensor,
}

impl NetWeights {
    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut v = self.layer.tensors();
        v.extend([&self.v1, &self.c1, &self.v2, &self.c2]);
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.layer.tensors_mut();
        v.extend([&mut self.v1, &mut self.c1, &mut self.v2, &mut self.c2]);
        v
    }

    /// Number of scalar weights.
    pub fn count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Index of the tensors holding hollow blocks (`W` and `P`).
    pub const HOLLOW: [usize; 2] = [1, 2];

    pub fn zero_hollow_diagonals(&mut self) {
        let l = self.layer.nodes;
        for t in [&mut self.layer.w, &mut self.layer.p] {
            for r in 0..t.rows() {
                t.set(r, r % l, 0.0);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Network {
    pub config: NetworkConfig,
    pub kernel: NeuronKernel,
    pub weights: NetWeights,
}

impl Network {
    pub fn new(program: &TypedProgram, config: NetworkConfig, seed: u64, opts: &InitOptions) -> Result<Self, ModelError> {
        config.validate()?;
        let kernel = compiler::compile(program, config.nodes, config.inputs)?;
        let layer = init_weights(&kernel.layout, seed, opts);
        let mut r = rng::stream(seed, rng::streams::BACKEND);
        let (l, o) = (config.nodes, config.outputs);
        let weights = NetWeights {
            layer,
            v1: glorot_uniform(o, l, crate::tensor::init::INIT_SCALE, &mut r),
            c1: Tensor::zeros(1, o),
            v2: glorot_uniform(o, o, crate::tensor::init::INIT_SCALE, &mut r),
            c2: Tensor::zeros(1, o),
        };
        Ok(Network { config, kernel, weights })
    }

    /// Rebuilds a network around stored weights.
    pub fn with_weights(program: &TypedProgram, config: NetworkConfig, weights: NetWeights) -> Result<Self, ModelError> {
        config.validate()?;
        let kernel = compiler::compile(program, config.nodes, config.inputs)?;
        let expect = init_weights(&kernel.layout, 0, &InitOptions::default());
        let ok = weights.layer.nodes == config.nodes
            && weights.layer.u.shape() == expect.u.shape()
            && weights.layer.aux.len() == expect.aux.len()
            && weights.v1.shape() == (config.outputs, config.nodes)
            && weights.v2.shape() == (config.outputs, config.outputs);
        if !ok {
            return Err(ModelError::Shape("stored weights do not match the program and config".into()));
        }
        Ok(Network { config, kernel, weights })
    }
}

/// A minibatch of equally long series, laid out per timestep.
#[derive(Debug, Clone)]
pub struct Batch {
    /// One `batch x n_in` tensor per timestep.
    pub xs: Vec<Tensor>,
    pub targets: Targets,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    /// One `batch x n_out` tensor per timestep.
    Values(Vec<Tensor>),
    Classes(Vec<usize>),
}

impl Batch {
    pub fn size(&self) -> usize {
        self.xs.first().map_or(0, Tensor::rows)
    }

    pub fn collate(series: &[&Series]) -> Result<Batch, ModelError> {
        let first = series.first().ok_or_else(|| ModelError::Shape("empty batch".into()))?;
        let (nt, nin) = first.inputs.shape();
        if nt == 0 {
            return Err(ModelError::Shape("series without timesteps".into()));
        }
        let b = series.len();
        let mut xs = vec![Tensor::zeros(b, nin); nt];
        let mut classes = Vec::new();
        let mut values: Vec<Tensor> = Vec::new();
        for (i, s) in series.iter().enumerate() {
            if s.inputs.shape() != (nt, nin) {
                return Err(ModelError::Shape("series in a batch differ in shape".into()));
            }
            for (t, x) in xs.iter_mut().enumerate() {
                for c in 0..nin {
                    x.set(i, c, s.inputs.get(t, c));
                }
            }
            match &s.target {
                Target::Class(k) => classes.push(*k),
                Target::Values(v) => {
                    if v.rows() != nt {
                        return Err(ModelError::Shape("target length differs from input length".into()));
                    }
                    if values.is_empty() {
                        values = vec![Tensor::zeros(b, v.cols()); nt];
                    }
                    if values[0].cols() != v.cols() {
                        return Err(ModelError::Shape("target widths differ".into()));
                    }
                    for (t, y) in values.iter_mut().enumerate() {
                        for c in 0..v.cols() {
                            y.set(i, c, v.get(t, c));
                        }
                    }
                }
            }
        }
        let targets = match (classes.len(), values.is_empty()) {
            (n, true) if n == b => Targets::Classes(classes),
            (0, false) => Targets::Values(values),
            _ => return Err(ModelError::Shape("mixed target kinds in one batch".into())),
        };
        Ok(Batch { xs, targets })
    }
}

/// A recorded forward pass.
pub struct Forward {
    pub tape: Tape,
    /// Per-timestep predictions for regression, final logits for classification.
    pub outputs: Vec<Var>,
    pub loss: Var,
}

/// Unrolls the network over `batch` from the all-zero state and records
/// the loss. Parameters are registered in [`NetWeights::tensors`] order.
pub fn forward_net(net: &Network, batch: &Batch) -> Result<Forward, ModelError> {
    let cfg = &net.config;
    let b = batch.size();
    for x in &batch.xs {
        if x.shape() != (b, cfg.inputs) {
            return Err(ModelError::Shape(format!("expected {} inputs, got {}", cfg.inputs, x.cols())));
        }
    }
    let mut tape = Tape::new();
    let vars = LayerVars::bind(&mut tape, &net.kernel, &net.weights.layer, b);
    let v1 = tape.param(net.weights.v1.clone());
    let c1 = tape.param(net.weights.c1.clone());
    let v2 = tape.param(net.weights.v2.clone());
    let c2 = tape.param(net.weights.c2.clone());
    let mut state = LayerState::zeros(&mut tape, b, cfg.nodes);
    let nt = batch.xs.len();
    let backend = |tape: &mut Tape, y: Var| {
        let h = tape.matmul_t(y, v1, None);
        let h = tape.add_row(h, c1);
        let h = tape.act(crate::dsl::Activation::Tanh, h);
        let o = tape.matmul_t(h, v2, None);
        tape.add_row(o, c2)
    };
    let mut outputs = Vec::new();
    let mut losses = Vec::new();
    for (t, x) in batch.xs.iter().enumerate() {
        let xv = tape.constant(x.clone());
        state = forward_kernel(&mut tape, &net.kernel, &vars, &state, xv);
        match &batch.targets {
            Targets::Values(ys) => {
                if ys[t].shape() != (b, cfg.outputs) {
                    return Err(ModelError::Shape("target width does not match outputs".into()));
                }
                let o = backend(&mut tape, state.y());
                losses.push(tape.mse(o, ys[t].clone()));
                outputs.push(o);
            }
            Targets::Classes(labels) if t + 1 == nt => {
                if labels.iter().any(|&k| k >= cfg.outputs) {
                    return Err(ModelError::Shape("label exceeds class count".into()));
                }
                let o = backend(&mut tape, state.y());
                losses.push(tape.softmax_ce(o, labels.clone()));
                outputs.push(o);
            }
            Targets::Classes(_) => {}
        }
    }
    let mut loss = losses[0];
    for &l in &losses[1..] {
        loss = tape.add(loss, l);
    }
    if losses.len() > 1 {
        loss = tape.scale(loss, 1.0 / losses.len() as f64);
    }
    Ok(Forward { tape, outputs, loss })
}

/// Loss and gradients in [`NetWeights::tensors`] order.
pub fn loss_and_grads(net: &Network, batch: &Batch) -> Result<(f64, Vec<Tensor>), ModelError> {
    let f = forward_net(net, batch)?;
    let loss = f.tape.value(f.loss).item();
    let g = f.tape.backward(f.loss);
    Ok((loss, g.grads))
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Mean softmax cross entropy of `logits` rows against `labels`.
pub fn cross_entropy(logits: &Tensor, labels: &[usize]) -> f64 {
    let s: f64 = labels.iter().enumerate().map(|(r, &y)| -log_softmax_at(logits.row(r), y)).sum();
    s / labels.len() as f64
}

pub fn accuracy(logits: &Tensor, labels: &[usize]) -> f64 {
    let hits = labels.iter().enumerate().filter(|(r, &y)| argmax(logits.row(*r)) == y).count();
    hits as f64 / labels.len() as f64
}

pub fn softmax_rows(logits: &Tensor) -> Tensor {
    softmax(logits)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Cross entropy or mean squared error.
    pub loss: f64,
    pub accuracy: Option<f64>,
    pub examples: usize,
}

/// Per-series predictions: logits row for classification, `n_t x n_out`
/// for regression.
pub fn predict(net: &Network, series: &[&Series], batch_size: usize) -> Result<Vec<Tensor>, ModelError> {
    let mut out = Vec::with_capacity(series.len());
    for chunk in batches_by_length(series, batch_size) {
        let batch = Batch::collate(&chunk)?;
        let f = forward_net(net, &batch)?;
        let n = chunk.len();
        match &batch.targets {
            Targets::Classes(_) => {
                let lv = f.tape.value(f.outputs[0]);
                for i in 0..n {
                    out.push(Tensor::row_vector(lv.row(i).to_vec()));
                }
            }
            Targets::Values(_) => {
                let nt = f.outputs.len();
                for i in 0..n {
                    let mut p = Tensor::zeros(nt, net.config.outputs);
                    for (t, o) in f.outputs.iter().enumerate() {
                        for c in 0..net.config.outputs {
                            p.set(t, c, f.tape.value(*o).get(i, c));
                        }
                    }
                    out.push(p);
                }
            }
        }
    }
    Ok(out)
}

/// Loss (and accuracy for classification) over whole series.
pub fn evaluate(net: &Network, series: &[&Series], batch_size: usize) -> Result<Metrics, ModelError> {
    let preds = predict(net, series, batch_size)?;
    Ok(metrics(&preds, series))
}

/// Metrics of precomputed predictions, in [`predict`] layout.
pub fn metrics(preds: &[Tensor], series: &[&Series]) -> Metrics {
    let n = series.len();
    let mut loss = 0.0;
    let mut hits = 0usize;
    let mut classification = false;
    for (p, s) in preds.iter().zip(series) {
        match &s.target {
            Target::Class(k) => {
                classification = true;
                loss += -log_softmax_at(p.data(), *k);
                hits += usize::from(argmax(p.data()) == *k);
            }
            Target::Values(v) => {
                let se: f64 = p.data().iter().zip(v.data()).map(|(a, b)| (a - b) * (a - b)).sum();
                loss += se / p.len() as f64;
            }
        }
    }
    Metrics {
        loss: loss / n as f64,
        accuracy: classification.then(|| hits as f64 / n as f64),
        examples: n,
    }
}

/// Groups consecutive series into batches of at most `size`, splitting
/// whenever the series length changes.
fn batches_by_length<'a>(series: &[&'a Series], size: usize) -> Vec<Vec<&'a Series>> {
    let mut out: Vec<Vec<&Series>> = Vec::new();
    for &s in series {
        match out.last_mut() {
            Some(cur) if cur.len() < size.max(1) && cur[0].inputs.rows() == s.inputs.rows() => cur.push(s),
            _ => out.push(vec![s]),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.0, 0.0]), 0);
        assert_eq!(argmax(&[0.1, 0.3, 0.3]), 1);
    }

    #[test]
    fn accuracy_on_toy_set() {
        let logits = Tensor::from_vec(4, 3, vec![
            0.9, 0.1, 0.0, //
            0.2, 0.2, 0.1, //
            0.0, 0.5, 0.7, //
            -1.0, -2.0, -0.5,
        ]);
        // argmaxes: 0, 0 (tie), 2, 2
        assert_eq!(accuracy(&logits, &[0, 1, 2, 2]), 0.75);
    }

    #[test]
    fn cross_entropy_matches_two_pass_formula() {
        let logits = Tensor::from_vec(2, 3, vec![0.3, -1.2, 2.0, 0.5, 0.4, -0.1]);
        let labels = [2, 0];
        let mut direct = 0.0;
        for (r, &y) in labels.iter().enumerate() {
            let row = logits.row(r);
            let z: f64 = row.iter().map(|v| v.exp()).sum();
            direct += -(row[y].exp() / z).ln();
        }
        assert!((cross_entropy(&logits, &labels) - direct / 2.0).abs() < 1e-14);
    }
}
