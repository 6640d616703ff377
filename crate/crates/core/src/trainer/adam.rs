use super::AdamConfig;
use crate::model::NetWeights;
use crate::tensor::Tensor;

/// First and second moments per weight tensor plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    /// Number of updates applied so far.
    pub t: u64,
}

impl AdamState {
    pub fn new(w: &NetWeights) -> Self {
        let zeros: Vec<Tensor> = w.tensors().iter().map(|t| Tensor::zeros(t.rows(), t.cols())).collect();
        AdamState { m: zeros.clone(), v: zeros, t: 0 }
    }
}

/// One bias-corrected ADAM update of `w` at step `t >= 1`.
pub fn adam_update(w: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], t: u64, lr: f64, c: &AdamConfig) {
    assert!(t >= 1, "ADAM steps are numbered from 1");
    let bc1 = 1.0 - c.beta1.powi(t as i32);
    let bc2 = 1.0 - c.beta2.powi(t as i32);
    for i in 0..w.len() {
        m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
        v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
        let mh = m[i] / bc1;
        let vh = v[i] / bc2;
        w[i] -= lr * mh / (vh.sqrt() + c.epsilon);
    }
}

/// Updates all network weights, then forces the hollow diagonals back to 0.
pub fn adam_step(w: &mut NetWeights, grads: &[Tensor], s: &mut AdamState, lr: f64, c: &AdamConfig) {
    s.t += 1;
    for (((w, g), m), v) in w.tensors_mut().into_iter().zip(grads).zip(&mut s.m).zip(&mut s.v) {
        adam_update(w.data_mut(), g.data(), m.data_mut(), v.data_mut(), s.t, lr, c);
    }
    w.zero_hollow_diagonals();
}
