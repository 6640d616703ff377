//! LSTM reference recurrence shared by the oracle and acceptance tests.

#![allow(dead_code)]

use arn_core::compiler::{NeuronKernel, Slot};
use arn_core::rng;
use arn_core::tensor::{forward_kernel, LayerState, LayerVars, LayerWeights, Tape, Tensor};
use rand::Rng;

pub fn random_tensor(rows: usize, cols: usize, r: &mut rng::Rng) -> Tensor {
    Tensor::from_vec(rows, cols, (0..rows * cols).map(|_| r.random_range(-0.8..0.8)).collect())
}

pub fn random_weights(k: &NeuronKernel, r: &mut rng::Rng) -> LayerWeights {
    let (l, n) = (k.layout.nodes, k.layout.inputs);
    let mut w = LayerWeights {
        nodes: l,
        u: random_tensor(5 * l, n, r),
        w: random_tensor(5 * l, l, r),
        p: random_tensor(5 * l, l, r),
        b: random_tensor(1, 5 * l, r),
        aux: k.layout.aux.iter().map(|_| random_tensor(1, l, r)).collect(),
    };
    for row in 0..5 * l {
        w.w.set(row, row % l, 0.0);
        w.p.set(row, row % l, 0.0);
    }
    w
}

/// Runs the compiled kernel over `xs` (one `1 x n_in` row per step) and
/// returns `(s0, y)` after every step.
pub fn run_kernel(k: &NeuronKernel, w: &LayerWeights, xs: &[Vec<f64>]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut tape = Tape::new();
    let vars = LayerVars::bind(&mut tape, k, w, 1);
    let mut st = LayerState::zeros(&mut tape, 1, w.nodes);
    let mut out = Vec::new();
    for x in xs {
        let xv = tape.constant(Tensor::row_vector(x.clone()));
        st = forward_kernel(&mut tape, k, &vars, &st, xv);
        out.push((tape.value(st.get(Slot::S0)).data().to_vec(), tape.value(st.y()).data().to_vec()));
    }
    out
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Peephole LSTM written out directly. Gate `g` uses `U_g x + 2 b_g`
/// (input term and recurrent term each carry a bias), aux vectors on the
/// self terms and hollow `W_g` on the other outputs.
pub fn lstm_oracle(k: &NeuronKernel, w: &LayerWeights, xs: &[Vec<f64>]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let l = w.nodes;
    // aux vectors of each mapping in source order
    let aux = |m: u8, nth: usize| -> &Tensor {
        let mut sites: Vec<(usize, usize)> =
            k.layout.aux.iter().enumerate().filter(|(_, a)| a.mapping == m).map(|(i, a)| (a.site, i)).collect();
        sites.sort();
        &w.aux[sites[nth].1]
    };
    let lin = |g: usize, x: &[f64], y: &[f64], i: usize| -> f64 {
        let row = g * l + i;
        let mut s = 2.0 * w.b.get(0, row);
        for (c, xv) in x.iter().enumerate() {
            s += w.u.get(row, c) * xv;
        }
        for j in 0..l {
            if j != i {
                s += w.w.get(row, j) * y[j];
            }
        }
        s
    };
    let mut s0 = vec![0.0; l];
    let mut y = vec![0.0; l];
    let mut out = Vec::new();
    for x in xs {
        let mut ns0 = vec![0.0; l];
        let mut ny = vec![0.0; l];
        for i in 0..l {
            let z = (lin(0, x, &y, i) + aux(0, 0).get(0, i) * y[i]).tanh();
            let ig = logistic(lin(1, x, &y, i) + aux(1, 0).get(0, i) * s0[i] + aux(1, 1).get(0, i) * y[i]);
            let fg = logistic(1.0 + lin(2, x, &y, i) + aux(2, 0).get(0, i) * s0[i] + aux(2, 1).get(0, i) * y[i]);
            ns0[i] = fg * s0[i] + ig * z;
            let og = logistic(lin(3, x, &y, i) + aux(3, 0).get(0, i) * ns0[i] + aux(3, 1).get(0, i) * y[i]);
            ny[i] = og * ns0[i].tanh();
        }
        s0 = ns0;
        y = ny;
        out.push((s0.clone(), y.clone()));
    }
    out
}

/// Largest deviation between the compiled LSTM kernel and [`lstm_oracle`]
/// over `seeds` random weight draws (`l = 3`, two inputs, four steps).
pub fn lstm_max_error(k: &NeuronKernel, seeds: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..seeds {
        let mut r = rng::stream(seed, 99);
        let w = random_weights(k, &mut r);
        let xs: Vec<Vec<f64>> = (0..4).map(|_| vec![r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]).collect();
        for ((a0, ay), (b0, by)) in run_kernel(k, &w, &xs).iter().zip(lstm_oracle(k, &w, &xs)) {
            for i in 0..a0.len() {
                worst = worst.max((a0[i] - b0[i]).abs()).max((ay[i] - by[i]).abs());
            }
        }
    }
    worst
}
