use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::{LayerWeights, Tensor};
use crate::compiler::WeightLayout;
use crate::dsl::NUM_MAPPINGS;
use crate::rng::{self, Rng};

/// Scale applied to both forward and recurrent initialisations.
pub const INIT_SCALE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InitOptions {
    /// Added to every entry of `b_i` after initialisation.
    pub extra_bias: [f64; NUM_MAPPINGS],
}

/// `rows x cols` matrix uniform on `±scale·sqrt(6/(fan_in+fan_out))`.
pub fn glorot_uniform(rows: usize, cols: usize, scale: f64, rng: &mut Rng) -> Tensor {
    let bound = scale * (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.random_range(-bound..=bound)).collect();
    Tensor::from_vec(rows, cols, data)
}

/// Random `n x n` orthogonal matrix times `scale`: Q from the QR
/// factorisation of a Gaussian matrix, columns sign-corrected by `diag(R)`.
pub fn orthogonal(n: usize, scale: f64, rng: &mut Rng) -> Tensor {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let mut out = Tensor::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, scale * q[(i, j)]);
        }
    }
    out
}

fn stacked_orthogonal(l: usize, rng: &mut Rng) -> Tensor {
    let mut out = Tensor::zeros(NUM_MAPPINGS * l, l);
    for m in 0..NUM_MAPPINGS {
        let q = orthogonal(l, INIT_SCALE, rng);
        for i in 0..l {
            for j in 0..l {
                out.set(m * l + i, j, if i == j { 0.0 } else { q.get(i, j) });
            }
        }
    }
    out
}

/// Initial recurrent-layer weights for `layout`, deterministic in `seed`.
pub fn init_weights(layout: &WeightLayout, seed: u64, opts: &InitOptions) -> LayerWeights {
    let l = layout.nodes;
    let mut r = rng::stream(seed, rng::streams::INIT);
    let mut u = Tensor::zeros(NUM_MAPPINGS * l, layout.inputs);
    for m in 0..NUM_MAPPINGS {
        let block = glorot_uniform(l, layout.inputs, INIT_SCALE, &mut r);
        for i in 0..l {
            for j in 0..layout.inputs {
                u.set(m * l + i, j, block.get(i, j));
            }
        }
    }
    let w = stacked_orthogonal(l, &mut r);
    let p = stacked_orthogonal(l, &mut r);
    let mut b = Tensor::zeros(1, NUM_MAPPINGS * l);
    for m in 0..NUM_MAPPINGS {
        for i in 0..l {
            b.set(0, m * l + i, opts.extra_bias[m]);
        }
    }
    let aux = layout.aux.iter().map(|_| Tensor::filled(1, l, 1.0)).collect();
    LayerWeights { nodes: l, u, w, p, b, aux }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::AuxSite;

    #[test]
    fn orthogonal_gram_is_scaled_identity() {
        let mut r = rng::stream(7, 0);
        for n in [2, 3, 8, 16] {
            let q = orthogonal(n, 0.1, &mut r);
            let g = q.transpose().matmul(&q);
            for i in 0..n {
                for j in 0..n {
                    let e = if i == j { 0.01 } else { 0.0 };
                    assert!((g.get(i, j) - e).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn layout_init_properties() {
        let layout = WeightLayout {
            nodes: 6,
            inputs: 3,
            aux: vec![AuxSite { mapping: 0, site: 4 }, AuxSite { mapping: 2, site: 9 }],
        };
        let a = init_weights(&layout, 11, &InitOptions::default());
        let b = init_weights(&layout, 11, &InitOptions::default());
        assert_eq!(a, b);
        let bound = 0.1 * (6.0f64 / 9.0).sqrt();
        assert!(a.u.max_abs() <= bound);
        assert_eq!(a.u.shape(), (30, 3));
        assert_eq!(a.w.shape(), (30, 6));
        for r in 0..30 {
            assert_eq!(a.w.get(r, r % 6), 0.0);
            assert_eq!(a.p.get(r, r % 6), 0.0);
        }
        assert_eq!(a.b.max_abs(), 0.0);
        assert_eq!(a.aux.len(), 2);
        assert!(a.aux.iter().all(|v| v.data().iter().all(|&x| x == 1.0)));
        let c = init_weights(&layout, 12, &InitOptions::default());
        assert_ne!(a.u, c.u);
    }

    #[test]
    fn extra_bias_targets_one_mapping() {
        let layout = WeightLayout { nodes: 2, inputs: 1, aux: vec![] };
        let mut opts = InitOptions::default();
        opts.extra_bias[2] = 1.0;
        let w = init_weights(&layout, 0, &opts);
        assert_eq!(w.b.data(), &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }
}
