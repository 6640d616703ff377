use arn_core::data::{Series, Target};
use arn_core::dsl::typecheck;
use arn_core::model::{
    argmax, cross_entropy, evaluate, forward_net, predict, softmax_rows, Batch, Network, NetworkConfig, Task,
};
use arn_core::rng;
use arn_core::tensor::{InitOptions, Tensor};
use arn_core::zoo;
use proptest::prelude::*;
use rand::Rng;

fn net(name: &str, l: usize, inputs: usize, outputs: usize, task: Task, seed: u64) -> Network {
    let p = typecheck(&zoo::program(name).unwrap().unwrap()).unwrap();
    Network::new(&p, NetworkConfig { nodes: l, inputs, outputs, task }, seed, &InitOptions::default()).unwrap()
}

fn random_series(n: usize, nt: usize, inputs: usize, target: impl Fn(usize) -> Target, seed: u64) -> Vec<Series> {
    let mut r = rng::stream(seed, 42);
    (0..n)
        .map(|i| Series {
            id: i.to_string(),
            inputs: Tensor::from_vec(nt, inputs, (0..nt * inputs).map(|_| r.random_range(-1.0..1.0)).collect()),
            target: target(i),
        })
        .collect()
}

proptest! {
    #[test]
    fn softmax_is_a_distribution(v in proptest::collection::vec(-30.0f64..30.0, 2..12)) {
        let s = softmax_rows(&Tensor::row_vector(v.clone()));
        prop_assert!((s.data().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(s.data().iter().all(|p| *p > 0.0));
        prop_assert_eq!(argmax(s.data()), argmax(&v));
    }

    #[test]
    fn cross_entropy_shift_invariant(v in proptest::collection::vec(-10.0f64..10.0, 2..8), c in -50.0f64..50.0) {
        let k = v.len() - 1;
        let a = cross_entropy(&Tensor::row_vector(v.clone()), &[k]);
        let b = cross_entropy(&Tensor::row_vector(v.iter().map(|x| x + c).collect()), &[k]);
        prop_assert!((a - b).abs() < 1e-9);
        prop_assert!(a >= 0.0);
    }
}

#[test]
fn uniform_logits_give_log_n() {
    for n in 2..=24 {
        let ce = cross_entropy(&Tensor::zeros(3, n), &[0, n - 1, n / 2]);
        assert!((ce - (n as f64).ln()).abs() < 1e-12);
    }
}

#[test]
fn argmax_ties_go_low() {
    assert_eq!(argmax(&[1.0, 3.0, 3.0, 0.0]), 1);
    assert_eq!(argmax(&[2.0, 2.0]), 0);
}

#[test]
fn zero_weights_give_uniform_prediction() {
    let mut n = net("lstm", 4, 3, 5, Task::Classification, 0);
    for t in n.weights.tensors_mut() {
        t.data_mut().fill(0.0);
    }
    let s = random_series(6, 7, 3, |i| Target::Class(i % 5), 1);
    let m = evaluate(&n, &s.iter().collect::<Vec<_>>(), 4).unwrap();
    assert!((m.loss - 5f64.ln()).abs() < 1e-12);
    assert_eq!(m.examples, 6);
}

/// Relabels the layer's nodes with `perm`; the network computes the same
/// function because every block treats nodes uniformly.
fn permute(n: &Network, perm: &[usize]) -> Network {
    let l = perm.len();
    let mut out = n.clone();
    let (src, dst) = (&n.weights.layer, &mut out.weights.layer);
    for g in 0..5 {
        for i in 0..l {
            let (ri, rp) = (g * l + i, g * l + perm[i]);
            for c in 0..src.u.cols() {
                dst.u.set(rp, c, src.u.get(ri, c));
            }
            for j in 0..l {
                dst.w.set(rp, perm[j], src.w.get(ri, j));
                dst.p.set(rp, perm[j], src.p.get(ri, j));
            }
            dst.b.set(0, rp, src.b.get(0, ri));
        }
    }
    for (d, s) in dst.aux.iter_mut().zip(&src.aux) {
        for i in 0..l {
            d.set(0, perm[i], s.get(0, i));
        }
    }
    for o in 0..n.weights.v1.rows() {
        for i in 0..l {
            out.weights.v1.set(o, perm[i], n.weights.v1.get(o, i));
        }
    }
    out
}

#[test]
fn node_permutation_symmetry() {
    let perm = [5, 2, 7, 0, 3, 6, 1, 4];
    for name in zoo::names() {
        let mut a = net(name, 8, 3, 2, Task::Regression, 11);
        // move the aux vectors and biases away from their constant init
        let mut r = rng::stream(3, 3);
        for t in a.weights.layer.aux.iter_mut().chain([&mut a.weights.layer.b]) {
            t.data_mut().iter_mut().for_each(|v| *v = r.random_range(-0.5..0.5));
        }
        let b = permute(&a, &perm);
        assert_eq!(b.weights.layer.max_abs_hollow_diag(), 0.0);
        let s = random_series(3, 6, 3, |_| Target::Values(Tensor::zeros(6, 2)), 5);
        let refs: Vec<&Series> = s.iter().collect();
        let pa = predict(&a, &refs, 3).unwrap();
        let pb = predict(&b, &refs, 3).unwrap();
        for (x, y) in pa.iter().zip(&pb) {
            for (u, v) in x.data().iter().zip(y.data()) {
                assert!((u - v).abs() < 1e-10, "{name}: {u} vs {v}");
            }
        }
    }
}

#[test]
fn single_timestep_series() {
    let n = net("pendulum-small", 4, 2, 2, Task::Regression, 0);
    let s = random_series(3, 1, 2, |_| Target::Values(Tensor::filled(1, 2, 0.5)), 2);
    let refs: Vec<&Series> = s.iter().collect();
    let p = predict(&n, &refs, 8).unwrap();
    assert!(p.iter().all(|t| t.shape() == (1, 2) && t.is_finite()));
    let c = net("lstm", 4, 2, 3, Task::Classification, 0);
    let s = random_series(3, 1, 2, Target::Class, 2);
    let m = evaluate(&c, &s.iter().collect::<Vec<_>>(), 8).unwrap();
    assert!(m.loss.is_finite() && m.accuracy.is_some());
}

#[test]
fn regression_loss_is_mean_over_steps() {
    let n = net("lstm", 4, 2, 2, Task::Regression, 4);
    let s = random_series(2, 5, 2, |i| Target::Values(Tensor::filled(5, 2, i as f64)), 9);
    let refs: Vec<&Series> = s.iter().collect();
    let f = forward_net(&n, &Batch::collate(&refs).unwrap()).unwrap();
    let mut sum = 0.0;
    for o in &f.outputs {
        let v = f.tape.value(*o);
        for i in 0..2 {
            for c in 0..2 {
                let d = v.get(i, c) - i as f64;
                sum += d * d;
            }
        }
    }
    let expect = sum / (5.0 * 2.0 * 2.0);
    assert!((f.tape.value(f.loss).item() - expect).abs() < 1e-12);
    let m = evaluate(&n, &refs, 1).unwrap();
    assert!((m.loss - expect).abs() < 1e-12);
}

#[test]
fn input_width_mismatch_is_an_error() {
    let n = net("lstm", 4, 2, 2, Task::Regression, 0);
    let s = random_series(1, 3, 3, |_| Target::Values(Tensor::zeros(3, 2)), 0);
    assert!(predict(&n, &[&s[0]], 1).is_err());
}

#[test]
fn bad_node_counts_rejected() {
    let p = typecheck(&zoo::program("lstm").unwrap().unwrap()).unwrap();
    for l in [0, 1, 3, 6, 256] {
        let cfg = NetworkConfig { nodes: l, inputs: 1, outputs: 1, task: Task::Regression };
        assert!(Network::new(&p, cfg, 0, &InitOptions::default()).is_err(), "{l}");
    }
}

#[test]
fn cross_entropy_matches_two_pass_formula() {
    let mut r = rng::stream(8, 8);
    let logits = Tensor::from_vec(6, 4, (0..24).map(|_| r.random_range(-6.0..6.0)).collect());
    let labels = [0, 3, 1, 2, 2, 0];
    let mut expect = 0.0;
    for (i, &k) in labels.iter().enumerate() {
        let row = logits.row(i);
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = row.iter().map(|v| (v - m).exp()).sum();
        expect += -((row[k] - m).exp() / z).ln();
    }
    expect /= 6.0;
    assert!((cross_entropy(&logits, &labels) - expect).abs() < 1e-12);
    assert!(cross_entropy(&Tensor::row_vector(vec![1000.0, 0.0, 0.0]), &[0]) < 1e-12);
}

#[test]
fn accuracy_on_known_argmaxes() {
    use arn_core::model::accuracy;
    let logits = Tensor::from_vec(4, 3, vec![0.1, 0.9, 0.0, 2.0, 1.0, 1.0, 0.0, 0.0, 0.0, -1.0, -2.0, -0.5]);
    // argmaxes: 1, 0, 0 (tie), 2
    assert_eq!(accuracy(&logits, &[1, 0, 0, 2]), 1.0);
    assert_eq!(accuracy(&logits, &[1, 1, 2, 2]), 0.5);
    assert_eq!(accuracy(&Tensor::zeros(1, 2), &[0]), 1.0);
}

#[test]
fn perfect_regression_has_zero_loss() {
    use arn_core::model::metrics;
    let s = random_series(2, 3, 1, |i| Target::Values(Tensor::filled(3, 2, i as f64)), 0);
    let preds: Vec<Tensor> = s.iter().map(|x| match &x.target {
        Target::Values(v) => v.clone(),
        Target::Class(_) => unreachable!(),
    }).collect();
    assert_eq!(metrics(&preds, &s.iter().collect::<Vec<_>>()).loss, 0.0);
}
