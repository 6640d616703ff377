use arn_core::stats::{mcnemar, wilcoxon_signed_rank, EXACT_MAX_N};
use proptest::prelude::*;

/// `P(|Z| <= z)` for a standard normal, by composite Simpson quadrature.
fn central_mass(z: f64) -> f64 {
    let n = 20_000;
    let h = z / n as f64;
    let f = |u: f64| 2.0 * (-u * u / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = f(0.0) + f(z);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0
}

/// Upper tail of chi-square with one degree of freedom.
fn chi2_sf(x: f64) -> f64 {
    1.0 - central_mass(x.sqrt())
}

#[test]
fn mcnemar_against_quadrature() {
    let m = mcnemar(10, 2);
    assert!((m.chi2 - 49.0 / 12.0).abs() < 1e-12);
    assert!((m.p_value - chi2_sf(49.0 / 12.0)).abs() < 1e-9);
    assert!((m.p_value - 0.0433).abs() < 1e-3);
    let m = mcnemar(5, 5);
    assert!((m.chi2 - 0.1).abs() < 1e-12);
    assert!((m.p_value - chi2_sf(0.1)).abs() < 1e-9);
    assert!((m.p_value - 0.752).abs() < 1e-3);
    assert_eq!(mcnemar(0, 0).p_value, 1.0);
    for (b, c) in [(1, 0), (0, 7), (30, 12), (100, 140)] {
        let m = mcnemar(b, c);
        let d = (b as f64 - c as f64).abs() - 1.0;
        assert!((m.chi2 - d * d / (b + c) as f64).abs() < 1e-12);
        assert!((m.p_value - chi2_sf(m.chi2)).abs() < 1e-8, "{b} {c}");
    }
}

/// Two-sided exact p by listing all sign assignments of the ranks.
fn wilcoxon_brute(diffs: &[f64]) -> (f64, f64) {
    let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nz.len();
    let ranks: Vec<f64> = nz
        .iter()
        .map(|d| {
            let below = nz.iter().filter(|e| e.abs() < d.abs()).count() as f64;
            let equal = nz.iter().filter(|e| e.abs() == d.abs()).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let obs: f64 = nz.iter().zip(&ranks).filter(|(d, _)| **d < 0.0).map(|(_, r)| r).sum();
    let (mut lo, mut hi) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        lo += u64::from(w <= obs + 1e-9);
        hi += u64::from(w >= obs - 1e-9);
    }
    let total = (1u64 << n) as f64;
    (obs, (2.0 * (lo.min(hi) as f64) / total).min(1.0))
}

#[test]
fn wilcoxon_small_examples() {
    let w = wilcoxon_signed_rank(&[1.0, -2.0, 3.0, 4.0]);
    assert_eq!((w.w_minus, w.w_plus, w.n, w.exact), (2.0, 8.0, 4, true));
    assert_eq!(w.p_value, 0.375);
    let pos: Vec<f64> = (1..=10).map(|v| v as f64).collect();
    let w = wilcoxon_signed_rank(&pos);
    assert_eq!(w.w_minus, 0.0);
    assert!((w.p_value - 2.0 / 1024.0).abs() < 1e-15);
    assert_eq!(wilcoxon_signed_rank(&[2.5, -2.5]).p_value, 1.0);
    assert_eq!(wilcoxon_signed_rank(&[0.0, 0.0]).p_value, 1.0);
}

proptest! {
    #[test]
    fn wilcoxon_matches_enumeration(d in proptest::collection::vec(-4i32..=4, 1..14)) {
        // small integers force ties and zeros
        let diffs: Vec<f64> = d.iter().map(|v| *v as f64 * 0.5).collect();
        let w = wilcoxon_signed_rank(&diffs);
        let (obs, p) = wilcoxon_brute(&diffs);
        prop_assert!((w.w_minus - obs).abs() < 1e-12);
        prop_assert!((w.p_value - p).abs() < 1e-12, "{} vs {}", w.p_value, p);
    }

    #[test]
    fn wilcoxon_sign_flip_symmetry(d in proptest::collection::vec(-50.0f64..50.0, 1..40)) {
        let neg: Vec<f64> = d.iter().map(|v| -v).collect();
        let (a, b) = (wilcoxon_signed_rank(&d), wilcoxon_signed_rank(&neg));
        prop_assert!((a.p_value - b.p_value).abs() < 1e-12);
        prop_assert!((a.w_minus - b.w_plus).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&a.p_value));
    }

    #[test]
    fn mcnemar_is_symmetric(b in 0u64..500, c in 0u64..500) {
        prop_assert_eq!(mcnemar(b, c), mcnemar(c, b));
    }
}

#[test]
fn exact_and_normal_agree_near_the_switch() {
    // same rank pattern at n = 25 (exact) and n = 26 (normal)
    let make = |n: usize| -> Vec<f64> { (1..=n).map(|i| if i % 3 == 0 { -(i as f64) } else { i as f64 }).collect() };
    let exact = wilcoxon_signed_rank(&make(EXACT_MAX_N));
    assert!(exact.exact);
    let nf = EXACT_MAX_N as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let sd = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0).sqrt();
    let z = ((exact.w_minus - mean).abs() - 0.5) / sd;
    let normal_p = 1.0 - central_mass(z);
    assert!((exact.p_value - normal_p).abs() < 0.01, "{} vs {normal_p}", exact.p_value);
    let approx = wilcoxon_signed_rank(&make(EXACT_MAX_N + 1));
    assert!(!approx.exact);
    let nf = nf + 1.0;
    let mean = nf * (nf + 1.0) / 4.0;
    let sd = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0).sqrt();
    let z = ((approx.w_minus - mean).abs() - 0.5) / sd;
    assert!((approx.p_value - (1.0 - central_mass(z))).abs() < 1e-9);
}
