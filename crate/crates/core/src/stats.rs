//! Paired significance tests for comparing two models on one test set.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Largest sample size handled by exact enumeration.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemar {
    pub chi2: f64,
    pub p_value: f64,
}

/// Continuity-corrected McNemar test. `b` counts examples only the first
/// model gets right, `c` those only the second gets right.
pub fn mcnemar(b: u64, c: u64) -> McNemar {
    let n = b + c;
    if n == 0 {
        return McNemar { chi2: 0.0, p_value: 1.0 };
    }
    let d = (b as f64 - c as f64).abs() - 1.0;
    let chi2 = (d * d / n as f64).max(0.0);
    let dist = ChiSquared::new(1.0).expect("one degree of freedom");
    McNemar { chi2, p_value: (1.0 - dist.cdf(chi2)).clamp(0.0, 1.0) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wilcoxon {
    /// Sum of the ranks of the negative differences.
    pub w_minus: f64,
    pub w_plus: f64,
    /// Non-zero differences used.
    pub n: usize,
    pub p_value: f64,
    pub exact: bool,
}

/// Average ranks of `|d|` (1-based).
fn ranks(abs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..abs.len()).collect();
    idx.sort_by(|&a, &b| abs[a].total_cmp(&abs[b]));
    let mut r = vec![0.0; abs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && abs[idx[j + 1]] == abs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Two-sided Wilcoxon signed-rank test on paired differences. Zeros are
/// dropped. Up to [`EXACT_MAX_N`] differences the null distribution is
/// enumerated exactly (over doubled ranks, so tied half-ranks stay
/// integral); above that a continuity- and tie-corrected normal
/// approximation is used.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> Wilcoxon {
    let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nz.len();
    if n == 0 {
        return Wilcoxon { w_minus: 0.0, w_plus: 0.0, n: 0, p_value: 1.0, exact: true };
    }
    let abs: Vec<f64> = nz.iter().map(|d| d.abs()).collect();
    let r = ranks(&abs);
    let w_minus: f64 = nz.iter().zip(&r).filter(|(d, _)| **d < 0.0).map(|(_, r)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_plus = total - w_minus;
    if n <= EXACT_MAX_N {
        let doubled: Vec<usize> = r.iter().map(|x| (2.0 * x).round() as usize).collect();
        let sum: usize = doubled.iter().sum();
        // counts[s]: sign assignments whose negative doubled-rank sum is s
        let mut counts = vec![0f64; sum + 1];
        counts[0] = 1.0;
        for &d in &doubled {
            for s in (d..=sum).rev() {
                counts[s] += counts[s - d];
            }
        }
        let obs = (2.0 * w_minus).round() as usize;
        let total_ways = 2f64.powi(n as i32);
        let lower: f64 = counts[..=obs].iter().sum::<f64>() / total_ways;
        let upper: f64 = counts[obs..].iter().sum::<f64>() / total_ways;
        let p = (2.0 * lower.min(upper)).min(1.0);
        return Wilcoxon { w_minus, w_plus, n, p_value: p, exact: true };
    }
    let nf = n as f64;
    let mut tie = 0.0;
    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie += t * t * t - t;
        i = j + 1;
    }
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie / 48.0;
    let z = ((w_minus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p = (2.0 * (1.0 - normal.cdf(z))).clamp(0.0, 1.0);
    Wilcoxon { w_minus, w_plus, n, p_value: p, exact: false }
}
