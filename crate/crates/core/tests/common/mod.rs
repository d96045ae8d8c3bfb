//! Independent oracles shared by the property and acceptance suites. These
//! deliberately avoid the implementation paths they check.

#![allow(dead_code)]

use ndarray::{Array2, ArrayView1};
use twinlos::classic_ml::Kernel;

/// Brute-force pairwise (Mann-Whitney) AUC with half credit for ties.
pub fn mann_whitney_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut pairs = 0u64;
    let mut credit = 0.0f64;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1;
            if si > sj {
                credit += 1.0;
            } else if si == sj {
                credit += 0.5;
            }
        }
    }
    credit / pairs as f64
}

fn kernel_eval(k: Kernel, a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    match k {
        Kernel::Linear => a.dot(&b),
        Kernel::Rbf { gamma } => {
            let d2: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum();
            (-gamma * d2).exp()
        }
    }
}

/// Exact Euclidean projection onto {0 <= a <= c, sum a_i y_i = 0} by
/// bisection on the equality multiplier.
fn project_box_hyperplane(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let g = |lambda: f64| -> f64 {
        v.iter()
            .zip(y)
            .map(|(&vi, &yi)| yi * (vi - lambda * yi).clamp(0.0, c))
            .sum()
    };
    let mut lo = -1e6;
    let mut hi = 1e6;
    // g is nonincreasing in lambda; find the root.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    v.iter()
        .zip(y)
        .map(|(&vi, &yi)| (vi - lambda * yi).clamp(0.0, c))
        .collect()
}

/// Projected-gradient ascent on the SVM dual, an implementation-independent
/// reference for the SMO solver's objective value.
pub fn qp_dual_oracle(x: &Array2<f64>, y: &[f64], kernel: Kernel, c: f64, iters: usize) -> Vec<f64> {
    let n = y.len();
    let mut q = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            q[[i, j]] = y[i] * y[j] * kernel_eval(kernel, x.row(i), x.row(j));
        }
    }
    // Lipschitz step from a crude spectral bound.
    let row_max: f64 = (0..n)
        .map(|i| (0..n).map(|j| q[[i, j]].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let step = 1.0 / row_max.max(1e-9);

    let mut alpha = vec![0.0f64; n];
    for _ in 0..iters {
        // gradient of W = 1 - Q alpha
        let mut grad = vec![1.0f64; n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += q[[i, j]] * alpha[j];
            }
            grad[i] -= acc;
        }
        let proposal: Vec<f64> = alpha
            .iter()
            .zip(&grad)
            .map(|(&a, &g)| a + step * g)
            .collect();
        alpha = project_box_hyperplane(&proposal, y, c);
    }
    alpha
}

/// Exhaustive Gini threshold scan over one feature; returns the best
/// (threshold, decrease) or None when no split helps.
pub fn exhaustive_gini_scan_1d(values: &[f64], labels: &[u8]) -> Option<(f64, f64)> {
    let gini = |c0: f64, c1: f64| -> f64 {
        let t = c0 + c1;
        if t == 0.0 {
            return 0.0;
        }
        1.0 - (c0 / t).powi(2) - (c1 / t).powi(2)
    };
    let n = values.len() as f64;
    let total0 = labels.iter().filter(|&&l| l == 0).count() as f64;
    let total1 = n - total0;
    let parent = gini(total0, total1);

    let mut sorted: Vec<(f64, u8)> = values.iter().copied().zip(labels.iter().copied()).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut best: Option<(f64, f64)> = None;
    let mut l0 = 0.0;
    let mut l1 = 0.0;
    for s in 0..sorted.len() - 1 {
        if sorted[s].1 == 0 {
            l0 += 1.0;
        } else {
            l1 += 1.0;
        }
        if sorted[s].0 == sorted[s + 1].0 {
            continue;
        }
        let nl = (s + 1) as f64;
        let nr = n - nl;
        let decrease =
            parent - nl / n * gini(l0, l1) - nr / n * gini(total0 - l0, total1 - l1);
        if decrease > best.map_or(1e-12, |b| b.1) {
            best = Some(((sorted[s].0 + sorted[s + 1].0) / 2.0, decrease));
        }
    }
    best
}
