//! Soft-margin SVM trained with sequential minimal optimization.
//!
//! The solver picks the maximal violating pair under the usual first-order
//! selection rule and stops once the KKT violation gap falls below `tol`.
//! Selection is a deterministic scan, so training is reproducible without
//! randomness.

use crate::error::{Error, Result};
use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
        match self {
            Kernel::Linear => a.dot(&b),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a
                    .iter()
                    .zip(b.iter())
                    .map(|(x, y)| (x - y).powi(2))
                    .sum();
                (-gamma * d2).exp()
            }
        }
    }
}

/// Trained SVM: support vectors with their dual coefficients and bias.
#[derive(Clone, Debug)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub c: f64,
    /// Support vectors, one row each.
    pub support_x: Array2<f64>,
    /// alpha_i * y_i per support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    /// Raw alphas and labels of the support vectors (KKT inspection).
    pub alphas: Vec<f64>,
    pub labels: Vec<f64>,
}

/// Dual objective W(alpha) = sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
pub fn dual_objective(
    x: &Array2<f64>,
    y: &[f64],
    kernel: Kernel,
    alphas: &[f64],
) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if alphas[j] == 0.0 {
                continue;
            }
            quad += alphas[i] * alphas[j] * y[i] * y[j] * kernel.eval(x.row(i), x.row(j));
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// Train by SMO until the maximal KKT violation gap is below `tol`.
pub fn svm_train(
    x: &Array2<f64>,
    y: &[f64],
    kernel: Kernel,
    c: f64,
    tol: f64,
) -> Result<SvmModel> {
    let n = x.nrows();
    if n != y.len() {
        return Err(Error::invalid_input("svm_train: feature/label length mismatch"));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::invalid_input("svm_train: labels must be +-1"));
    }
    let pos = y.iter().filter(|&&v| v > 0.0).count();
    if pos == 0 || pos == n {
        return Err(Error::invalid_input("svm_train: need at least one sample per class"));
    }
    if !(c > 0.0) {
        return Err(Error::invalid_input("svm_train: C must be positive"));
    }

    // Dense kernel matrix; training sets here are small.
    let mut k = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(x.row(i), x.row(j));
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }

    let mut alphas = vec![0.0f64; n];
    // f_i = sum_j alpha_j y_j K_ij, maintained incrementally.
    let mut f = vec![0.0f64; n];

    let in_i_up = |t: usize, alphas: &[f64]| -> bool {
        (y[t] > 0.0 && alphas[t] < c) || (y[t] < 0.0 && alphas[t] > 0.0)
    };
    let in_i_low = |t: usize, alphas: &[f64]| -> bool {
        (y[t] > 0.0 && alphas[t] > 0.0) || (y[t] < 0.0 && alphas[t] < c)
    };

    let max_iter = 200_000usize.max(200 * n);
    let mut converged = false;
    for _ in 0..max_iter {
        // Violating pair: i maximizes y_t (1 - y_t f_t) over I_up read as
        // -y_t G_t with G_t = y_t f_t - 1; j minimizes it over I_low.
        let mut i = usize::MAX;
        let mut m_up = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut m_low = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * (y[t] * f[t] - 1.0);
            if in_i_up(t, &alphas) && v > m_up {
                m_up = v;
                i = t;
            }
            if in_i_low(t, &alphas) && v < m_low {
                m_low = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || m_up - m_low <= tol {
            converged = true;
            break;
        }

        // Two-variable analytic update.
        let e_i = f[i] - y[i];
        let e_j = f[j] - y[j];
        let eta = (k[[i, i]] + k[[j, j]] - 2.0 * k[[i, j]]).max(1e-12);
        let (lo, hi) = if (y[i] - y[j]).abs() > 0.5 {
            ((alphas[j] - alphas[i]).max(0.0), (c + alphas[j] - alphas[i]).min(c))
        } else {
            ((alphas[i] + alphas[j] - c).max(0.0), (alphas[i] + alphas[j]).min(c))
        };
        let mut aj = alphas[j] + y[j] * (e_i - e_j) / eta;
        aj = aj.clamp(lo, hi);
        let mut ai = alphas[i] + y[i] * y[j] * (alphas[j] - aj);
        // Snap float dust onto the box bounds so working-set membership
        // stays exact; a near-bound alpha would otherwise pin the maximal
        // violating pair without ever making progress.
        let snap = 1e-10 * c.max(1.0);
        if ai < snap {
            ai = 0.0;
        } else if ai > c - snap {
            ai = c;
        }
        if aj < snap {
            aj = 0.0;
        } else if aj > c - snap {
            aj = c;
        }
        let di = ai - alphas[i];
        let dj = aj - alphas[j];
        if di.abs() < 1e-14 && dj.abs() < 1e-14 {
            // Movement below float resolution: stationary up to numerics.
            converged = true;
            break;
        }
        alphas[i] = ai;
        alphas[j] = aj;
        for t in 0..n {
            f[t] += di * y[i] * k[[i, t]] + dj * y[j] * k[[j, t]];
        }
    }
    if !converged {
        return Err(Error::Numerical(
            "svm_train: SMO failed to converge within the iteration budget".into(),
        ));
    }

    // Bias from free support vectors, else the midpoint of the KKT bounds.
    let free: Vec<usize> = (0..n)
        .filter(|&t| alphas[t] > 1e-10 && alphas[t] < c - 1e-10)
        .collect();
    let bias = if !free.is_empty() {
        free.iter().map(|&t| y[t] - f[t]).sum::<f64>() / free.len() as f64
    } else {
        let mut up = f64::NEG_INFINITY;
        let mut low = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * (y[t] * f[t] - 1.0);
            if in_i_up(t, &alphas) {
                up = up.max(v);
            }
            if in_i_low(t, &alphas) {
                low = low.min(v);
            }
        }
        (up + low) / 2.0
    };

    // Keep only support vectors.
    let sv: Vec<usize> = (0..n).filter(|&t| alphas[t] > 1e-10).collect();
    let d = x.ncols();
    let mut support_x = Array2::<f64>::zeros((sv.len(), d));
    for (r, &t) in sv.iter().enumerate() {
        support_x.row_mut(r).assign(&x.row(t));
    }
    Ok(SvmModel {
        kernel,
        c,
        dual_coef: sv.iter().map(|&t| alphas[t] * y[t]).collect(),
        bias,
        alphas: sv.iter().map(|&t| alphas[t]).collect(),
        labels: sv.iter().map(|&t| y[t]).collect(),
        support_x,
    })
}

/// Raw decision value sum_i alpha_i y_i K(x_i, x) + b; the sign is the class.
pub fn svm_score(model: &SvmModel, x: ArrayView1<f64>) -> f64 {
    model
        .dual_coef
        .iter()
        .enumerate()
        .map(|(i, coef)| coef * model.kernel.eval(model.support_x.row(i), x))
        .sum::<f64>()
        + model.bias
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn separable_pair_puts_boundary_at_zero() {
        let x = array![[-1.0, 0.0], [1.0, 0.0]];
        let y = vec![-1.0, 1.0];
        let m = svm_train(&x, &y, Kernel::Linear, 1e6, 1e-6).unwrap();
        // Margin boundary at x1 = 0: symmetric scores, zero at origin.
        let s_origin = svm_score(&m, array![0.0, 0.0].view());
        assert!(s_origin.abs() < 1e-6, "score at origin {s_origin}");
        assert!(svm_score(&m, x.row(0)) < 0.0);
        assert!(svm_score(&m, x.row(1)) > 0.0);
        // Support vectors sit on the margin.
        assert!((svm_score(&m, x.row(0)) + 1.0).abs() < 1e-6);
        assert!((svm_score(&m, x.row(1)) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rbf_solves_xor_where_linear_cannot() {
        let x = array![[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
        let y = vec![-1.0, -1.0, 1.0, 1.0];
        let m = svm_train(&x, &y, Kernel::Rbf { gamma: 1.0 }, 10.0, 1e-6).unwrap();
        for i in 0..4 {
            let s = svm_score(&m, x.row(i));
            assert!(s * y[i] > 0.0, "sample {i}: score {s} label {}", y[i]);
        }
    }

    #[test]
    fn far_point_scores_beyond_margin() {
        let x = array![[-1.0, 0.0], [1.0, 0.0]];
        let y = vec![-1.0, 1.0];
        let m = svm_train(&x, &y, Kernel::Linear, 1e6, 1e-6).unwrap();
        assert!(svm_score(&m, array![5.0, 0.0].view()) > 1.0);
    }

    #[test]
    fn kkt_conditions_hold() {
        // Small overlapping problem so some alphas hit the C bound.
        let x = array![
            [0.1, 0.2],
            [0.3, -0.1],
            [0.2, 0.4],
            [-0.2, -0.3],
            [-0.4, 0.1],
            [-0.1, -0.2],
            [0.05, -0.35],
            [-0.05, 0.3]
        ];
        let y = vec![1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0, 1.0];
        let c = 1.0;
        let tol = 1e-4;
        let m = svm_train(&x, &y, Kernel::Rbf { gamma: 2.0 }, c, tol).unwrap();
        for (i, (&alpha, &label)) in m.alphas.iter().zip(&m.labels).enumerate() {
            let yf = label * svm_score(&m, m.support_x.row(i));
            if alpha < c - 1e-8 {
                assert!(yf >= 1.0 - 10.0 * tol, "free/low sv {i}: y f = {yf}");
            }
            if alpha > 1e-8 && alpha < c - 1e-8 {
                assert!((yf - 1.0).abs() <= 10.0 * tol, "free sv {i}: y f = {yf}");
            }
            if alpha >= c - 1e-8 {
                assert!(yf <= 1.0 + 10.0 * tol, "bound sv {i}: y f = {yf}");
            }
        }
        // Equality constraint sum(alpha_i y_i) = 0.
        let balance: f64 = m.dual_coef.iter().sum();
        assert!(balance.abs() < 1e-6);
    }

    #[test]
    fn score_matches_direct_kernel_expansion() {
        let x = array![[0.0, 1.0], [1.0, 0.5], [0.4, -1.0], [-1.0, 0.2]];
        let y = vec![1.0, 1.0, -1.0, -1.0];
        let m = svm_train(&x, &y, Kernel::Rbf { gamma: 0.7 }, 5.0, 1e-6).unwrap();
        let probe = array![0.3, 0.3];
        let direct: f64 = m
            .dual_coef
            .iter()
            .enumerate()
            .map(|(i, coef)| {
                let d2: f64 = m
                    .support_x
                    .row(i)
                    .iter()
                    .zip(probe.iter())
                    .map(|(a, b)| (a - b).powi(2))
                    .sum();
                coef * (-0.7 * d2).exp()
            })
            .sum::<f64>()
            + m.bias;
        assert!((svm_score(&m, probe.view()) - direct).abs() < 1e-12);
    }

    #[test]
    fn single_class_input_is_rejected() {
        let x = array![[0.0, 1.0], [1.0, 0.0]];
        assert!(svm_train(&x, &[1.0, 1.0], Kernel::Linear, 1.0, 1e-4).is_err());
    }

    #[test]
    fn prediction_invariant_to_zero_feature_column() {
        let x = array![[0.1, 0.2], [0.3, -0.1], [-0.2, -0.3], [-0.4, 0.1]];
        let y = vec![1.0, 1.0, -1.0, -1.0];
        let m2 = svm_train(&x, &y, Kernel::Rbf { gamma: 1.0 }, 2.0, 1e-6).unwrap();

        let mut x3 = Array2::<f64>::zeros((4, 3));
        x3.slice_mut(ndarray::s![.., ..2]).assign(&x);
        let m3 = svm_train(&x3, &y, Kernel::Rbf { gamma: 1.0 }, 2.0, 1e-6).unwrap();

        for i in 0..4 {
            let p2 = svm_score(&m2, x.row(i));
            let mut probe = [0.0; 3];
            probe[..2].copy_from_slice(x.row(i).to_slice().unwrap());
            let p3 = svm_score(&m3, ndarray::ArrayView1::from(&probe));
            assert!((p2 - p3).abs() < 1e-8, "sample {i}: {p2} vs {p3}");
        }
    }
}
