//! Angle-delay channel power matrix.
//!
//! The channel matrix is mapped to the angle-delay domain with unitary
//! centered DFTs over the two spatial axes and a conjugated plain DFT over
//! the subcarrier axis, then squared elementwise:
//!
//!   G = (1 / sqrt(M N Nc)) (V_N (x) V_M)^H H conj(F),    X = E[G (.) G*]
//!
//! with [V_S]_{i,j} = exp(-j 2 pi i (j - S/2) / S) / sqrt(S) and
//! [F]_{i,j} = exp(-j 2 pi i j / Nc) / sqrt(Nc). The Kronecker factor order
//! matches the channel row layout (vertical index n outer, horizontal m
//! inner). The transform is applied separably; an explicit dense Kronecker
//! product exists only as a test oracle.
//!
//! A path with delay tau and arrival (theta, phi) concentrates at delay bin
//! round(tau / Ts) mod Nc, vertical bin round(N/2 + N dv sin phi) mod N and
//! horizontal bin round(M/2 + M dh cos phi sin theta) mod M.

use crate::channel::{ArrayConfig, ChannelMatrix, OfdmConfig};
use crate::error::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Nonnegative angle-delay power matrix, optionally max-pooled.
#[derive(Clone, Debug, PartialEq)]
pub struct Adcpm {
    pub data: Array2<f64>,
    /// Pooling kernel that produced these dims, None for full resolution.
    pub pooled_from: Option<(usize, usize)>,
}

impl Adcpm {
    pub fn total_power(&self) -> f64 {
        self.data.sum()
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(0.0f64, f64::max)
    }

    /// Scale so the peak is exactly 1.0; an all-zero matrix stays zero.
    pub fn max_normalized(mut self) -> Adcpm {
        let m = self.max_value();
        if m > 0.0 {
            self.data.mapv_inplace(|v| v / m);
        }
        self
    }

    /// Row/column of the largest entry (first under row-major order on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut best_v = f64::NEG_INFINITY;
        for ((i, j), &v) in self.data.indexed_iter() {
            if v > best_v {
                best_v = v;
                best = (i, j);
            }
        }
        best
    }

    /// Row-major CSV dump for plotting, with a dims header line.
    pub fn to_csv(&self) -> String {
        let (rows, cols) = self.data.dim();
        let mut s = format!("# adcpm rows={rows} cols={cols}\n");
        for r in 0..rows {
            let line: Vec<String> = (0..cols).map(|c| format!("{}", self.data[[r, c]])).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}

/// Centered unitary DFT: entry (i, j) = exp(-j 2 pi i (j - size/2) / size) / sqrt(size).
pub fn centered_dft(size: usize) -> Array2<Complex64> {
    assert!(size >= 1, "centered_dft: size must be >= 1");
    let s = size as f64;
    Array2::from_shape_fn((size, size), |(i, j)| {
        let shifted = j as f64 - s / 2.0;
        Complex64::from_polar(1.0 / s.sqrt(), -2.0 * PI * i as f64 * shifted / s)
    })
}

/// Plain unitary DFT: entry (i, j) = exp(-j 2 pi i j / size) / sqrt(size).
pub fn plain_dft(size: usize) -> Array2<Complex64> {
    assert!(size >= 1, "plain_dft: size must be >= 1");
    let s = size as f64;
    Array2::from_shape_fn((size, size), |(i, j)| {
        Complex64::from_polar(1.0 / s.sqrt(), -2.0 * PI * (i * j) as f64 / s)
    })
}

/// Precomputed transform factors, shared read-only across workers.
#[derive(Clone, Debug)]
pub struct TransformPlan {
    /// V_N^H, applied over the vertical (outer) spatial index.
    v_rows_h: Array2<Complex64>,
    /// V_M^H, applied over the horizontal (inner) spatial index.
    v_cols_h: Array2<Complex64>,
    /// conj(F), applied on the right over subcarriers.
    f_conj: Array2<Complex64>,
    rows: usize,
    cols: usize,
    nc: usize,
    scale: f64,
}

impl TransformPlan {
    pub fn new(array: &ArrayConfig, ofdm: &OfdmConfig) -> Self {
        let conj_t = |m: &Array2<Complex64>| m.t().mapv(|c| c.conj());
        let v_n = centered_dft(array.rows);
        let v_m = centered_dft(array.cols);
        let f = plain_dft(ofdm.n_subcarriers);
        TransformPlan {
            v_rows_h: conj_t(&v_n),
            v_cols_h: conj_t(&v_m),
            f_conj: f.mapv(|c| c.conj()),
            rows: array.rows,
            cols: array.cols,
            nc: ofdm.n_subcarriers,
            scale: 1.0 / ((array.rows * array.cols * ofdm.n_subcarriers) as f64).sqrt(),
        }
    }

    /// Separable application of the angle-delay transform to an NM x Nc matrix.
    pub fn apply(&self, h: &Array2<Complex64>) -> Result<Array2<Complex64>> {
        let (nm, nc) = h.dim();
        if nm != self.rows * self.cols || nc != self.nc {
            return Err(Error::invalid_input(format!(
                "angle_delay_transform: expected {}x{}, got {nm}x{nc}",
                self.rows * self.cols,
                self.nc
            )));
        }

        // Vertical axis: reshape (N, M*Nc) so the contraction is one product.
        let x = h
            .to_shape((self.rows, self.cols * self.nc))
            .expect("row-major reshape");
        let y = self.v_rows_h.dot(&x); // (N, M*Nc)

        // Horizontal axis: per vertical index, multiply the (M, Nc) slab.
        let mut z = Array2::<Complex64>::zeros((nm, self.nc));
        for n in 0..self.rows {
            let row = y.row(n);
            let slab = row
                .to_shape((self.cols, self.nc))
                .expect("row-major reshape");
            let t = self.v_cols_h.dot(&slab); // (M, Nc)
            z.slice_mut(ndarray::s![n * self.cols..(n + 1) * self.cols, ..])
                .assign(&t);
        }

        // Delay axis plus the global scale.
        let mut g = z.dot(&self.f_conj);
        g.mapv_inplace(|c| c * self.scale);
        Ok(g)
    }
}

/// One-shot angle-delay transform; build a [`TransformPlan`] for repeated use.
pub fn angle_delay_transform(
    h: &ChannelMatrix,
    array: &ArrayConfig,
    ofdm: &OfdmConfig,
) -> Result<Array2<Complex64>> {
    TransformPlan::new(array, ofdm).apply(&h.data)
}

/// Elementwise |G|^2 averaged over the provided realizations. A single
/// realization is the single-snapshot estimate of the expectation.
pub fn compute_adcpm(realizations: &[Array2<Complex64>]) -> Result<Adcpm> {
    let first = realizations
        .first()
        .ok_or_else(|| Error::invalid_input("compute_adcpm: empty realization list"))?;
    let dim = first.dim();
    let mut acc = Array2::<f64>::zeros(dim);
    for g in realizations {
        if g.dim() != dim {
            return Err(Error::invalid_input("compute_adcpm: inconsistent dims"));
        }
        acc.zip_mut_with(g, |a, c| *a += c.norm_sqr());
    }
    acc.mapv_inplace(|v| v / realizations.len() as f64);
    Ok(Adcpm {
        data: acc,
        pooled_from: None,
    })
}

/// Non-overlapping max-pooling with stride equal to the kernel. Ragged edge
/// windows take the max of the partial window; output dims are
/// ceil(input / kernel).
pub fn max_pool(x: &Adcpm, kernel_h: usize, kernel_w: usize) -> Adcpm {
    assert!(kernel_h >= 1 && kernel_w >= 1, "max_pool: kernel dims must be >= 1");
    let (h, w) = x.data.dim();
    let oh = h.div_ceil(kernel_h);
    let ow = w.div_ceil(kernel_w);
    let mut out = Array2::<f64>::zeros((oh, ow));
    for i in 0..oh {
        for j in 0..ow {
            let r0 = i * kernel_h;
            let c0 = j * kernel_w;
            let r1 = (r0 + kernel_h).min(h);
            let c1 = (c0 + kernel_w).min(w);
            let mut m = f64::NEG_INFINITY;
            for r in r0..r1 {
                for c in c0..c1 {
                    m = m.max(x.data[[r, c]]);
                }
            }
            out[[i, j]] = m;
        }
    }
    Adcpm {
        data: out,
        pooled_from: Some((kernel_h, kernel_w)),
    }
}

/// Predicted peak bin of a path with the given delay and arrival direction:
/// ((vertical, horizontal) flattened to the ADCPM row, delay column).
pub fn predicted_bins(
    array: &ArrayConfig,
    ofdm: &OfdmConfig,
    delay: f64,
    azimuth: f64,
    elevation: f64,
) -> (usize, usize) {
    let n = array.rows as f64;
    let m = array.cols as f64;
    let vert = (n / 2.0 + n * array.dv * elevation.sin()).round().rem_euclid(n) as usize
        % array.rows;
    let horiz = (m / 2.0 + m * array.dh * elevation.cos() * azimuth.sin())
        .round()
        .rem_euclid(m) as usize
        % array.cols;
    let delay_bin =
        (delay / ofdm.sample_interval()).round().rem_euclid(ofdm.n_subcarriers as f64) as usize
            % ofdm.n_subcarriers;
    (vert * array.cols + horiz, delay_bin)
}

/// Dense Kronecker-product oracle for the spatial factor, test use only:
/// rows and columns are indexed n*M + m with the vertical factor outer.
pub fn dense_spatial_kronecker(array: &ArrayConfig) -> Array2<Complex64> {
    let v_n = centered_dft(array.rows);
    let v_m = centered_dft(array.cols);
    let nm = array.n_elements();
    Array2::from_shape_fn((nm, nm), |(r, c)| {
        let (rn, rm) = (r / array.cols, r % array.cols);
        let (cn, cm) = (c / array.cols, c % array.cols);
        v_n[[rn, cn]] * v_m[[rm, cm]]
    })
}

/// Reference implementation of the full transform through the dense
/// Kronecker matrix; used to validate the separable path.
pub fn dense_transform_oracle(
    h: &Array2<Complex64>,
    array: &ArrayConfig,
    ofdm: &OfdmConfig,
) -> Array2<Complex64> {
    let k = dense_spatial_kronecker(array);
    let k_h = k.t().mapv(|c| c.conj());
    let f_conj = plain_dft(ofdm.n_subcarriers).mapv(|c| c.conj());
    let scale = 1.0 / ((array.n_elements() * ofdm.n_subcarriers) as f64).sqrt();
    k_h.dot(h).dot(&f_conj).mapv(|c| c * scale)
}
