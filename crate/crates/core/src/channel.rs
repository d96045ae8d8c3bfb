//! OFDM channel synthesis, noisy uplink, and least-squares estimation.
//!
//! The channel frequency response for one UE is an NM x Nc complex matrix:
//! one row per array element, one column per subcarrier. Rows are ordered
//! with the vertical element index n outer and the horizontal index m inner
//! (row n*M + m); this ordering is the single source of truth shared with the
//! angle-delay transform so that angle bins map to physical directions.

use crate::error::{Error, Result};
use crate::geometry::MultipathSet;
use crate::rng::{derive_rng, stream};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OfdmConfig {
    /// Carrier frequency, Hz.
    pub fc: f64,
    /// Bandwidth, Hz.
    pub bandwidth: f64,
    /// Number of subcarriers Nc.
    pub n_subcarriers: usize,
    /// Cyclic-prefix length in samples Ng.
    pub n_guard: usize,
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fc > 0.0) || !(self.bandwidth > 0.0) {
            return Err(Error::invalid_input("ofdm: fc and bandwidth must be positive"));
        }
        if self.n_subcarriers < 2 {
            return Err(Error::invalid_input("ofdm: n_subcarriers must be >= 2"));
        }
        Ok(())
    }

    /// Sample interval Ts = 1/B, seconds.
    pub fn sample_interval(&self) -> f64 {
        1.0 / self.bandwidth
    }

    /// Symbol duration Tc = Nc * Ts, seconds.
    pub fn symbol_duration(&self) -> f64 {
        self.n_subcarriers as f64 * self.sample_interval()
    }

    /// Subcarrier frequency f_l = l / Tc.
    pub fn subcarrier_freq(&self, l: usize) -> f64 {
        l as f64 / self.symbol_duration()
    }

    /// Cyclic-prefix duration Ng * Ts; path delays beyond this are invalid.
    pub fn cp_duration(&self) -> f64 {
        self.n_guard as f64 * self.sample_interval()
    }

    pub fn wavelength(&self) -> f64 {
        crate::geometry::SPEED_OF_LIGHT / self.fc
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementPattern {
    Isotropic,
    Directional3gpp,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    /// Vertical element count N (rows).
    pub rows: usize,
    /// Horizontal element count M (columns).
    pub cols: usize,
    /// Vertical spacing in wavelengths.
    pub dv: f64,
    /// Horizontal spacing in wavelengths.
    pub dh: f64,
    pub pattern: ElementPattern,
}

impl ArrayConfig {
    pub fn n_elements(&self) -> usize {
        self.rows * self.cols
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows < 1 || self.cols < 1 {
            return Err(Error::invalid_input("array: rows and cols must be >= 1"));
        }
        if !(self.dv > 0.0) || !(self.dh > 0.0) {
            return Err(Error::invalid_input("array: spacings must be positive"));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Channel matrix
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelKind {
    TrueChannel,
    Estimated,
}

/// Complex NM x Nc frequency response, true or estimated.
#[derive(Clone, Debug)]
pub struct ChannelMatrix {
    pub data: Array2<Complex64>,
    pub kind: ChannelKind,
    /// Set when synthesized from an empty path set; downstream drops these.
    pub outage: bool,
}

impl ChannelMatrix {
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// UPA response for an arrival direction. Entry (n, m) at row n*M + m is
/// exp(-j 2 pi (n dv sin(el) + m dh cos(el) sin(az))); all entries have unit
/// modulus.
pub fn steering_vector(array: &ArrayConfig, azimuth: f64, elevation: f64) -> Array1<Complex64> {
    let nm = array.n_elements();
    let mut e = Array1::zeros(nm);
    let vert = array.dv * elevation.sin();
    let horiz = array.dh * elevation.cos() * azimuth.sin();
    for n in 0..array.rows {
        for m in 0..array.cols {
            let phase = -2.0 * PI * (n as f64 * vert + m as f64 * horiz);
            e[n * array.cols + m] = Complex64::from_polar(1.0, phase);
        }
    }
    e
}

/// Element amplitude pattern per arrival direction.
pub fn element_gain(pattern: ElementPattern, azimuth: f64, elevation: f64) -> f64 {
    match pattern {
        ElementPattern::Isotropic => 1.0,
        ElementPattern::Directional3gpp => element_gain_3gpp(azimuth, elevation),
    }
}

/// Directional element amplitude per 3GPP TR 38.901: 65 degree half-power
/// beamwidths in both cuts, 30 dB side-lobe floors, 8 dBi peak.
pub fn element_gain_3gpp(azimuth: f64, elevation: f64) -> f64 {
    let az_deg = azimuth.to_degrees();
    let el_deg = elevation.to_degrees();
    let a_v = -(12.0 * (el_deg / 65.0).powi(2)).min(30.0);
    let a_h = -(12.0 * (az_deg / 65.0).powi(2)).min(30.0);
    let a_db = -((-(a_v + a_h)).min(30.0));
    let gain_db = 8.0 + a_db;
    10f64.powf(gain_db / 20.0)
}

/// Channel frequency response of a multipath set:
/// H[:, l] = sum_p a_p exp(-j 2 pi f_l tau_p) g_p e(theta_p, phi_p).
///
/// An empty path set yields the zero matrix with the outage flag set.
pub fn synth_cfr(
    paths: &MultipathSet,
    array: &ArrayConfig,
    ofdm: &OfdmConfig,
) -> Result<ChannelMatrix> {
    array.validate()?;
    ofdm.validate()?;
    let nm = array.n_elements();
    let nc = ofdm.n_subcarriers;
    let mut h = Array2::<Complex64>::zeros((nm, nc));

    for p in &paths.paths {
        let e = steering_vector(array, p.azimuth, p.elevation);
        let g = element_gain(array.pattern, p.azimuth, p.elevation);
        let amp = p.gain * g;
        for l in 0..nc {
            let alpha =
                Complex64::from_polar(amp, -2.0 * PI * ofdm.subcarrier_freq(l) * p.delay);
            for i in 0..nm {
                h[[i, l]] += alpha * e[i];
            }
        }
    }

    Ok(ChannelMatrix {
        data: h,
        kind: ChannelKind::TrueChannel,
        outage: paths.paths.is_empty(),
    })
}

/// Outcome of a simulated uplink transmission over one OFDM symbol.
#[derive(Clone, Debug)]
pub struct UplinkRecord {
    /// Received NM x Nc matrix r[:, l] = h[:, l] s[l] + z[:, l].
    pub received: Array2<Complex64>,
    /// Unit-power QPSK pilot per subcarrier.
    pub pilots: Array1<Complex64>,
    /// Complex noise variance per entry.
    pub noise_var: f64,
}

/// Simulate the noisy pilot uplink at the given per-antenna SNR (dB),
/// averaged over subcarriers, pre-combining. `snr_db = +inf` is noiseless.
/// Fully determined by the seed.
pub fn simulate_uplink(h: &ChannelMatrix, snr_db: f64, seed: u64) -> Result<UplinkRecord> {
    if h.kind != ChannelKind::TrueChannel {
        return Err(Error::invalid_input("simulate_uplink: input must be a true channel"));
    }
    let (nm, nc) = h.data.dim();

    let mut pilot_rng = derive_rng(seed, stream::PILOT, 0);
    let pilots: Array1<Complex64> = (0..nc)
        .map(|_| {
            // Unit-power QPSK constellation point.
            let q = pilot_rng.gen_range(0u8..4);
            let phase = PI / 4.0 + PI / 2.0 * q as f64;
            Complex64::from_polar(1.0, phase)
        })
        .collect();

    let signal_power = h.frobenius_sq() / (nm * nc) as f64;
    let noise_var = if snr_db.is_infinite() && snr_db > 0.0 {
        0.0
    } else {
        signal_power / 10f64.powf(snr_db / 10.0)
    };

    let mut noise_rng = derive_rng(seed, stream::UPLINK_NOISE, 0);
    let sigma = (noise_var / 2.0).sqrt();
    let mut received = Array2::<Complex64>::zeros((nm, nc));
    for l in 0..nc {
        for i in 0..nm {
            let re: f64 = noise_rng.sample(StandardNormal);
            let im: f64 = noise_rng.sample(StandardNormal);
            received[[i, l]] = h.data[[i, l]] * pilots[l] + Complex64::new(re * sigma, im * sigma);
        }
    }

    Ok(UplinkRecord {
        received,
        pilots,
        noise_var,
    })
}

/// Per-subcarrier least-squares channel estimate:
/// h_hat[:, l] = r[:, l] conj(s[l]) / |s[l]|^2.
pub fn estimate_channel_ls(
    received: &Array2<Complex64>,
    pilots: &Array1<Complex64>,
) -> Result<ChannelMatrix> {
    let (nm, nc) = received.dim();
    if pilots.len() != nc {
        return Err(Error::invalid_input("estimate_channel_ls: pilot length mismatch"));
    }
    if pilots.iter().any(|s| s.norm_sqr() == 0.0) {
        return Err(Error::invalid_input("estimate_channel_ls: zero-magnitude pilot"));
    }
    let mut est = Array2::<Complex64>::zeros((nm, nc));
    for l in 0..nc {
        let inv = pilots[l].conj() / pilots[l].norm_sqr();
        for i in 0..nm {
            est[[i, l]] = received[[i, l]] * inv;
        }
    }
    Ok(ChannelMatrix {
        data: est,
        kind: ChannelKind::Estimated,
        outage: false,
    })
}
