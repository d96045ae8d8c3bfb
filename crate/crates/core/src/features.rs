//! Hand-crafted multipath features and MPC recovery from estimated channels.
//!
//! The six-feature vector summarizes a multipath set: total received
//! amplitude, strongest path power, RMS delay spread, delay gap between the
//! strongest and earliest components, and power-weighted angular spreads in
//! azimuth and elevation. Feature order is fixed:
//! (p_rss, p_max, tau_rms, delta_tau, theta_rms, phi_rms).
//!
//! For the test path, multipath components are recovered from an estimated
//! channel by peak picking on its angle-delay power matrix and inverting the
//! bin indices back to delay, arrival angles, and amplitude.

use crate::adcpm::{compute_adcpm, TransformPlan};
use crate::channel::{ArrayConfig, ChannelMatrix, OfdmConfig};
use crate::error::{Error, Result};
use crate::geometry::{MultipathSet, PathComponent};
use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const FEATURE_DIM: usize = 6;
pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "p_rss",
    "p_max",
    "tau_rms",
    "delta_tau",
    "theta_rms",
    "phi_rms",
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Sum of path amplitudes (unitary transmit power).
    pub p_rss: f64,
    /// Largest per-path power.
    pub p_max: f64,
    /// Power-weighted RMS delay spread, seconds.
    pub tau_rms: f64,
    /// Delay of the strongest path minus the minimum delay, seconds.
    pub delta_tau: f64,
    /// Power-weighted azimuth spread about the circular mean, radians.
    pub theta_rms: f64,
    /// Power-weighted elevation spread, radians.
    pub phi_rms: f64,
}

impl FeatureVector {
    pub fn to_array(self) -> [f64; FEATURE_DIM] {
        [
            self.p_rss,
            self.p_max,
            self.tau_rms,
            self.delta_tau,
            self.theta_rms,
            self.phi_rms,
        ]
    }

    pub fn from_array(a: [f64; FEATURE_DIM]) -> Self {
        FeatureVector {
            p_rss: a[0],
            p_max: a[1],
            tau_rms: a[2],
            delta_tau: a[3],
            theta_rms: a[4],
            phi_rms: a[5],
        }
    }
}

/// Wrap an angle into (-pi, pi].
fn wrap_pi(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Compute the feature vector of a non-empty multipath set.
pub fn extract_features(set: &MultipathSet) -> Result<FeatureVector> {
    if set.paths.is_empty() {
        return Err(Error::invalid_input("extract_features: empty path set"));
    }
    let amps: Vec<f64> = set.paths.iter().map(|p| p.gain.abs()).collect();
    let powers: Vec<f64> = amps.iter().map(|a| a * a).collect();
    let total_power: f64 = powers.iter().sum();

    let p_rss = amps.iter().sum();
    let p_max = powers.iter().copied().fold(0.0f64, f64::max);

    let tau_mean: f64 = set
        .paths
        .iter()
        .zip(&powers)
        .map(|(p, w)| w * p.delay)
        .sum::<f64>()
        / total_power;
    let tau_var: f64 = set
        .paths
        .iter()
        .zip(&powers)
        .map(|(p, w)| w * (p.delay - tau_mean).powi(2))
        .sum::<f64>()
        / total_power;
    let tau_rms = tau_var.max(0.0).sqrt();

    // Strongest path by amplitude, first on ties.
    let strongest = amps
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.partial_cmp(b).unwrap().then(ib.cmp(ia)))
        .map(|(i, _)| i)
        .unwrap();
    let tau_min = set
        .paths
        .iter()
        .map(|p| p.delay)
        .fold(f64::INFINITY, f64::min);
    let delta_tau = set.paths[strongest].delay - tau_min;

    // Azimuth spread about the power-weighted circular mean; the unwrap
    // avoids the +-pi seam inflating the spread.
    let sin_sum: f64 = set
        .paths
        .iter()
        .zip(&powers)
        .map(|(p, w)| w * p.azimuth.sin())
        .sum();
    let cos_sum: f64 = set
        .paths
        .iter()
        .zip(&powers)
        .map(|(p, w)| w * p.azimuth.cos())
        .sum();
    let az_mean = sin_sum.atan2(cos_sum);
    let az_var: f64 = set
        .paths
        .iter()
        .zip(&powers)
        .map(|(p, w)| w * wrap_pi(p.azimuth - az_mean).powi(2))
        .sum::<f64>()
        / total_power;
    let theta_rms = az_var.max(0.0).sqrt();

    let el_mean: f64 = set
        .paths
        .iter()
        .zip(&powers)
        .map(|(p, w)| w * p.elevation)
        .sum::<f64>()
        / total_power;
    let el_var: f64 = set
        .paths
        .iter()
        .zip(&powers)
        .map(|(p, w)| w * (p.elevation - el_mean).powi(2))
        .sum::<f64>()
        / total_power;
    let phi_rms = el_var.max(0.0).sqrt();

    Ok(FeatureVector {
        p_rss,
        p_max,
        tau_rms,
        delta_tau,
        theta_rms,
        phi_rms,
    })
}

/// Recover multipath components from an estimated channel by peak picking on
/// its single-snapshot angle-delay power matrix.
///
/// Local maxima (8-neighborhood) above `global max * 10^(-threshold_db/10)`
/// are selected strongest-first, up to `max_paths`, with ties broken by
/// (delay bin, angle bin) ascending. Bin indices invert to delay, arrival
/// angles (principal values), and amplitude = sqrt(bin power). The returned
/// set carries placeholder bounce counts and no LoS claim.
pub fn estimate_mpc(
    h_est: &ChannelMatrix,
    array: &ArrayConfig,
    ofdm: &OfdmConfig,
    max_paths: usize,
    threshold_db: f64,
) -> Result<MultipathSet> {
    let plan = TransformPlan::new(array, ofdm);
    estimate_mpc_with_plan(&plan, h_est, array, ofdm, max_paths, threshold_db)
}

/// [`estimate_mpc`] with a caller-provided transform plan for reuse.
pub fn estimate_mpc_with_plan(
    plan: &TransformPlan,
    h_est: &ChannelMatrix,
    array: &ArrayConfig,
    ofdm: &OfdmConfig,
    max_paths: usize,
    threshold_db: f64,
) -> Result<MultipathSet> {
    if h_est
        .data
        .iter()
        .any(|c| !c.re.is_finite() || !c.im.is_finite())
    {
        return Err(Error::invalid_input("estimate_mpc: non-finite channel entries"));
    }
    let g = plan.apply(&h_est.data)?;
    let x = compute_adcpm(&[g])?;
    let (rows, cols) = x.data.dim();

    let global_max = x.max_value();
    if global_max <= 0.0 {
        return Ok(MultipathSet {
            paths: vec![],
            is_los: false,
            ue_position: Vec3::default(),
        });
    }
    let floor = global_max * 10f64.powf(-threshold_db / 10.0);

    // Local maxima over the angle-delay grid.
    let mut candidates: Vec<(usize, usize, f64)> = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = x.data[[r, c]];
            if v < floor {
                continue;
            }
            let mut is_peak = true;
            'scan: for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                    if nr < 0 || nc < 0 || nr >= rows as i64 || nc >= cols as i64 {
                        continue;
                    }
                    if x.data[[nr as usize, nc as usize]] > v {
                        is_peak = false;
                        break 'scan;
                    }
                }
            }
            if is_peak {
                candidates.push((r, c, v));
            }
        }
    }

    // Strongest first; ties by (delay bin, angle bin) ascending.
    candidates.sort_by(|a, b| {
        b.2.total_cmp(&a.2)
            .then(a.1.cmp(&b.1))
            .then(a.0.cmp(&b.0))
    });
    candidates.truncate(max_paths);

    let n = array.rows as f64;
    let m = array.cols as f64;
    let mut paths: Vec<PathComponent> = candidates
        .into_iter()
        .map(|(r, c, v)| {
            let vert = (r / array.cols) as f64;
            let horiz = (r % array.cols) as f64;
            let sin_el = ((vert - n / 2.0) / (n * array.dv)).clamp(-1.0, 1.0);
            let elevation = sin_el.asin();
            let cos_el = elevation.cos().max(1e-12);
            let sin_az = ((horiz - m / 2.0) / (m * array.dh * cos_el)).clamp(-1.0, 1.0);
            let azimuth = sin_az.asin();
            PathComponent {
                gain: v.sqrt(),
                delay: c as f64 * ofdm.sample_interval(),
                azimuth,
                elevation,
                bounces: 0,
            }
        })
        .collect();
    paths.sort_by(|a, b| a.delay.total_cmp(&b.delay));

    Ok(MultipathSet {
        paths,
        is_los: false,
        ue_position: Vec3::default(),
    })
}

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

/// Per-dimension zero-mean/unit-variance scaler fitted on a training set.
/// Dimensions with zero variance pass through unscaled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: [f64; FEATURE_DIM],
    pub std: [f64; FEATURE_DIM],
}

impl Scaler {
    pub fn apply(&self, f: &FeatureVector) -> FeatureVector {
        let x = f.to_array();
        let mut out = [0.0; FEATURE_DIM];
        for d in 0..FEATURE_DIM {
            out[d] = if self.std[d] > 0.0 {
                (x[d] - self.mean[d]) / self.std[d]
            } else {
                x[d]
            };
        }
        FeatureVector::from_array(out)
    }
}

/// Fit a scaler on the given samples and return the standardized set with it.
pub fn standardize(features: &[FeatureVector]) -> Result<(Vec<FeatureVector>, Scaler)> {
    if features.len() < 2 {
        return Err(Error::invalid_input("standardize: need at least 2 samples"));
    }
    let n = features.len() as f64;
    let mut sum = [0.0; FEATURE_DIM];
    for f in features {
        for (d, v) in f.to_array().iter().enumerate() {
            sum[d] += v;
        }
    }
    let mean = sum.map(|s| s / n);
    let mut sq = [0.0; FEATURE_DIM];
    for f in features {
        for (d, v) in f.to_array().iter().enumerate() {
            sq[d] += (v - mean[d]).powi(2);
        }
    }
    let mut std = [0.0; FEATURE_DIM];
    for d in 0..FEATURE_DIM {
        let s = (sq[d] / n).sqrt();
        // Columns that are constant up to float dust pass through unscaled.
        if s > 1e-12 * mean[d].abs().max(1.0) {
            std[d] = s;
        }
    }
    let scaler = Scaler { mean, std };
    let out = features.iter().map(|f| scaler.apply(f)).collect();
    Ok((out, scaler))
}

/// CSV table of features: one row per sample, snr_db empty for twin ground
/// truth rows.
pub fn features_to_csv(rows: &[(FeatureVector, u8, Option<f64>)]) -> String {
    let mut s = String::from("p_rss,p_max,tau_rms,delta_tau,theta_rms,phi_rms,label,snr_db\n");
    for (f, label, snr) in rows {
        let a = f.to_array();
        let snr_s = snr.map(|v| format!("{v}")).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{},{label},{snr_s}\n",
            a[0], a[1], a[2], a[3], a[4], a[5]
        ));
    }
    s
}
