//! Dataset manifest: provenance, counts, and the train/test split.

use crate::channel::{ArrayConfig, OfdmConfig};
use crate::error::{Error, Result};
use crate::rng::{derive_rng, stream};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    /// SHA-256 of the scene file bytes, hex.
    pub scene_hash: String,
    pub ofdm: OfdmConfig,
    pub array: ArrayConfig,
    pub master_seed: u64,
    pub cell_size: f64,
    pub ue_height: f64,
    pub sample_count: usize,
    pub los_count: usize,
    pub grid_positions: usize,
    pub outage_excluded: usize,
    pub cp_rejected: usize,
    pub subsampled_away: usize,
    /// Sorted test-sample indices; everything else is training data.
    pub test_indices: Vec<usize>,
}

impl DatasetManifest {
    pub fn train_indices(&self) -> Vec<usize> {
        (0..self.sample_count)
            .filter(|i| self.test_indices.binary_search(i).is_err())
            .collect()
    }

    pub fn los_fraction(&self) -> f64 {
        self.los_count as f64 / self.sample_count as f64
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Data(format!("manifest: serialize: {e}")))
    }

    pub fn from_toml_str(text: &str) -> Result<DatasetManifest> {
        let m: DatasetManifest =
            toml::from_str(text).map_err(|e| Error::Data(format!("manifest: {e}")))?;
        if m.format_version != MANIFEST_VERSION {
            return Err(Error::Data(format!(
                "manifest: unsupported format_version {}",
                m.format_version
            )));
        }
        if !m.test_indices.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Data("manifest: test_indices must be sorted unique".into()));
        }
        if let Some(&max) = m.test_indices.last() {
            if max >= m.sample_count {
                return Err(Error::Data("manifest: test index out of range".into()));
            }
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<DatasetManifest> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::Data(format!("cannot read manifest {}: {e}", path.as_ref().display()))
        })?;
        Self::from_toml_str(&text)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// Requested test-set size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SplitSize {
    Count(usize),
    Fraction(f64),
}

impl SplitSize {
    fn resolve(&self, n: usize) -> Result<usize> {
        let k = match *self {
            SplitSize::Count(c) => c,
            SplitSize::Fraction(f) => {
                if !(0.0..1.0).contains(&f) {
                    return Err(Error::invalid_input("split: fraction must be in [0, 1)"));
                }
                (f * n as f64).round() as usize
            }
        };
        if k >= n {
            return Err(Error::invalid_input(format!(
                "split: test count {k} must be smaller than the dataset ({n})"
            )));
        }
        Ok(k)
    }
}

/// Draw the test set uniformly without replacement and persist it in the
/// manifest. With `stratified` the LoS fraction of the test set matches the
/// dataset within one sample.
pub fn split(
    manifest: &mut DatasetManifest,
    labels: &[u8],
    size: SplitSize,
    stratified: bool,
    seed: u64,
) -> Result<()> {
    let n = manifest.sample_count;
    if labels.len() != n {
        return Err(Error::invalid_input("split: label count mismatch"));
    }
    let k = size.resolve(n)?;
    let mut rng = derive_rng(seed, stream::SPLIT, 0);

    let mut test: Vec<usize> = if stratified {
        let pos: Vec<usize> = (0..n).filter(|&i| labels[i] == 1).collect();
        let neg: Vec<usize> = (0..n).filter(|&i| labels[i] == 0).collect();
        let k_pos = ((k as f64) * (pos.len() as f64) / (n as f64)).round() as usize;
        let k_pos = k_pos.min(pos.len()).min(k);
        let k_neg = (k - k_pos).min(neg.len());
        let mut p = pos.clone();
        p.shuffle(&mut rng);
        let mut q = neg.clone();
        q.shuffle(&mut rng);
        p.truncate(k_pos);
        q.truncate(k_neg);
        p.extend(q);
        p
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        idx.truncate(k);
        idx
    };
    test.sort_unstable();
    manifest.test_indices = test;
    Ok(())
}
