//! Experiment configuration file (TOML, schema-versioned).
//!
//! ```toml
//! schema = "twinlos-experiment"
//! version = 1
//!
//! [dataset]
//! scene = "scene.toml"        # scene description file
//! profile = "desk"            # "desk" or "paper"; explicit [dataset.ofdm]
//!                             # and [dataset.array] tables override it
//! cell_size = 2.0
//! ue_height = 1.5
//! max_samples = 2000          # optional subsample cap
//! test_fraction = 0.25
//! stratified = false
//! seed = 1                    # generation + split seed
//!
//! [model]
//! family = "resnet_mini"      # svm_linear | svm_rbf | rf | resnet_mini | segnet_mini
//! pool = [4, 4]               # optional ADCPM max-pool kernel
//! augment_snr_db = 0.0        # optional training AWGN
//! epochs = 30
//! batch_size = 32
//! learning_rate = 1e-3
//! optimizer = "adam"          # adam | sgd_momentum
//! w_rec = 0.1
//! noise_domain = "channel"    # channel | adcpm (augmentation ablation)
//! seed = 1
//!
//! [classic]
//! grid_search = true
//! k_folds = 5
//! c = 1.0                     # used when grid_search = false
//! rbf_gamma = 0.2
//! n_trees = 100
//! max_depth = 12
//! min_leaf = 2
//!
//! [mpc]
//! max_paths = 10
//! threshold_db = 20.0
//!
//! [eval]
//! snr_list = [-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0]
//! eval_snr_db = 0.0
//! seed = 7
//! ```

use crate::channel::{ArrayConfig, ElementPattern, OfdmConfig};
use crate::deepnet::{NoiseDomain, OptimizerChoice, Preset};
use crate::error::{Error, Result};
use crate::model::MpcConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const EXPERIMENT_SCHEMA: &str = "twinlos-experiment";
pub const EXPERIMENT_VERSION: u32 = 1;

/// Default SNR sweep axis, dB.
pub const DEFAULT_SNR_SWEEP: [f64; 7] = [-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0];

/// Full-scale configuration used in the reference measurements.
pub fn paper_profile() -> (OfdmConfig, ArrayConfig) {
    (
        OfdmConfig {
            fc: 28e9,
            bandwidth: 400e6,
            n_subcarriers: 512,
            n_guard: 128,
        },
        ArrayConfig {
            rows: 8,
            cols: 16,
            dv: 0.8,
            dh: 0.5,
            pattern: ElementPattern::Isotropic,
        },
    )
}

/// Reduced profile for fast desk-scale runs.
pub fn desk_profile() -> (OfdmConfig, ArrayConfig) {
    (
        OfdmConfig {
            fc: 28e9,
            bandwidth: 100e6,
            n_subcarriers: 128,
            n_guard: 120,
        },
        ArrayConfig {
            rows: 4,
            cols: 8,
            dv: 0.8,
            dh: 0.5,
            pattern: ElementPattern::Isotropic,
        },
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    SvmLinear,
    SvmRbf,
    Rf,
    ResnetMini,
    SegnetMini,
}

impl ModelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::SvmLinear => "svm_linear",
            ModelFamily::SvmRbf => "svm_rbf",
            ModelFamily::Rf => "rf",
            ModelFamily::ResnetMini => "resnet_mini",
            ModelFamily::SegnetMini => "segnet_mini",
        }
    }

    pub fn is_deep(&self) -> bool {
        matches!(self, ModelFamily::ResnetMini | ModelFamily::SegnetMini)
    }

    pub fn preset(&self) -> Option<Preset> {
        match self {
            ModelFamily::ResnetMini => Some(Preset::ResnetMini),
            ModelFamily::SegnetMini => Some(Preset::SegnetMini),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub scene: String,
    #[serde(default = "default_profile")]
    pub profile: String,
    #[serde(default)]
    pub ofdm: Option<OfdmConfig>,
    #[serde(default)]
    pub array: Option<ArrayConfig>,
    #[serde(default = "default_cell")]
    pub cell_size: f64,
    #[serde(default = "default_height")]
    pub ue_height: f64,
    #[serde(default)]
    pub max_samples: Option<usize>,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub stratified: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_profile() -> String {
    "desk".into()
}
fn default_cell() -> f64 {
    2.0
}
fn default_height() -> f64 {
    1.5
}
fn default_test_fraction() -> f64 {
    0.25
}

impl DatasetSection {
    pub fn resolve_configs(&self) -> Result<(OfdmConfig, ArrayConfig)> {
        let (ofdm, array) = match self.profile.as_str() {
            "desk" => desk_profile(),
            "paper" => paper_profile(),
            other => {
                return Err(Error::Config(format!(
                    "dataset.profile: unknown profile \"{other}\" (desk or paper)"
                )))
            }
        };
        let ofdm = self.ofdm.unwrap_or(ofdm);
        let array = self.array.unwrap_or(array);
        ofdm.validate().map_err(|e| Error::Config(format!("dataset.ofdm: {e}")))?;
        array
            .validate()
            .map_err(|e| Error::Config(format!("dataset.array: {e}")))?;
        Ok((ofdm, array))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub family: ModelFamily,
    #[serde(default)]
    pub pool: Option<(usize, usize)>,
    #[serde(default)]
    pub augment_snr_db: Option<f64>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerChoice,
    #[serde(default = "default_w_rec")]
    pub w_rec: f64,
    #[serde(default = "default_noise_domain")]
    pub noise_domain: NoiseDomain,
    #[serde(default)]
    pub seed: u64,
    /// Fraction of the training split held out for the epoch log.
    #[serde(default = "default_val_fraction")]
    pub val_fraction: f64,
}

fn default_epochs() -> usize {
    30
}
fn default_batch() -> usize {
    32
}
fn default_lr() -> f64 {
    1e-3
}
fn default_optimizer() -> OptimizerChoice {
    OptimizerChoice::Adam
}
fn default_w_rec() -> f64 {
    0.1
}
fn default_noise_domain() -> NoiseDomain {
    NoiseDomain::Channel
}
fn default_val_fraction() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassicSection {
    pub grid_search: bool,
    pub k_folds: usize,
    pub c: f64,
    pub rbf_gamma: Option<f64>,
    pub tol: f64,
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for ClassicSection {
    fn default() -> Self {
        ClassicSection {
            grid_search: true,
            k_folds: 5,
            c: 1.0,
            rbf_gamma: None,
            tol: 1e-4,
            n_trees: 100,
            max_depth: 12,
            min_leaf: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MpcSection {
    pub max_paths: usize,
    pub threshold_db: f64,
}

impl Default for MpcSection {
    fn default() -> Self {
        let d = MpcConfig::default();
        MpcSection {
            max_paths: d.max_paths,
            threshold_db: d.threshold_db,
        }
    }
}

impl MpcSection {
    pub fn to_config(&self) -> MpcConfig {
        MpcConfig {
            max_paths: self.max_paths,
            threshold_db: self.threshold_db,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub snr_list: Vec<f64>,
    pub eval_snr_db: f64,
    pub seed: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            snr_list: DEFAULT_SNR_SWEEP.to_vec(),
            eval_snr_db: 0.0,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    pub version: u32,
    pub dataset: DatasetSection,
    pub model: ModelSection,
    #[serde(default)]
    pub classic: ClassicSection,
    #[serde(default)]
    pub mpc: MpcSection,
    #[serde(default)]
    pub eval: EvalSection,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("experiment config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::Config(format!(
                "cannot read experiment config {}: {e}",
                path.as_ref().display()
            ))
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != EXPERIMENT_SCHEMA {
            return Err(Error::Config(format!(
                "schema: expected \"{EXPERIMENT_SCHEMA}\", got \"{}\"",
                self.schema
            )));
        }
        if self.version != EXPERIMENT_VERSION {
            return Err(Error::Config(format!(
                "version: expected {EXPERIMENT_VERSION}, got {}",
                self.version
            )));
        }
        if !(self.dataset.test_fraction > 0.0 && self.dataset.test_fraction < 1.0) {
            return Err(Error::Config(
                "dataset.test_fraction: must be in (0, 1)".into(),
            ));
        }
        if let Some((kh, kw)) = self.model.pool {
            if kh == 0 || kw == 0 {
                return Err(Error::Config("model.pool: kernel dims must be >= 1".into()));
            }
        }
        if self.model.is_deep_and_invalid() {
            return Err(Error::Config(
                "model: epochs and batch_size must be positive".into(),
            ));
        }
        if self.classic.k_folds < 2 {
            return Err(Error::Config("classic.k_folds: must be >= 2".into()));
        }
        if self.eval.snr_list.is_empty() {
            return Err(Error::Config("eval.snr_list: must not be empty".into()));
        }
        Ok(())
    }
}

impl ModelSection {
    fn is_deep_and_invalid(&self) -> bool {
        self.family.is_deep() && (self.epochs == 0 || self.batch_size == 0)
    }
}
