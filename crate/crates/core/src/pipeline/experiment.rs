//! Experiment orchestration: staged, idempotent artifact production.
//!
//! Every stage reuses artifacts already present in the output directory and
//! writes the ones it is missing; `force` recomputes a stage's own outputs.
//! Training consumes twin ground truth (hand-crafted features of the traced
//! paths for classic models, clean or AWGN-augmented power matrices for the
//! deep models); evaluation always goes through the simulated uplink and the
//! least-squares channel estimate, never the ground-truth paths.

use super::dataset::{generate_dataset, load_dataset, save_dataset, Dataset};
use super::expconfig::{ExperimentConfig, ModelFamily};
use super::manifest::{sha256_hex, split, DatasetManifest, SplitSize, MANIFEST_VERSION};
use crate::adcpm::TransformPlan;
use crate::channel::{ArrayConfig, OfdmConfig};
use crate::classic_ml::{kfold, rf_train, svm_train, Kernel};
use crate::deepnet::{
    build_preset, train, AdcpmRecipe, DlSample, Network, TrainConfig, TrainLog,
};
use crate::error::{Error, Result};
use crate::evalkit::{
    eval_sweep, flops, roc, roc_to_csv, RocCurve, SweepResult,
    SEGNET_REFERENCE_ENCODER_GFLOPS, SEGNET_REFERENCE_TOTAL_GFLOPS,
};
use crate::features::{extract_features, features_to_csv, standardize, FeatureVector};
use crate::geometry::{load_scene, AxisBox, Scene};
use crate::model::{load_model, save_model, ModelArtifact, NetArtifact, RfArtifact, SvmArtifact};
use crate::vec3::Vec3;
use ndarray::Array2;
use std::path::{Path, PathBuf};

/// Loaded experiment: config, resolved radio profile, scene, output dir.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub scene: Scene,
    pub scene_hash: String,
    pub ofdm: OfdmConfig,
    pub array: ArrayConfig,
    pub out_dir: PathBuf,
}

impl Experiment {
    /// Load the config and its scene; `scene` paths are resolved relative to
    /// the config file's directory.
    pub fn load(config_path: impl AsRef<Path>, out_dir: impl Into<PathBuf>) -> Result<Experiment> {
        let config_path = config_path.as_ref();
        let text = std::fs::read_to_string(config_path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", config_path.display()))
        })?;
        let config = ExperimentConfig::from_toml_str(&text)?;
        let scene_path = config_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(&config.dataset.scene);
        let scene_bytes = std::fs::read(&scene_path).map_err(|e| {
            Error::Data(format!("cannot read scene {}: {e}", scene_path.display()))
        })?;
        let scene = load_scene(&scene_path)?;
        Self::assemble(config, text, scene, sha256_hex(&scene_bytes), out_dir)
    }

    /// Build an experiment from in-memory parts (tests and toy runs).
    pub fn from_parts(
        config: ExperimentConfig,
        scene: Scene,
        out_dir: impl Into<PathBuf>,
    ) -> Result<Experiment> {
        config.validate()?;
        let scene_text = crate::geometry::scene_to_toml_string(&scene)?;
        let config_text = toml::to_string(&config)
            .map_err(|e| Error::Config(format!("config serialize: {e}")))?;
        let hash = sha256_hex(scene_text.as_bytes());
        Self::assemble(config, config_text, scene, hash, out_dir)
    }

    fn assemble(
        config: ExperimentConfig,
        config_text: String,
        scene: Scene,
        scene_hash: String,
        out_dir: impl Into<PathBuf>,
    ) -> Result<Experiment> {
        let (ofdm, array) = config.dataset.resolve_configs()?;
        let out_dir = out_dir.into();
        std::fs::create_dir_all(&out_dir)?;
        Ok(Experiment {
            config_hash: sha256_hex(config_text.as_bytes()),
            config,
            scene,
            scene_hash,
            ofdm,
            array,
            out_dir,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn family(&self) -> ModelFamily {
        self.config.model.family
    }

    /// ADCPM recipe shared by deep training and deep evaluation.
    pub fn recipe(&self) -> AdcpmRecipe {
        AdcpmRecipe {
            plan: TransformPlan::new(&self.array, &self.ofdm),
            pool: self.config.model.pool,
        }
    }

    /// CNN input dims after optional pooling.
    pub fn input_dims(&self) -> (usize, usize) {
        let full = (self.array.n_elements(), self.ofdm.n_subcarriers);
        match self.config.model.pool {
            Some((kh, kw)) => (full.0.div_ceil(kh), full.1.div_ceil(kw)),
            None => full,
        }
    }
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

/// Generate (or reload) the dataset container and manifest.
pub fn stage_generate(exp: &Experiment, force: bool) -> Result<(Dataset, DatasetManifest)> {
    let data_path = exp.path("dataset.ndtl");
    let manifest_path = exp.path("manifest.toml");
    if !force && data_path.exists() && manifest_path.exists() {
        let manifest = DatasetManifest::load(&manifest_path)?;
        if manifest.scene_hash != exp.scene_hash {
            return Err(Error::Data(
                "existing dataset was generated from a different scene; use force".into(),
            ));
        }
        return Ok((load_dataset(&data_path)?, manifest));
    }

    let ds = &exp.config.dataset;
    let (dataset, stats) = generate_dataset(
        &exp.scene,
        &exp.array,
        &exp.ofdm,
        ds.cell_size,
        ds.ue_height,
        ds.max_samples,
        ds.seed,
    )?;
    if dataset.is_empty() {
        return Err(Error::Data("generation produced no usable samples".into()));
    }
    let manifest = DatasetManifest {
        format_version: MANIFEST_VERSION,
        scene_hash: exp.scene_hash.clone(),
        ofdm: exp.ofdm,
        array: exp.array,
        master_seed: ds.seed,
        cell_size: ds.cell_size,
        ue_height: ds.ue_height,
        sample_count: dataset.len(),
        los_count: dataset.los_count(),
        grid_positions: stats.grid_positions,
        outage_excluded: stats.outage_excluded,
        cp_rejected: stats.cp_rejected,
        subsampled_away: stats.subsampled_away,
        test_indices: vec![],
    };
    save_dataset(&dataset, &data_path)?;
    manifest.save(&manifest_path)?;
    Ok((dataset, manifest))
}

/// Draw (or reload) the train/test split and persist it in the manifest.
pub fn stage_split(exp: &Experiment, force: bool) -> Result<(Dataset, DatasetManifest)> {
    let (dataset, mut manifest) = stage_generate(exp, false)?;
    if !manifest.test_indices.is_empty() && !force {
        return Ok((dataset, manifest));
    }
    let labels: Vec<u8> = dataset.samples.iter().map(|s| s.label).collect();
    split(
        &mut manifest,
        &labels,
        SplitSize::Fraction(exp.config.dataset.test_fraction),
        exp.config.dataset.stratified,
        exp.config.dataset.seed,
    )?;
    manifest.save(exp.path("manifest.toml"))?;
    Ok((dataset, manifest))
}

/// Dump the twin ground-truth feature table.
pub fn stage_features(exp: &Experiment, force: bool) -> Result<PathBuf> {
    let path = exp.path("features.csv");
    if path.exists() && !force {
        return Ok(path);
    }
    let (dataset, _) = stage_generate(exp, false)?;
    let rows: Vec<(FeatureVector, u8, Option<f64>)> = dataset
        .samples
        .iter()
        .map(|s| Ok((extract_features(&s.truth)?, s.label, None)))
        .collect::<Result<Vec<_>>>()?;
    std::fs::write(&path, features_to_csv(&rows))?;
    Ok(path)
}

fn checkpoint_name(family: ModelFamily) -> String {
    format!("model_{}.ckpt", family.name())
}

/// Train (or reload) the configured model.
pub fn stage_train(exp: &Experiment, force: bool) -> Result<ModelArtifact> {
    let ckpt = exp.path(&checkpoint_name(exp.family()));
    if ckpt.exists() && !force {
        return load_model(&ckpt);
    }
    let (dataset, manifest) = stage_split(exp, false)?;
    let train_idx = manifest.train_indices();

    let artifact = if exp.family().is_deep() {
        let (art, log) = train_deep(exp, &dataset, &train_idx)?;
        std::fs::write(
            exp.path(&format!("train_log_{}.csv", exp.family().name())),
            log.to_csv(),
        )?;
        ModelArtifact::Net(art)
    } else {
        let (art, tune_note) = train_classic(exp, &dataset, &train_idx)?;
        std::fs::write(exp.path(&format!("tune_{}.txt", exp.family().name())), tune_note)?;
        art
    };
    save_model(&artifact, &ckpt)?;
    Ok(artifact)
}

/// Full SNR sweep on the test split.
pub fn stage_sweep(exp: &Experiment, __force: bool) -> Result<SweepResult> {
    let family = exp.family();
    let sweep_path = exp.path(&format!("sweep_{}.csv", family.name()));
    let artifact = stage_train(exp, false)?;
    let (dataset, manifest) = stage_split(exp, false)?;
    let (channels, labels) = test_set(&dataset, &manifest);

    // Scores are not persisted, so the sweep recomputes even when its CSV
    // exists; outputs are deterministic either way.
    let result = eval_sweep(
        artifact.scorer(),
        &channels,
        &labels,
        &exp.config.eval.snr_list,
        exp.config.eval.seed,
    )?;
    std::fs::write(&sweep_path, result.to_csv())?;
    for (j, point) in result.points.iter().enumerate() {
        let curve = roc(&result.scores[j], &labels)?;
        std::fs::write(
            exp.path(&format!("roc_{}_{}.csv", family.name(), point.snr_db)),
            roc_to_csv(&curve),
        )?;
    }
    Ok(result)
}

/// Single-SNR evaluation: accuracy at the 0.5 threshold plus the ROC curve.
pub fn stage_eval(exp: &Experiment, snr_db: f64, _force: bool) -> Result<(f64, f64, RocCurve)> {
    let artifact = stage_train(exp, false)?;
    let (dataset, manifest) = stage_split(exp, false)?;
    let (channels, labels) = test_set(&dataset, &manifest);
    let result = eval_sweep(
        artifact.scorer(),
        &channels,
        &labels,
        &[snr_db],
        exp.config.eval.seed,
    )?;
    let curve = roc(&result.scores[0], &labels)?;
    std::fs::write(
        exp.path(&format!("roc_{}_{}.csv", exp.family().name(), snr_db)),
        roc_to_csv(&curve),
    )?;
    Ok((result.points[0].accuracy, result.points[0].auc, curve))
}

/// Analytic cost reports: the configured net (when deep) plus the reference
/// comparison table.
pub fn stage_flops(exp: &Experiment, force: bool) -> Result<PathBuf> {
    let reference = exp.path("flops_reference.txt");
    if !reference.exists() || force {
        std::fs::write(&reference, reference_cost_table()?)?;
    }
    if let Some(preset) = exp.family().preset() {
        let path = exp.path(&format!("flops_{}.txt", exp.family().name()));
        if !path.exists() || force {
            let spec = build_preset(preset, exp.input_dims())?;
            std::fs::write(&path, flops(&spec)?.to_text())?;
        }
    }
    Ok(reference)
}

/// Reference inference-cost comparison, reproducing the published table.
pub fn reference_cost_table() -> Result<String> {
    let full = flops(&build_preset(crate::deepnet::Preset::Resnet34Reference, (128, 512))?)?;
    let down = flops(&build_preset(crate::deepnet::Preset::Resnet34Reference, (32, 128))?)?;
    let g_full = full.total_gflops();
    let g_down = down.total_gflops();
    let mut s = String::new();
    s.push_str("# inference cost comparison (1 MAC = 2 FLOPs)\n");
    s.push_str(&format!(
        "segnet_reference (128,512) total: {SEGNET_REFERENCE_TOTAL_GFLOPS:.2} GFLOPs (cited constant)\n"
    ));
    s.push_str(&format!(
        "segnet_reference (128,512) encoder (inference): {SEGNET_REFERENCE_ENCODER_GFLOPS:.2} GFLOPs (cited constant)\n"
    ));
    s.push_str(&format!("resnet34_reference (128,512): {g_full:.4} GFLOPs\n"));
    s.push_str(&format!("resnet34_reference (32,128): {g_down:.4} GFLOPs\n"));
    s.push_str(&format!(
        "downsampling reduction: {:.1}%\n",
        100.0 * (1.0 - g_down / g_full)
    ));
    s.push_str(&format!(
        "reduction vs segnet encoder: {:.2}%\n",
        100.0 * (1.0 - g_down / SEGNET_REFERENCE_ENCODER_GFLOPS)
    ));
    Ok(s)
}

/// Assemble the summary from stored artifacts.
pub fn stage_report(exp: &Experiment) -> Result<String> {
    let manifest = DatasetManifest::load(exp.path("manifest.toml"))?;
    let family = exp.family();
    let sweep_csv = std::fs::read_to_string(exp.path(&format!("sweep_{}.csv", family.name())))
        .map_err(|e| Error::Data(format!("missing sweep artifact (run sweep first): {e}")))?;

    let mut s = String::new();
    s.push_str(&format!("experiment summary: {}\n", family.name()));
    s.push_str(&format!(
        "dataset: {} samples ({} LoS, {:.1}%), {} test, scene {}\n",
        manifest.sample_count,
        manifest.los_count,
        100.0 * manifest.los_fraction(),
        manifest.test_indices.len(),
        &manifest.scene_hash[..12],
    ));
    s.push_str(&format!(
        "exclusions: {} outage, {} beyond cyclic prefix, {} subsampled away\n",
        manifest.outage_excluded, manifest.cp_rejected, manifest.subsampled_away
    ));
    s.push_str(&format!(
        "radio: {}x{} array, {} subcarriers, {:.0} MHz at {:.1} GHz\n",
        manifest.array.rows,
        manifest.array.cols,
        manifest.ofdm.n_subcarriers,
        manifest.ofdm.bandwidth / 1e6,
        manifest.ofdm.fc / 1e9
    ));
    if let Some(pool) = exp.config.model.pool {
        s.push_str(&format!(
            "cnn input: {:?} after ({}, {}) max-pool\n",
            exp.input_dims(),
            pool.0,
            pool.1
        ));
    } else if family.is_deep() {
        s.push_str(&format!("cnn input: {:?} (no pooling)\n", exp.input_dims()));
    }
    if let Some(snr) = exp.config.model.augment_snr_db {
        s.push_str(&format!("training augmentation: AWGN at {snr} dB\n"));
    }
    s.push_str("\nsnr_db,accuracy,auc\n");
    for line in sweep_csv.lines().skip(1) {
        s.push_str(line);
        s.push('\n');
    }
    if let Ok(fl) = std::fs::read_to_string(exp.path("flops_reference.txt")) {
        s.push('\n');
        s.push_str(&fl);
    }
    std::fs::write(exp.path("summary.txt"), &s)?;
    Ok(s)
}

/// Chain every stage. A completed run with the same config is a no-op; a
/// different config in the same directory is rejected unless forced.
pub fn run_experiment(exp: &Experiment, force: bool) -> Result<String> {
    let marker = exp.path("experiment.done");
    if marker.exists() {
        let prev = std::fs::read_to_string(&marker)?;
        if prev.trim() == exp.config_hash && !force {
            if let Ok(summary) = std::fs::read_to_string(exp.path("summary.txt")) {
                return Ok(summary);
            }
        } else if prev.trim() != exp.config_hash && !force {
            return Err(Error::Config(
                "output directory holds a different completed experiment; use force".into(),
            ));
        }
    }
    stage_generate(exp, force)?;
    stage_split(exp, force)?;
    stage_features(exp, force)?;
    stage_train(exp, force)?;
    stage_sweep(exp, force)?;
    stage_flops(exp, force)?;
    let summary = stage_report(exp)?;
    std::fs::write(&marker, &exp.config_hash)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// Training backends
// ---------------------------------------------------------------------------

fn test_set(dataset: &Dataset, manifest: &DatasetManifest) -> (Vec<crate::channel::ChannelMatrix>, Vec<u8>) {
    let mut channels = Vec::with_capacity(manifest.test_indices.len());
    let mut labels = Vec::with_capacity(manifest.test_indices.len());
    for &i in &manifest.test_indices {
        channels.push(dataset.samples[i].channel.clone());
        labels.push(dataset.samples[i].label);
    }
    (channels, labels)
}

fn feature_matrix(feats: &[FeatureVector]) -> Array2<f64> {
    let mut x = Array2::<f64>::zeros((feats.len(), crate::features::FEATURE_DIM));
    for (i, f) in feats.iter().enumerate() {
        for (j, v) in f.to_array().iter().enumerate() {
            x[[i, j]] = *v;
        }
    }
    x
}

fn train_classic(
    exp: &Experiment,
    dataset: &Dataset,
    train_idx: &[usize],
) -> Result<(ModelArtifact, String)> {
    let family = exp.family();
    let classic = &exp.config.classic;
    let seed = exp.config.model.seed;

    let feats_raw: Vec<FeatureVector> = train_idx
        .iter()
        .map(|&i| extract_features(&dataset.samples[i].truth))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<u8> = train_idx.iter().map(|&i| dataset.samples[i].label).collect();

    match family {
        ModelFamily::Rf => {
            let (feats, scaler) = standardize(&feats_raw)?;
            let x = feature_matrix(&feats);
            let model = rf_train(
                &x,
                &labels,
                classic.n_trees,
                classic.max_depth,
                classic.min_leaf,
                seed,
            )?;
            let note = format!(
                "rf: {} trees, max_depth {}, min_leaf {}, oob_error {:?}\n",
                classic.n_trees, classic.max_depth, classic.min_leaf, model.oob_error
            );
            Ok((
                ModelArtifact::Rf(RfArtifact::new(
                    family.name(),
                    model,
                    scaler,
                    exp.config.mpc.to_config(),
                    exp.array,
                    exp.ofdm,
                )),
                note,
            ))
        }
        ModelFamily::SvmLinear | ModelFamily::SvmRbf => {
            let y: Vec<f64> = labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
            let (c, gamma, note) =
                tune_svm(family, &feats_raw, &y, classic, seed)?;
            let kernel = match family {
                ModelFamily::SvmLinear => Kernel::Linear,
                _ => Kernel::Rbf { gamma },
            };
            let (feats, scaler) = standardize(&feats_raw)?;
            let x = feature_matrix(&feats);
            let model = svm_train(&x, &y, kernel, c, classic.tol)?;
            Ok((
                ModelArtifact::Svm(SvmArtifact::new(
                    family.name(),
                    model,
                    scaler,
                    exp.config.mpc.to_config(),
                    exp.array,
                    exp.ofdm,
                )),
                note,
            ))
        }
        _ => unreachable!("train_classic called for a deep family"),
    }
}

/// Hyperparameter selection by k-fold cross-validation; scalers are fitted
/// per fold so no validation information leaks into the fit.
fn tune_svm(
    family: ModelFamily,
    feats_raw: &[FeatureVector],
    y: &[f64],
    classic: &super::expconfig::ClassicSection,
    seed: u64,
) -> Result<(f64, f64, String)> {
    // gamma scale reference: 1 / (d * mean variance) on raw features.
    let d = crate::features::FEATURE_DIM as f64;
    let n = feats_raw.len() as f64;
    let mut mean = [0.0; crate::features::FEATURE_DIM];
    for f in feats_raw {
        for (j, v) in f.to_array().iter().enumerate() {
            mean[j] += v / n;
        }
    }
    let mut var = [0.0; crate::features::FEATURE_DIM];
    for f in feats_raw {
        for (j, v) in f.to_array().iter().enumerate() {
            var[j] += (v - mean[j]).powi(2) / n;
        }
    }
    let gamma0 = {
        // Features are standardized before the kernel sees them, so the
        // per-dimension variances are ~1 and the scale is dominated by d.
        let _ = var;
        1.0 / d
    };

    if !classic.grid_search {
        let gamma = classic.rbf_gamma.unwrap_or(gamma0);
        return Ok((
            classic.c,
            gamma,
            format!("svm: fixed C = {}, gamma = {gamma}\n", classic.c),
        ));
    }

    let c_grid = [0.1, 1.0, 10.0, 100.0];
    let gamma_grid: Vec<f64> = match family {
        ModelFamily::SvmLinear => vec![gamma0], // unused by the kernel
        _ => vec![0.1 * gamma0, gamma0, 10.0 * gamma0],
    };

    let folds = kfold(feats_raw.len(), classic.k_folds.min(feats_raw.len()), seed)?;
    let mut best = (f64::NEG_INFINITY, c_grid[0], gamma_grid[0]);
    let mut note = String::from("svm grid search (k-fold accuracy):\n");
    for &c in &c_grid {
        for &gamma in &gamma_grid {
            let kernel = match family {
                ModelFamily::SvmLinear => Kernel::Linear,
                _ => Kernel::Rbf { gamma },
            };
            let mut correct = 0usize;
            let mut total = 0usize;
            let mut failed = false;
            for (tr, va) in &folds {
                let tr_feats: Vec<FeatureVector> = tr.iter().map(|&i| feats_raw[i]).collect();
                let tr_y: Vec<f64> = tr.iter().map(|&i| y[i]).collect();
                if tr_y.iter().all(|&v| v > 0.0) || tr_y.iter().all(|&v| v < 0.0) {
                    failed = true;
                    break;
                }
                let Ok((tr_scaled, scaler)) = standardize(&tr_feats) else {
                    failed = true;
                    break;
                };
                let x = feature_matrix(&tr_scaled);
                let Ok(model) = svm_train(&x, &tr_y, kernel, c, classic.tol) else {
                    failed = true;
                    break;
                };
                for &i in va {
                    let f = scaler.apply(&feats_raw[i]);
                    let s = crate::classic_ml::svm_score(
                        &model,
                        ndarray::ArrayView1::from(&f.to_array()[..]),
                    );
                    if (s >= 0.0) == (y[i] > 0.0) {
                        correct += 1;
                    }
                    total += 1;
                }
            }
            let acc = if failed || total == 0 {
                f64::NEG_INFINITY
            } else {
                correct as f64 / total as f64
            };
            note.push_str(&format!("  C = {c}, gamma = {gamma}: acc = {acc:.4}\n"));
            if acc > best.0 {
                best = (acc, c, gamma);
            }
        }
    }
    note.push_str(&format!(
        "chosen: C = {}, gamma = {} (cv accuracy {:.4})\n",
        best.1, best.2, best.0
    ));
    Ok((best.1, best.2, note))
}

fn train_deep(
    exp: &Experiment,
    dataset: &Dataset,
    train_idx: &[usize],
) -> Result<(NetArtifact, TrainLog)> {
    let family = exp.family();
    let m = &exp.config.model;
    let recipe = exp.recipe();
    let dims = exp.input_dims();
    let preset = family.preset().expect("deep family");
    let spec = build_preset(preset, dims)?;
    let net = Network::init(spec, m.seed)?;

    // Hold out the tail of a seeded shuffle of the training split for the
    // epoch log; the test split stays untouched.
    let mut order: Vec<usize> = train_idx.to_vec();
    use rand::seq::SliceRandom;
    let mut rng = crate::rng::derive_rng(m.seed, crate::rng::stream::SPLIT, 1);
    order.shuffle(&mut rng);
    let n_val = ((order.len() as f64) * m.val_fraction).round() as usize;
    let (val_idx, tr_idx) = order.split_at(n_val.min(order.len().saturating_sub(1)));

    let to_dl = |idx: &[usize]| -> Vec<DlSample> {
        idx.iter()
            .map(|&i| DlSample {
                channel: dataset.samples[i].channel.clone(),
                label: dataset.samples[i].label,
            })
            .collect()
    };
    let train_samples = to_dl(tr_idx);
    let val_samples = to_dl(val_idx);

    let config = TrainConfig {
        epochs: m.epochs,
        batch_size: m.batch_size,
        optimizer: m.optimizer,
        learning_rate: m.learning_rate,
        cosine_decay: true,
        seed: m.seed,
        augment_snr_db: m.augment_snr_db,
        noise_domain: m.noise_domain,
        w_rec: m.w_rec,
    };
    let (trained, log) = train(
        net,
        &train_samples,
        (!val_samples.is_empty()).then_some(&val_samples[..]),
        &recipe,
        &config,
    )?;
    Ok((
        NetArtifact::new(family.name(), trained, m.pool, exp.array, exp.ofdm),
        log,
    ))
}

// ---------------------------------------------------------------------------
// Built-in toy city
// ---------------------------------------------------------------------------

/// Fixed desk-scale urban scene: a 3x3 block grid with street canyons and
/// the base station on the central tower.
pub fn toy_city_scene() -> Scene {
    let block = 14.0;
    let origins = [8.0, 38.0, 68.0];
    let heights = [
        [10.0, 22.0, 14.0],
        [18.0, 16.0, 12.0],
        [24.0, 11.0, 19.0],
    ];
    let mut buildings = Vec::new();
    for (iy, &y0) in origins.iter().enumerate() {
        for (ix, &x0) in origins.iter().enumerate() {
            buildings.push(
                AxisBox::new(
                    Vec3::new(x0, y0, 0.0),
                    Vec3::new(x0 + block, y0 + block, heights[iy][ix]),
                )
                .expect("valid block"),
            );
        }
    }
    Scene::new(
        buildings,
        [0.0, 0.0],
        [90.0, 90.0],
        0.0,
        Vec3::new(45.0, 45.0, 20.0),
        135f64.to_radians(),
        0.6,
        2,
    )
    .expect("valid toy city")
}
