//! Loss functions, AWGN training augmentation, and the mini-batch loop.

use super::network::{Grads, Network, OptimKind, Optimizer, TensorVal};
use crate::adcpm::{compute_adcpm, max_pool, Adcpm, TransformPlan};
use crate::channel::ChannelMatrix;
use crate::error::{Error, Result};
use crate::rng::{derive_rng, stream};
use ndarray::{Array1, Array2, Array4, ArrayView1};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const PROB_EPS: f64 = 1e-7;

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Mean binary cross-entropy over the batch with probabilities clamped to
/// [eps, 1-eps]. Returns the loss and its gradient w.r.t. the probabilities.
pub fn loss_bce(probs: ArrayView1<f64>, labels: &[f64]) -> (f64, Array1<f64>) {
    let k = probs.len() as f64;
    let mut loss = 0.0;
    let mut dprobs = Array1::<f64>::zeros(probs.len());
    for (i, (&p, &y)) in probs.iter().zip(labels).enumerate() {
        let pc = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
        loss += -(y * pc.ln() + (1.0 - y) * (1.0 - pc).ln());
        if p > PROB_EPS && p < 1.0 - PROB_EPS {
            dprobs[i] = (pc - y) / (pc * (1.0 - pc)) / k;
        }
    }
    (loss / k, dprobs)
}

/// Joint reconstruction + classification loss:
/// (w_rec / K) sum_k ||X_k - Xhat_k||_F^2 + mean BCE.
/// Returns (loss, dprobs, drecon).
pub fn loss_joint(
    probs: ArrayView1<f64>,
    recon: &Array4<f64>,
    input: &Array4<f64>,
    labels: &[f64],
    w_rec: f64,
) -> (f64, Array1<f64>, Array4<f64>) {
    let k = probs.len() as f64;
    let (bce, dprobs) = loss_bce(probs, labels);
    let mut rec_term = 0.0;
    let mut drecon = Array4::<f64>::zeros(recon.dim());
    for ((idx, r), x) in recon.indexed_iter().zip(input.iter()) {
        let d = r - x;
        rec_term += d * d;
        drecon[idx] = 2.0 * w_rec / k * d;
    }
    (w_rec / k * rec_term + bce, dprobs, drecon)
}

// ---------------------------------------------------------------------------
// ADCPM construction and augmentation
// ---------------------------------------------------------------------------

/// Fixed recipe from channel matrix to normalized CNN input: angle-delay
/// transform, single-snapshot power, optional max-pool, peak normalization.
#[derive(Clone)]
pub struct AdcpmRecipe {
    pub plan: TransformPlan,
    pub pool: Option<(usize, usize)>,
}

impl AdcpmRecipe {
    pub fn build(&self, h: &Array2<Complex64>) -> Result<Adcpm> {
        let g = self.plan.apply(h)?;
        let mut x = compute_adcpm(&[g])?;
        if let Some((kh, kw)) = self.pool {
            x = max_pool(&x, kh, kw);
        }
        Ok(x.max_normalized())
    }
}

/// Where augmentation noise is injected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDomain {
    /// Complex AWGN on the channel matrix before the transform (default,
    /// matches the uplink noise model).
    Channel,
    /// Real additive noise directly on the power matrix (ablation).
    Adcpm,
}

/// Noisy training input: perturb the true channel with complex AWGN at the
/// given per-antenna SNR, then run the ADCPM recipe. `snr_db = +inf` returns
/// the clean input.
pub fn augment_awgn(
    channel: &ChannelMatrix,
    snr_db: f64,
    seed: u64,
    recipe: &AdcpmRecipe,
) -> Result<Adcpm> {
    augment_with_domain(channel, snr_db, seed, recipe, NoiseDomain::Channel)
}

pub fn augment_with_domain(
    channel: &ChannelMatrix,
    snr_db: f64,
    seed: u64,
    recipe: &AdcpmRecipe,
    domain: NoiseDomain,
) -> Result<Adcpm> {
    if snr_db.is_infinite() && snr_db > 0.0 {
        return recipe.build(&channel.data);
    }
    let mut rng = derive_rng(seed, stream::AUGMENT, 0);
    match domain {
        NoiseDomain::Channel => {
            let (nm, nc) = channel.data.dim();
            let signal_power = channel.frobenius_sq() / (nm * nc) as f64;
            let sigma = (signal_power / 10f64.powf(snr_db / 10.0) / 2.0).sqrt();
            let mut noisy = channel.data.clone();
            for v in noisy.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *v += Complex64::new(re * sigma, im * sigma);
            }
            recipe.build(&noisy)
        }
        NoiseDomain::Adcpm => {
            let g = recipe.plan.apply(&channel.data)?;
            let mut x = compute_adcpm(&[g])?;
            let mean_power = x.data.sum() / x.data.len() as f64;
            let sigma = (mean_power / 10f64.powf(snr_db / 10.0)).sqrt();
            for v in x.data.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *v = (*v + z * sigma).max(0.0); // power stays nonnegative
            }
            if let Some((kh, kw)) = recipe.pool {
                x = max_pool(&x, kh, kw);
            }
            Ok(x.max_normalized())
        }
    }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerChoice {
    SgdMomentum,
    Adam,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerChoice,
    pub learning_rate: f64,
    /// Cosine-decay the learning rate over the full run.
    pub cosine_decay: bool,
    pub seed: u64,
    /// Training-time AWGN SNR; None disables augmentation.
    pub augment_snr_db: Option<f64>,
    /// Noise injection point for augmentation.
    pub noise_domain: NoiseDomain,
    /// Reconstruction weight, used only by autoencoder heads.
    pub w_rec: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 32,
            optimizer: OptimizerChoice::Adam,
            learning_rate: 1e-3,
            cosine_decay: true,
            seed: 0,
            augment_snr_db: None,
            noise_domain: NoiseDomain::Channel,
            w_rec: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::invalid_input("train: epochs and batch_size must be positive"));
        }
        if self.w_rec < 0.0 {
            return Err(Error::invalid_input("train: w_rec must be nonnegative"));
        }
        Ok(())
    }
}

/// One training sample: the true channel (augmentation source) and label.
#[derive(Clone)]
pub struct DlSample {
    pub channel: ChannelMatrix,
    pub label: u8,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpochRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: Option<f64>,
    pub val_acc: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub rows: Vec<EpochRow>,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,train_acc,val_loss,val_acc\n");
        for r in &self.rows {
            let vl = r.val_loss.map(|v| format!("{v}")).unwrap_or_default();
            let va = r.val_acc.map(|v| format!("{v}")).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{vl},{va}\n",
                r.epoch, r.train_loss, r.train_acc
            ));
        }
        s
    }
}

fn batch_tensor(inputs: &[Adcpm]) -> Array4<f64> {
    let (h, w) = inputs[0].data.dim();
    let mut t = Array4::<f64>::zeros((inputs.len(), 1, h, w));
    for (b, x) in inputs.iter().enumerate() {
        t.slice_mut(ndarray::s![b, 0, .., ..]).assign(&x.data);
    }
    t
}

/// Mini-batch training. Augmentation, when enabled, rebuilds every sample's
/// input from its channel with fresh noise each epoch; the test path never
/// goes through here. Fully determined by (seed, data, config).
pub fn train(
    mut net: Network,
    samples: &[DlSample],
    val: Option<&[DlSample]>,
    recipe: &AdcpmRecipe,
    config: &TrainConfig,
) -> Result<(Network, TrainLog)> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::invalid_input("train: empty dataset"));
    }
    if samples.iter().any(|s| s.label > 1) {
        return Err(Error::invalid_input("train: labels must be 0/1"));
    }

    // Clean inputs are fixed across epochs; compute them once.
    let clean: Vec<Adcpm> = if config.augment_snr_db.is_none() {
        samples
            .par_iter()
            .map(|s| recipe.build(&s.channel.data))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let val_data: Option<(Array4<f64>, Vec<f64>)> = match val {
        Some(vs) if !vs.is_empty() => {
            let inputs = vs
                .par_iter()
                .map(|s| recipe.build(&s.channel.data))
                .collect::<Result<Vec<_>>>()?;
            let labels: Vec<f64> = vs.iter().map(|s| s.label as f64).collect();
            Some((batch_tensor(&inputs), labels))
        }
        _ => None,
    };

    let kind = match config.optimizer {
        OptimizerChoice::SgdMomentum => OptimKind::SgdMomentum { momentum: 0.9 },
        OptimizerChoice::Adam => OptimKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        },
    };
    let mut optimizer = Optimizer::new(kind, &net);

    let n = samples.len();
    let steps_per_epoch = n.div_ceil(config.batch_size);
    let total_steps = (steps_per_epoch * config.epochs).max(1);
    let mut log = TrainLog::default();
    let mut step = 0usize;

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        let mut shuffle_rng = derive_rng(config.seed, stream::SHUFFLE, epoch as u64);
        order.shuffle(&mut shuffle_rng);

        let mut epoch_loss = 0.0;
        let mut correct = 0usize;

        for chunk in order.chunks(config.batch_size) {
            // Per-sample inputs, freshly augmented when configured. Seeds
            // depend on (epoch, original index), not shuffle position.
            let inputs: Vec<Adcpm> = match config.augment_snr_db {
                Some(snr) => chunk
                    .par_iter()
                    .map(|&i| {
                        augment_with_domain(
                            &samples[i].channel,
                            snr,
                            config
                                .seed
                                .wrapping_add((epoch * n + i) as u64)
                                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                                | 1,
                            recipe,
                            config.noise_domain,
                        )
                    })
                    .collect::<Result<Vec<_>>>()?,
                None => chunk.iter().map(|&i| clean[i].clone()).collect(),
            };
            let labels: Vec<f64> = chunk.iter().map(|&i| samples[i].label as f64).collect();
            let x = batch_tensor(&inputs);

            let trace = net.forward(&x, true)?;
            let probs = net.probabilities(&trace);
            let (loss, head_grads) = compute_loss_and_heads(&net, &trace, &x, &probs, &labels, config)?;
            if !loss.is_finite() {
                return Err(Error::Numerical(format!(
                    "train: loss diverged at epoch {epoch} (loss = {loss})"
                )));
            }
            epoch_loss += loss * chunk.len() as f64;
            correct += probs
                .iter()
                .zip(&labels)
                .filter(|(&p, &y)| (p >= 0.5) == (y >= 0.5))
                .count();

            let grads: Grads = net.backward(&trace, head_grads);
            net.update_bn_running(&trace);
            let lr = if config.cosine_decay {
                config.learning_rate
                    * 0.5
                    * (1.0 + (std::f64::consts::PI * step as f64 / total_steps as f64).cos())
            } else {
                config.learning_rate
            };
            optimizer.step(&mut net, &grads, lr);
            step += 1;
        }

        let (val_loss, val_acc) = match &val_data {
            Some((vx, vy)) => {
                let trace = net.forward(vx, false)?;
                let probs = net.probabilities(&trace);
                let (l, _) = loss_bce(probs.view(), vy);
                let acc = probs
                    .iter()
                    .zip(vy)
                    .filter(|(&p, &y)| (p >= 0.5) == (y >= 0.5))
                    .count() as f64
                    / vy.len() as f64;
                (Some(l), Some(acc))
            }
            None => (None, None),
        };

        log.rows.push(EpochRow {
            epoch,
            train_loss: epoch_loss / n as f64,
            train_acc: correct as f64 / n as f64,
            val_loss,
            val_acc,
        });
    }

    Ok((net, log))
}

fn compute_loss_and_heads(
    net: &Network,
    trace: &super::network::Trace,
    x: &Array4<f64>,
    probs: &Array1<f64>,
    labels: &[f64],
    config: &TrainConfig,
) -> Result<(f64, Vec<(usize, TensorVal)>)> {
    let b = probs.len();
    match net.reconstruction(trace) {
        Some(recon) => {
            let (loss, dprobs, drecon) =
                loss_joint(probs.view(), &recon, x, labels, config.w_rec);
            let dprob_t = Array2::from_shape_vec((b, 1), dprobs.to_vec()).expect("shape");
            Ok((
                loss,
                vec![
                    (net.spec.prob_head, TensorVal::Flat(dprob_t)),
                    (
                        net.spec.recon_head.expect("recon head present"),
                        TensorVal::Map(drecon),
                    ),
                ],
            ))
        }
        None => {
            let (loss, dprobs) = loss_bce(probs.view(), labels);
            let dprob_t = Array2::from_shape_vec((b, 1), dprobs.to_vec()).expect("shape");
            Ok((loss, vec![(net.spec.prob_head, TensorVal::Flat(dprob_t))]))
        }
    }
}

/// Inference helper: probabilities (and reconstructions, if any) for a batch
/// of normalized power matrices.
pub fn forward_batch(net: &Network, inputs: &[Adcpm]) -> Result<(Array1<f64>, Option<Array4<f64>>)> {
    let x = batch_tensor(inputs);
    let trace = net.forward(&x, false)?;
    Ok((net.probabilities(&trace), net.reconstruction(&trace)))
}
