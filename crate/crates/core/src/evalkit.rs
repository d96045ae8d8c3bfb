//! Evaluation: accuracy, ROC/AUC, analytic inference FLOPs, and SNR sweeps.

use crate::channel::{estimate_channel_ls, simulate_uplink, ChannelMatrix};
use crate::deepnet::{LayerKind, NetSpec, Shape};
use crate::error::{Error, Result};
use crate::rng::mix_seed;

/// Cited inference cost of the reference autoencoder baseline at (128, 512),
/// external constants for the comparison table: the full encoder-decoder and
/// the encoder alone (only the encoder runs at inference time).
pub const SEGNET_REFERENCE_TOTAL_GFLOPS: f64 = 80.0;
pub const SEGNET_REFERENCE_ENCODER_GFLOPS: f64 = 40.0;

// ---------------------------------------------------------------------------
// Accuracy and ROC
// ---------------------------------------------------------------------------

/// Fraction of correct predictions under `score >= threshold => class 1`.
pub fn accuracy(scores: &[f64], labels: &[u8], threshold: f64) -> Result<f64> {
    if scores.is_empty() || scores.len() != labels.len() {
        return Err(Error::invalid_input("accuracy: empty or mismatched inputs"));
    }
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|(&s, &y)| u8::from(s >= threshold) == y)
        .count();
    Ok(correct as f64 / scores.len() as f64)
}

/// Confusion counts at a threshold, indexed [actual][predicted].
pub fn confusion_matrix(scores: &[f64], labels: &[u8], threshold: f64) -> Result<[[usize; 2]; 2]> {
    if scores.is_empty() || scores.len() != labels.len() {
        return Err(Error::invalid_input("confusion_matrix: empty or mismatched inputs"));
    }
    let mut m = [[0usize; 2]; 2];
    for (&s, &y) in scores.iter().zip(labels) {
        m[y as usize][usize::from(s >= threshold)] += 1;
    }
    Ok(m)
}

/// ROC curve over every distinct score threshold, ties grouped so that equal
/// scores flip together.
#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve {
    /// Descending thresholds, one per curve point; the leading (0, 0) point
    /// carries +inf.
    pub thresholds: Vec<f64>,
    pub tpr: Vec<f64>,
    pub fpr: Vec<f64>,
    pub auc: f64,
}

pub fn roc(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(Error::invalid_input("roc: empty or mismatched inputs"));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::invalid_input("roc: need both classes present"));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut thresholds = vec![f64::INFINITY];
    let mut tpr = vec![0.0];
    let mut fpr = vec![0.0];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        // Consume the whole tie group before emitting a point.
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        thresholds.push(s);
        tpr.push(tp as f64 / pos as f64);
        fpr.push(fp as f64 / neg as f64);
    }

    let mut auc = 0.0;
    for w in 0..tpr.len() - 1 {
        auc += (fpr[w + 1] - fpr[w]) * (tpr[w] + tpr[w + 1]) / 2.0;
    }

    Ok(RocCurve {
        thresholds,
        tpr,
        fpr,
        auc,
    })
}

pub fn roc_to_csv(curve: &RocCurve) -> String {
    let mut s = String::from("threshold,fpr,tpr\n");
    for i in 0..curve.thresholds.len() {
        s.push_str(&format!(
            "{},{},{}\n",
            curve.thresholds[i], curve.fpr[i], curve.tpr[i]
        ));
    }
    s
}

// ---------------------------------------------------------------------------
// FLOPs accounting
// ---------------------------------------------------------------------------

/// Per-layer floating-point operation counts for one inference sample.
#[derive(Clone, Debug, PartialEq)]
pub struct FlopsReport {
    pub preset: String,
    pub input_dims: (usize, usize, usize),
    /// (layer description, flops) in graph order.
    pub layers: Vec<(String, u64)>,
    pub total_flops: u64,
}

impl FlopsReport {
    pub fn total_gflops(&self) -> f64 {
        self.total_flops as f64 / 1e9
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "# inference cost: {} at input {}x{}x{}\n",
            self.preset, self.input_dims.0, self.input_dims.1, self.input_dims.2
        ));
        s.push_str("# convention: 1 multiply-accumulate = 2 FLOPs; biases, activations,\n");
        s.push_str("# pooling and skip-adds count one FLOP per output element;\n");
        s.push_str("# batch-norm/affine count two FLOPs per element.\n");
        for (name, f) in &self.layers {
            s.push_str(&format!("{name}: {f}\n"));
        }
        s.push_str(&format!(
            "total: {} FLOPs ({:.4} GFLOPs)\n",
            self.total_flops,
            self.total_gflops()
        ));
        s
    }
}

/// Analytic per-layer FLOPs of a shaped net.
pub fn flops(spec: &NetSpec) -> Result<FlopsReport> {
    let shapes = spec.infer_shapes()?;
    let mut layers = Vec::with_capacity(spec.nodes.len());
    let mut total: u64 = 0;

    for (idx, node) in spec.nodes.iter().enumerate() {
        let out_elems = shapes[idx].elements() as u64;
        let (name, count) = match node.kind {
            LayerKind::Conv2d {
                in_ch,
                out_ch,
                kernel,
                bias,
                ..
            } => {
                let Shape::Map { h, w, .. } = shapes[idx] else {
                    unreachable!("conv output is a map");
                };
                let macs = (kernel.0 * kernel.1 * in_ch * out_ch * h * w) as u64;
                let mut f = 2 * macs;
                if bias {
                    f += out_elems;
                }
                (
                    format!(
                        "conv{}x{} {}->{} @{}x{}",
                        kernel.0, kernel.1, in_ch, out_ch, h, w
                    ),
                    f,
                )
            }
            LayerKind::Dense {
                in_features,
                out_features,
                bias,
            } => {
                let mut f = 2 * (in_features * out_features) as u64;
                if bias {
                    f += out_features as u64;
                }
                (format!("dense {in_features}->{out_features}"), f)
            }
            LayerKind::BatchNorm { .. } => ("batchnorm".to_string(), 2 * out_elems),
            LayerKind::ChannelAffine { .. } => ("affine".to_string(), 2 * out_elems),
            LayerKind::Relu => ("relu".to_string(), out_elems),
            LayerKind::Sigmoid => ("sigmoid".to_string(), out_elems),
            LayerKind::MaxPool { .. } => ("maxpool".to_string(), out_elems),
            LayerKind::AvgPoolGlobal => ("avgpool_global".to_string(), out_elems),
            LayerKind::UpsampleNearest { .. } => ("upsample".to_string(), out_elems),
            LayerKind::SkipAdd { .. } => ("skip_add".to_string(), out_elems),
        };
        total += count;
        layers.push((name, count));
    }

    Ok(FlopsReport {
        preset: spec.preset.clone(),
        input_dims: spec.input,
        layers,
        total_flops: total,
    })
}

// ---------------------------------------------------------------------------
// SNR sweep
// ---------------------------------------------------------------------------

/// Anything that scores an estimated channel: higher means more LoS-like.
pub trait ChannelScorer {
    fn score_channel(&self, h_est: &ChannelMatrix) -> Result<f64>;
    fn name(&self) -> &str;
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub accuracy: f64,
    pub auc: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// Scores per SNR point, aligned with the sample order.
    pub scores: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("snr_db,accuracy,auc\n");
        for p in &self.points {
            s.push_str(&format!("{},{},{}\n", p.snr_db, p.accuracy, p.auc));
        }
        s
    }
}

/// For each SNR: simulate the uplink of every true test channel, estimate it
/// by least squares, score with the model, and compute accuracy at the 0.5
/// threshold plus AUC. Noise draws are keyed by (seed, sample, SNR index).
pub fn eval_sweep(
    model: &dyn ChannelScorer,
    channels: &[ChannelMatrix],
    labels: &[u8],
    snr_list: &[f64],
    seed: u64,
) -> Result<SweepResult> {
    if channels.len() != labels.len() || channels.is_empty() {
        return Err(Error::invalid_input("eval_sweep: empty or mismatched inputs"));
    }
    let mut points = Vec::with_capacity(snr_list.len());
    let mut all_scores = Vec::with_capacity(snr_list.len());
    for (j, &snr) in snr_list.iter().enumerate() {
        let mut scores = Vec::with_capacity(channels.len());
        for (i, h) in channels.iter().enumerate() {
            let up = simulate_uplink(h, snr, mix_seed(seed, i as u64, j as u64))?;
            let est = estimate_channel_ls(&up.received, &up.pilots)?;
            scores.push(model.score_channel(&est)?);
        }
        let acc = accuracy(&scores, labels, 0.5)?;
        let auc = roc(&scores, labels)?.auc;
        points.push(SweepPoint {
            snr_db: snr,
            accuracy: acc,
            auc,
        });
        all_scores.push(scores);
    }
    Ok(SweepResult {
        points,
        scores: all_scores,
        labels: labels.to_vec(),
    })
}
