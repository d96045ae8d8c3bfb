//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (run with `--nocapture` to see them on success). Tolerances are pinned in
//! the assertions.

mod common;

use ndarray::{Array2, Array4};
use num_complex::Complex64;
use rand::Rng;
use std::path::Path;
use twinlos::adcpm::{compute_adcpm, dense_transform_oracle, max_pool, predicted_bins, TransformPlan};
use twinlos::channel::{synth_cfr, ArrayConfig, ElementPattern, OfdmConfig};
use twinlos::classic_ml::{dual_objective, gini, rf_train, svm_train, Kernel, TreeNode};
use twinlos::deepnet::{
    build_preset, loss_bce, loss_joint, Grads, InputRef, LayerKind, LayerNode, NetSpec, Network,
    Preset, TensorVal,
};
use twinlos::evalkit::{flops, roc, SEGNET_REFERENCE_ENCODER_GFLOPS};
use twinlos::geometry::{MultipathSet, PathComponent};
use twinlos::pipeline::{
    stage_split, stage_sweep, stage_train, toy_city_scene, Experiment, ExperimentConfig,
};
use twinlos::rng::{derive_rng, stream};
use twinlos::vec3::Vec3;

fn desk_array() -> ArrayConfig {
    ArrayConfig {
        rows: 4,
        cols: 8,
        dv: 0.8,
        dh: 0.5,
        pattern: ElementPattern::Isotropic,
    }
}

fn desk_ofdm(nc: usize) -> OfdmConfig {
    OfdmConfig {
        fc: 28e9,
        bandwidth: 100e6,
        n_subcarriers: nc,
        n_guard: nc * 15 / 16,
    }
}

// ===========================================================================
// Criterion 1: published inference-cost reproduction
// ===========================================================================

#[test]
fn criterion_1_flops_reproduction() {
    let full = flops(&build_preset(Preset::Resnet34Reference, (128, 512)).unwrap()).unwrap();
    let down = flops(&build_preset(Preset::Resnet34Reference, (32, 128)).unwrap()).unwrap();
    let g_full = full.total_gflops();
    let g_down = down.total_gflops();

    assert!(
        (g_full - 9.36).abs() / 9.36 <= 0.02,
        "full-resolution cost {g_full:.4} GFLOPs not within 2% of 9.36"
    );
    assert!(
        (g_down - 0.58).abs() / 0.58 <= 0.02,
        "downsampled cost {g_down:.4} GFLOPs not within 2% of 0.58"
    );
    let reduction = 100.0 * (1.0 - g_down / g_full);
    assert!(
        (reduction - 93.8).abs() <= 0.5,
        "downsampling reduction {reduction:.2}% not within 0.5 points of 93.8%"
    );
    let vs_encoder = 100.0 * (1.0 - g_down / SEGNET_REFERENCE_ENCODER_GFLOPS);
    assert!(
        vs_encoder >= 98.5,
        "reduction vs 40 GFLOPs encoder constant is {vs_encoder:.2}% < 98.5%"
    );
    println!(
        "acceptance criterion 1 (flops reproduction): PASS - {g_full:.3} / {g_down:.3} GFLOPs, \
         reduction {reduction:.2}%, vs encoder {vs_encoder:.2}%"
    );
}

// ===========================================================================
// Criterion 2: transform invariants
// ===========================================================================

#[test]
fn criterion_2_transform_invariants() {
    // Parseval over 100 random channels.
    let array = desk_array();
    let ofdm = desk_ofdm(64);
    let plan = TransformPlan::new(&array, &ofdm);
    let mut worst = 0.0f64;
    for trial in 0..100u64 {
        let mut rng = derive_rng(1000 + trial, stream::AUGMENT, trial);
        let h = Array2::from_shape_fn((32, 64), |_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let g = plan.apply(&h).unwrap();
        let h_energy: f64 = h.iter().map(|c| c.norm_sqr()).sum();
        let g_energy: f64 = g.iter().map(|c| c.norm_sqr()).sum();
        let expect = h_energy / (32.0 * 64.0);
        worst = worst.max((g_energy - expect).abs() / expect);
    }
    assert!(worst < 1e-10, "Parseval worst relative error {worst:e}");

    // Separable path vs the dense Kronecker oracle on (N, M, Nc) = (2, 2, 8).
    let small_array = ArrayConfig {
        rows: 2,
        cols: 2,
        dv: 0.8,
        dh: 0.5,
        pattern: ElementPattern::Isotropic,
    };
    let small_ofdm = desk_ofdm(8);
    let small_plan = TransformPlan::new(&small_array, &small_ofdm);
    let mut worst_dense = 0.0f64;
    for trial in 0..20u64 {
        let mut rng = derive_rng(2000 + trial, stream::AUGMENT, trial);
        let h = Array2::from_shape_fn((4, 8), |_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let fast = small_plan.apply(&h).unwrap();
        let slow = dense_transform_oracle(&h, &small_array, &small_ofdm);
        for (a, b) in fast.iter().zip(slow.iter()) {
            worst_dense = worst_dense.max((a - b).norm());
        }
    }
    assert!(worst_dense < 1e-12, "dense-oracle deviation {worst_dense:e}");
    println!(
        "acceptance criterion 2 (transform invariants): PASS - Parseval err {worst:.2e}, \
         oracle err {worst_dense:.2e}"
    );
}

// ===========================================================================
// Criterion 3: single-path localization
// ===========================================================================

#[test]
fn criterion_3_single_path_localization() {
    let array = desk_array();
    let ofdm = desk_ofdm(64);
    let plan = TransformPlan::new(&array, &ofdm);
    let mut rng = derive_rng(77, stream::AUGMENT, 0);
    let mut hits = 0;
    let trials = 100;
    for _ in 0..trials {
        // Draw an aligned bin triple with an invertible azimuth.
        let (vert, horiz, elevation, azimuth) = loop {
            let vert = rng.gen_range(0..array.rows);
            let horiz = rng.gen_range(0..array.cols);
            let sin_el = (vert as f64 - array.rows as f64 / 2.0) / (array.rows as f64 * array.dv);
            let el = sin_el.asin();
            let denom = array.cols as f64 * array.dh * el.cos();
            let sin_az = (horiz as f64 - array.cols as f64 / 2.0) / denom;
            if sin_az.abs() <= 0.98 {
                break (vert, horiz, el, sin_az.asin());
            }
        };
        let delay_bin = rng.gen_range(0..ofdm.n_guard);
        let delay = delay_bin as f64 * ofdm.sample_interval();
        let set = MultipathSet {
            paths: vec![PathComponent {
                gain: rng.gen_range(0.2..1.0),
                delay,
                azimuth,
                elevation,
                bounces: 0,
            }],
            is_los: true,
            ue_position: Vec3::default(),
        };
        let h = synth_cfr(&set, &array, &ofdm).unwrap();
        let x = compute_adcpm(&[plan.apply(&h.data).unwrap()]).unwrap();
        let (row, col) = x.argmax();
        let predicted = predicted_bins(&array, &ofdm, delay, azimuth, elevation);
        let expect = (vert * array.cols + horiz, delay_bin);
        assert_eq!(predicted, expect, "bin predictor disagrees with construction");

        // Max-pool keeps the peak at the integer-divided position.
        let pooled = max_pool(&x, 4, 4);
        let (pr, pc) = pooled.argmax();
        if (row, col) == expect && (pr, pc) == (row / 4, col / 4) {
            hits += 1;
        }
    }
    assert_eq!(hits, trials, "only {hits}/{trials} localization trials hit");
    println!("acceptance criterion 3 (single-path localization): PASS - {hits}/{trials} trials");
}

// ===========================================================================
// Criterion 4: gradient correctness
// ===========================================================================

struct GradCheck {
    checked: usize,
    worst: f64,
}

/// Compare analytic parameter gradients against central differences through
/// an arbitrary scalar loss of the network.
fn gradcheck(
    net: &Network,
    loss: &dyn Fn(&Network) -> f64,
    analytic: &Grads,
    max_coords_per_tensor: usize,
) -> GradCheck {
    let h = 1e-5;
    let mut checked = 0;
    let mut worst = 0.0f64;
    for (node, np) in net.params.iter().enumerate() {
        for (pi, p) in np.iter().enumerate() {
            let len = p.len();
            if len == 0 {
                continue;
            }
            let step = (len / max_coords_per_tensor).max(1);
            for k in (0..len).step_by(step) {
                let mut plus = net.clone();
                plus.params[node][pi].add_flat(k, h);
                let mut minus = net.clone();
                minus.params[node][pi].add_flat(k, -h);
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
                let a = analytic[node][pi].get_flat(k);
                let denom = a.abs().max(numeric.abs()).max(1e-6);
                let rel = (a - numeric).abs() / denom;
                assert!(
                    rel < 1e-4,
                    "node {node} tensor {pi} coord {k}: analytic {a} vs numeric {numeric} (rel {rel:e})"
                );
                worst = worst.max(rel);
                checked += 1;
            }
        }
    }
    GradCheck { checked, worst }
}

/// Probe net exercising one layer kind between a conv and a dense head.
fn probe_net(mid: Vec<LayerNode>, mid_out_is_flat: bool, gap_in: usize) -> NetSpec {
    let mut nodes = vec![LayerNode {
        kind: LayerKind::Conv2d {
            in_ch: 1,
            out_ch: 2,
            kernel: (3, 3),
            stride: (1, 1),
            padding: (1, 1),
            bias: true,
        },
        input: InputRef::Input,
    }];
    nodes.extend(mid);
    if !mid_out_is_flat {
        nodes.push(LayerNode {
            kind: LayerKind::AvgPoolGlobal,
            input: InputRef::Node(nodes.len() - 1),
        });
    }
    nodes.push(LayerNode {
        kind: LayerKind::Dense {
            in_features: gap_in,
            out_features: 1,
            bias: true,
        },
        input: InputRef::Node(nodes.len() - 1),
    });
    nodes.push(LayerNode {
        kind: LayerKind::Sigmoid,
        input: InputRef::Node(nodes.len() - 1),
    });
    let prob_head = nodes.len() - 1;
    NetSpec {
        preset: "probe".into(),
        input: (1, 6, 8),
        nodes,
        prob_head,
        recon_head: None,
        projection_convs: vec![],
    }
}

fn bce_loss_and_grads(net: &Network, x: &Array4<f64>, labels: &[f64]) -> (f64, Grads) {
    let trace = net.forward(x, true).unwrap();
    let probs = net.probabilities(&trace);
    let (loss, dprobs) = loss_bce(probs.view(), labels);
    let dprob_t = Array2::from_shape_vec((labels.len(), 1), dprobs.to_vec()).unwrap();
    let grads = net.backward(&trace, vec![(net.spec.prob_head, TensorVal::Flat(dprob_t))]);
    (loss, grads)
}

#[test]
fn criterion_4_gradient_correctness() {
    let from = |i: usize| InputRef::Node(i);
    // (label, mid nodes after the stem conv at node 0, flat?, head fan-in)
    let cases: Vec<(&str, Vec<LayerNode>, bool, usize)> = vec![
        (
            "conv2d",
            vec![LayerNode {
                kind: LayerKind::Conv2d {
                    in_ch: 2,
                    out_ch: 3,
                    kernel: (3, 2),
                    stride: (2, 1),
                    padding: (1, 0),
                    bias: true,
                },
                input: from(0),
            }],
            false,
            3,
        ),
        (
            "batchnorm",
            vec![LayerNode {
                kind: LayerKind::BatchNorm { channels: 2 },
                input: from(0),
            }],
            false,
            2,
        ),
        (
            "channel_affine",
            vec![LayerNode {
                kind: LayerKind::ChannelAffine { channels: 2 },
                input: from(0),
            }],
            false,
            2,
        ),
        (
            "relu",
            vec![LayerNode {
                kind: LayerKind::Relu,
                input: from(0),
            }],
            false,
            2,
        ),
        (
            "maxpool",
            vec![LayerNode {
                kind: LayerKind::MaxPool {
                    kernel: (3, 3),
                    stride: (2, 2),
                    padding: (1, 1),
                },
                input: from(0),
            }],
            false,
            2,
        ),
        ("avgpool_global", vec![], false, 2),
        (
            "dense",
            vec![
                LayerNode {
                    kind: LayerKind::AvgPoolGlobal,
                    input: from(0),
                },
                LayerNode {
                    kind: LayerKind::Dense {
                        in_features: 2,
                        out_features: 3,
                        bias: true,
                    },
                    input: from(1),
                },
            ],
            true,
            3,
        ),
        (
            "sigmoid",
            vec![LayerNode {
                kind: LayerKind::Sigmoid,
                input: from(0),
            }],
            false,
            2,
        ),
        (
            "upsample",
            vec![LayerNode {
                kind: LayerKind::UpsampleNearest { factor: (2, 2) },
                input: from(0),
            }],
            false,
            2,
        ),
        (
            "skip_add",
            vec![
                LayerNode {
                    kind: LayerKind::Conv2d {
                        in_ch: 2,
                        out_ch: 2,
                        kernel: (3, 3),
                        stride: (1, 1),
                        padding: (1, 1),
                        bias: false,
                    },
                    input: from(0),
                },
                LayerNode {
                    kind: LayerKind::SkipAdd {
                        other: InputRef::Node(0),
                    },
                    input: from(1),
                },
            ],
            false,
            2,
        ),
    ];

    let labels = [1.0, 0.0];
    let mut total = 0;
    let mut worst = 0.0f64;
    for (name, mid, flat, fan_in) in cases {
        // `dense` case: the mid chain ends flat with 3 features.
        let spec = probe_net(mid, flat, fan_in);
        let net = Network::init(spec, 0xFEED).unwrap();
        let mut rng = derive_rng(31, stream::AUGMENT, total as u64);
        let x = Array4::from_shape_fn((2, 1, 6, 8), |_| rng.gen_range(0.05..1.0));
        let (_, grads) = bce_loss_and_grads(&net, &x, &labels);
        let loss = |n: &Network| bce_loss_and_grads(n, &x, &labels).0;
        let r = gradcheck(&net, &loss, &grads, 40);
        total += r.checked;
        worst = worst.max(r.worst);
        assert!(r.checked > 0, "{name}: nothing checked");
    }

    // Composite: resnet_mini through the classification loss.
    {
        let spec = build_preset(Preset::ResnetMini, (8, 16)).unwrap();
        let net = Network::init(spec, 3).unwrap();
        let mut rng = derive_rng(32, stream::AUGMENT, 0);
        let x = Array4::from_shape_fn((2, 1, 8, 16), |_| rng.gen_range(0.0..1.0));
        let (_, grads) = bce_loss_and_grads(&net, &x, &[1.0, 0.0]);
        let loss = |n: &Network| bce_loss_and_grads(n, &x, &[1.0, 0.0]).0;
        let r = gradcheck(&net, &loss, &grads, 4);
        total += r.checked;
        worst = worst.max(r.worst);
    }

    // Composite: segnet_mini through the joint loss.
    {
        let spec = build_preset(Preset::SegnetMini, (8, 8)).unwrap();
        let net = Network::init(spec, 5).unwrap();
        let mut rng = derive_rng(33, stream::AUGMENT, 0);
        let x = Array4::from_shape_fn((2, 1, 8, 8), |_| rng.gen_range(0.0..1.0));
        let labels = [0.0, 1.0];
        let joint = |n: &Network| -> (f64, Grads) {
            let trace = n.forward(&x, true).unwrap();
            let probs = n.probabilities(&trace);
            let recon = n.reconstruction(&trace).unwrap();
            let (loss, dprobs, drecon) = loss_joint(probs.view(), &recon, &x, &labels, 0.3);
            let dprob_t = Array2::from_shape_vec((2, 1), dprobs.to_vec()).unwrap();
            let grads = n.backward(
                &trace,
                vec![
                    (n.spec.prob_head, TensorVal::Flat(dprob_t)),
                    (n.spec.recon_head.unwrap(), TensorVal::Map(drecon)),
                ],
            );
            (loss, grads)
        };
        let (_, grads) = joint(&net);
        let loss = |n: &Network| joint(n).0;
        let r = gradcheck(&net, &loss, &grads, 10);
        total += r.checked;
        worst = worst.max(r.worst);
    }

    assert!(total <= 10_000, "sampled {total} coordinates, budget is 1e4");
    println!(
        "acceptance criterion 4 (gradient correctness): PASS - {total} coordinates, worst rel err {worst:.2e}"
    );
}

// ===========================================================================
// Criterion 5: classic-ML oracle equivalence
// ===========================================================================

#[test]
fn criterion_5_classic_ml_oracles() {
    // Gini unit values.
    assert_eq!(gini(&[10, 0]).unwrap(), 0.0);
    assert_eq!(gini(&[5, 5]).unwrap(), 0.5);
    assert_eq!(gini(&[3, 1]).unwrap(), 0.375);

    // SMO dual objective vs projected-gradient QP on 20-sample problems.
    let mut worst_gap = 0.0f64;
    for (trial, kernel) in [
        (0u64, Kernel::Linear),
        (1, Kernel::Rbf { gamma: 0.8 }),
        (2, Kernel::Linear),
        (3, Kernel::Rbf { gamma: 2.0 }),
    ] {
        let mut rng = derive_rng(500 + trial, stream::AUGMENT, trial);
        let n = 20;
        let mut x = Array2::<f64>::zeros((n, 3));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let label = if i % 2 == 0 { 1.0 } else { -1.0 };
            let center = label * 0.6;
            for j in 0..3 {
                x[[i, j]] = center + rng.gen_range(-1.0..1.0);
            }
            y.push(label);
        }
        let c = 2.0;
        let model = svm_train(&x, &y, kernel, c, 1e-6).unwrap();
        // Reconstruct the full alpha vector (non-SVs are zero).
        let mut alphas = vec![0.0; n];
        for (sv, &a) in model.support_x.rows().into_iter().zip(&model.alphas) {
            let idx = (0..n)
                .find(|&i| x.row(i).iter().zip(sv.iter()).all(|(p, q)| p == q))
                .expect("support vector row");
            alphas[idx] = a;
        }
        let w_smo = dual_objective(&x, &y, kernel, &alphas);
        let oracle = common::qp_dual_oracle(&x, &y, kernel, c, 300_000);
        let w_qp = dual_objective(&x, &y, kernel, &oracle);
        let gap = (w_smo - w_qp).abs() / w_qp.abs().max(1e-12);
        assert!(
            gap < 1e-4,
            "trial {trial}: SMO objective {w_smo} vs QP oracle {w_qp} (rel gap {gap:e})"
        );
        worst_gap = worst_gap.max(gap);
    }

    // RF root splits vs the exhaustive scan on 1-D clustered data.
    let vals = [0.1, 0.4, 0.9, 1.3, 1.8, 6.2, 6.9, 7.3, 7.8, 8.4];
    let x1 = Array2::from_shape_vec((10, 1), vals.to_vec()).unwrap();
    let y1 = vec![0u8, 0, 0, 0, 0, 1, 1, 1, 1, 1];
    let seed = 99;
    let model = rf_train(&x1, &y1, 5, 1, 1, seed).unwrap();
    for (t, tree) in model.trees.iter().enumerate() {
        let mut rng = derive_rng(seed, stream::BOOTSTRAP, t as u64);
        let idx: Vec<usize> = (0..10).map(|_| rng.gen_range(0..10)).collect();
        let boot_vals: Vec<f64> = idx.iter().map(|&i| vals[i]).collect();
        let boot_labels: Vec<u8> = idx.iter().map(|&i| y1[i]).collect();
        let oracle = common::exhaustive_gini_scan_1d(&boot_vals, &boot_labels);
        match (&tree.nodes[0], oracle) {
            (TreeNode::Split { threshold, .. }, Some((expect, _))) => {
                assert_eq!(
                    *threshold, expect,
                    "tree {t}: root threshold {threshold} != oracle {expect}"
                );
            }
            (TreeNode::Leaf { .. }, None) => {}
            (node, oracle) => panic!("tree {t}: {node:?} vs oracle {oracle:?}"),
        }
    }
    println!(
        "acceptance criterion 5 (classic-ml oracles): PASS - worst SMO/QP gap {worst_gap:.2e}, \
         root splits identical"
    );
}

// ===========================================================================
// Criterion 6: metric correctness
// ===========================================================================

#[test]
fn criterion_6_metric_correctness() {
    // Perfect and anti-perfect orderings are exact.
    let labels = [1u8, 1, 0, 0, 1];
    assert_eq!(roc(&[0.9, 0.8, 0.2, 0.1, 0.7], &labels).unwrap().auc, 1.0);
    assert_eq!(roc(&[0.1, 0.2, 0.8, 0.9, 0.15], &labels).unwrap().auc, 0.0);

    let mut worst = 0.0f64;
    let mut rng = derive_rng(4242, stream::AUGMENT, 0);
    for _ in 0..1000 {
        let n = rng.gen_range(4..80);
        let quantize = rng.gen_range(0..3) == 0;
        let mut scores = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let s: f64 = rng.gen_range(0.0..1.0);
            scores.push(if quantize { (s * 6.0).round() / 6.0 } else { s });
            labels.push(rng.gen_range(0..2) as u8);
        }
        if !labels.contains(&1) || !labels.contains(&0) {
            continue;
        }
        let auc = roc(&scores, &labels).unwrap().auc;
        let mw = common::mann_whitney_auc(&scores, &labels);
        let err = (auc - mw).abs();
        assert!(err < 1e-12, "AUC {auc} vs Mann-Whitney {mw}");
        worst = worst.max(err);
    }
    println!(
        "acceptance criterion 6 (metric correctness): PASS - worst |AUC - MW| = {worst:.2e}"
    );
}

// ===========================================================================
// Criterion 7: end-to-end desk-scale ordering
// ===========================================================================

fn city_config(family: &str, augment: Option<f64>, seed: u64) -> ExperimentConfig {
    let aug_line = augment
        .map(|a| format!("augment_snr_db = {a}"))
        .unwrap_or_default();
    ExperimentConfig::from_toml_str(&format!(
        r#"
schema = "twinlos-experiment"
version = 1

[dataset]
scene = "unused.toml"
cell_size = 1.25
max_samples = 2000
test_fraction = 0.25
stratified = true
seed = 42

[model]
family = "{family}"
pool = [4, 4]
epochs = 15
batch_size = 32
seed = {seed}
{aug_line}

[eval]
snr_list = [-15.0, 15.0]
seed = 7
"#
    ))
    .unwrap()
}

fn copy_dataset(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for name in ["dataset.ndtl", "manifest.toml"] {
        std::fs::copy(from.join(name), to.join(name)).unwrap();
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn criterion_7_end_to_end_ordering() {
    let scene = toy_city_scene();
    let base = std::env::temp_dir().join(format!("twinlos_accept7_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&base);

    // Fixed seeded 2000-sample city, shared by every run.
    let shared = base.join("dataset");
    let exp0 = Experiment::from_parts(
        city_config("resnet_mini", Some(-10.0), 1),
        scene.clone(),
        &shared,
    )
    .unwrap();
    let (ds, manifest) = stage_split(&exp0, false).unwrap();
    assert_eq!(ds.len(), 2000, "fixture must have exactly 2000 samples");
    assert_eq!(manifest.test_indices.len(), 500);
    println!(
        "criterion 7 fixture: 2000 samples, {:.1}% LoS, 500 test",
        100.0 * manifest.los_fraction()
    );

    let seeds = [1u64, 2, 3];
    let mut auc_aug_m15 = Vec::new();
    let mut auc_aug_p15 = Vec::new();
    let mut auc_plain_m15 = Vec::new();
    for &seed in &seeds {
        for augmented in [true, false] {
            let aug = augmented.then_some(-10.0);
            let dir = base.join(format!("cnn_{}_{seed}", if augmented { "aug" } else { "plain" }));
            copy_dataset(&shared, &dir);
            let exp = Experiment::from_parts(
                city_config("resnet_mini", aug, seed),
                scene.clone(),
                &dir,
            )
            .unwrap();
            let sweep = stage_sweep(&exp, false).unwrap();
            let (m15, p15) = (sweep.points[0].auc, sweep.points[1].auc);
            println!(
                "criterion 7: resnet_mini {} seed {seed}: AUC -15 dB {m15:.4}, +15 dB {p15:.4}",
                if augmented { "augmented" } else { "plain" }
            );
            if augmented {
                auc_aug_m15.push(m15);
                auc_aug_p15.push(p15);
            } else {
                auc_plain_m15.push(m15);
            }
        }
    }

    let mut classic_m15 = Vec::new();
    for family in ["svm_linear", "svm_rbf", "rf"] {
        let dir = base.join(family);
        copy_dataset(&shared, &dir);
        let exp = Experiment::from_parts(city_config(family, None, 1), scene.clone(), &dir).unwrap();
        let sweep = stage_sweep(&exp, false).unwrap();
        println!(
            "criterion 7: {family}: AUC -15 dB {:.4}, +15 dB {:.4}",
            sweep.points[0].auc, sweep.points[1].auc
        );
        classic_m15.push((family, sweep.points[0].auc));
    }

    let med_aug = median(auc_aug_m15.clone());
    let med_plain = median(auc_plain_m15.clone());
    let med_aug_p15 = median(auc_aug_p15.clone());

    // (a) augmentation helps at -15 dB (median over seeds).
    assert!(
        med_aug >= med_plain,
        "(a) augmented median {med_aug:.4} < non-augmented {med_plain:.4} at -15 dB"
    );
    // (b) augmented model is strong at +15 dB.
    assert!(
        med_aug_p15 >= 0.95,
        "(b) augmented median AUC at +15 dB is {med_aug_p15:.4} < 0.95"
    );
    // (c) the CNN outranks every classic baseline at -15 dB.
    for (family, auc) in &classic_m15 {
        assert!(
            med_aug >= *auc,
            "(c) CNN median {med_aug:.4} < {family} {auc:.4} at -15 dB"
        );
    }

    let _ = std::fs::remove_dir_all(&base);
    println!(
        "acceptance criterion 7 (end-to-end ordering): PASS - aug {med_aug:.4} vs plain \
         {med_plain:.4} at -15 dB; aug {med_aug_p15:.4} at +15 dB; classics {:?}",
        classic_m15
            .iter()
            .map(|(f, a)| format!("{f}={a:.4}"))
            .collect::<Vec<_>>()
    );
}

// ===========================================================================
// Criterion 8: determinism
// ===========================================================================

fn small_config(family: &str, seed: u64) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(&format!(
        r#"
schema = "twinlos-experiment"
version = 1

[dataset]
scene = "unused.toml"
cell_size = 2.0
max_samples = 80
test_fraction = 0.3
stratified = true
seed = {seed}

[model]
family = "{family}"
pool = [4, 4]
epochs = 2
batch_size = 16
augment_snr_db = 0.0
seed = {seed}

[classic]
grid_search = false

[eval]
snr_list = [0.0]
seed = {seed}
"#
    ))
    .unwrap()
}

fn canyon_scene() -> twinlos::geometry::Scene {
    twinlos::geometry::Scene::new(
        vec![
            twinlos::geometry::AxisBox::new(Vec3::new(0.0, 4.0, 0.0), Vec3::new(20.0, 6.0, 14.0))
                .unwrap(),
            twinlos::geometry::AxisBox::new(Vec3::new(0.0, 14.0, 0.0), Vec3::new(20.0, 16.0, 14.0))
                .unwrap(),
            twinlos::geometry::AxisBox::new(Vec3::new(9.0, 8.0, 0.0), Vec3::new(11.0, 12.0, 12.0))
                .unwrap(),
        ],
        [0.0, 0.0],
        [20.0, 20.0],
        0.0,
        Vec3::new(1.0, 10.0, 10.0),
        0.0,
        0.6,
        2,
    )
    .unwrap()
}

#[test]
fn criterion_8_determinism() {
    let scene = canyon_scene();
    let base = std::env::temp_dir().join(format!("twinlos_accept8_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&base);

    let mut compared = 0;
    for family in ["rf", "resnet_mini"] {
        let mut bytes: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
        for rep in 0..2 {
            let dir = base.join(format!("{family}_{rep}"));
            let exp =
                Experiment::from_parts(small_config(family, 5), scene.clone(), &dir).unwrap();
            twinlos::pipeline::run_experiment(&exp, false).unwrap();
            let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)
                .unwrap()
                .map(|e| {
                    let e = e.unwrap();
                    (
                        e.file_name().to_string_lossy().into_owned(),
                        std::fs::read(e.path()).unwrap(),
                    )
                })
                .collect();
            files.sort_by(|a, b| a.0.cmp(&b.0));
            bytes.push(files);
        }
        let (a, b) = (&bytes[0], &bytes[1]);
        assert_eq!(
            a.iter().map(|(n, _)| n).collect::<Vec<_>>(),
            b.iter().map(|(n, _)| n).collect::<Vec<_>>(),
            "artifact listings differ"
        );
        for ((name, x), (_, y)) in a.iter().zip(b.iter()) {
            assert_eq!(x, y, "{family}/{name} differs between identical reruns");
            compared += 1;
        }
    }
    let _ = std::fs::remove_dir_all(&base);
    println!(
        "acceptance criterion 8 (determinism): PASS - {compared} artifacts byte-identical across reruns"
    );
}

// ===========================================================================
// Criterion 9: leakage guard
// ===========================================================================

#[test]
fn criterion_9_leakage_guard() {
    let scene = canyon_scene();
    let base = std::env::temp_dir().join(format!("twinlos_accept9_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&base);

    for family in ["rf", "resnet_mini"] {
        let dir = base.join(family);
        let exp = Experiment::from_parts(small_config(family, 9), scene.clone(), &dir).unwrap();
        let artifact = stage_train(&exp, false).unwrap();
        let (mut dataset, manifest) = stage_split(&exp, false).unwrap();

        let test_channels: Vec<_> = manifest
            .test_indices
            .iter()
            .map(|&i| dataset.samples[i].channel.clone())
            .collect();
        let test_labels: Vec<u8> = manifest
            .test_indices
            .iter()
            .map(|&i| dataset.samples[i].label)
            .collect();
        let before = twinlos::evalkit::eval_sweep(
            artifact.scorer(),
            &test_channels,
            &test_labels,
            &[0.0, -10.0],
            exp.config.eval.seed,
        )
        .unwrap();

        // Vandalize the ground-truth paths of every test sample; labels and
        // stored channels stay. Test-time inputs must not notice.
        for &i in &manifest.test_indices {
            for p in &mut dataset.samples[i].truth.paths {
                p.gain *= 1000.0;
                p.delay += 1e-6;
                p.azimuth = -p.azimuth;
                p.bounces += 7;
            }
        }
        let channels_after: Vec<_> = manifest
            .test_indices
            .iter()
            .map(|&i| dataset.samples[i].channel.clone())
            .collect();
        let after = twinlos::evalkit::eval_sweep(
            artifact.scorer(),
            &channels_after,
            &test_labels,
            &[0.0, -10.0],
            exp.config.eval.seed,
        )
        .unwrap();

        for (sa, sb) in before.scores.iter().zip(after.scores.iter()) {
            for (x, y) in sa.iter().zip(sb.iter()) {
                assert!(
                    x.to_bits() == y.to_bits(),
                    "{family}: score changed after mutating ground truth"
                );
            }
        }
    }
    let _ = std::fs::remove_dir_all(&base);
    println!(
        "acceptance criterion 9 (leakage guard): PASS - test-time scores bit-identical under \
         ground-truth mutation"
    );
}
