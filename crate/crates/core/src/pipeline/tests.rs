use super::*;

use crate::geometry::{AxisBox, Scene};
use crate::vec3::Vec3;

fn tiny_scene() -> Scene {
    // A street canyon with a mid-street blocker: positions past the blocker
    // are NLoS but still reachable off the canyon walls.
    Scene::new(
        vec![
            AxisBox::new(Vec3::new(0.0, 4.0, 0.0), Vec3::new(20.0, 6.0, 14.0)).unwrap(),
            AxisBox::new(Vec3::new(0.0, 14.0, 0.0), Vec3::new(20.0, 16.0, 14.0)).unwrap(),
            AxisBox::new(Vec3::new(9.0, 8.0, 0.0), Vec3::new(11.0, 12.0, 12.0)).unwrap(),
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

fn desk_cfg() -> (crate::channel::OfdmConfig, crate::channel::ArrayConfig) {
    desk_profile()
}

#[test]
fn generation_produces_both_labels() {
    let (ofdm, array) = desk_cfg();
    let (ds, stats) = generate_dataset(&tiny_scene(), &array, &ofdm, 2.0, 1.5, None, 1).unwrap();
    assert!(ds.len() > 20, "only {} samples", ds.len());
    let los = ds.los_count();
    assert!(los > 0 && los < ds.len(), "LoS count {los} of {}", ds.len());
    assert!(stats.grid_positions > ds.len());
    for s in &ds.samples {
        assert_eq!(s.label, u8::from(s.truth.is_los));
        assert!(!s.truth.paths.is_empty());
    }
}

#[test]
fn regeneration_is_byte_identical() {
    let (ofdm, array) = desk_cfg();
    let gen = || {
        let (ds, _) =
            generate_dataset(&tiny_scene(), &array, &ofdm, 2.0, 1.5, Some(30), 7).unwrap();
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        buf
    };
    assert_eq!(gen(), gen());
}

#[test]
fn container_round_trip_preserves_everything_representable() {
    let (ofdm, array) = desk_cfg();
    let (ds, _) = generate_dataset(&tiny_scene(), &array, &ofdm, 3.0, 1.5, None, 3).unwrap();
    let mut buf = Vec::new();
    write_dataset(&ds, &mut buf).unwrap();
    let back = read_dataset(&mut buf.as_slice()).unwrap();
    assert_eq!(back.len(), ds.len());
    for (a, b) in ds.samples.iter().zip(&back.samples) {
        assert_eq!(a.ue_position, b.ue_position);
        assert_eq!(a.label, b.label);
        assert_eq!(a.truth.paths.len(), b.truth.paths.len());
        for (p, q) in a.truth.paths.iter().zip(&b.truth.paths) {
            assert_eq!(p.delay, q.delay); // f64 fields are exact
            assert_eq!(p.bounces, q.bounces);
        }
        // Channels are stored as f32.
        for (x, y) in a.channel.data.iter().zip(b.channel.data.iter()) {
            assert!((x.re - y.re).abs() <= x.re.abs() * 1e-6 + 1e-12);
        }
    }
    // Re-serialization of the loaded dataset is byte-identical.
    let mut buf2 = Vec::new();
    write_dataset(&back, &mut buf2).unwrap();
    assert_eq!(buf, buf2);
}

#[test]
fn cp_violations_are_rejected_and_counted() {
    // A cyclic prefix of one sample cannot cover a 20 m scene.
    let (mut ofdm, array) = desk_cfg();
    ofdm.n_guard = 1; // Ts = 10 ns -> 3 m path budget
    let (ds, stats) = generate_dataset(&tiny_scene(), &array, &ofdm, 2.0, 1.5, None, 1).unwrap();
    assert!(ds.is_empty());
    assert_eq!(stats.cp_rejected + stats.outage_excluded, stats.grid_positions);
    assert!(stats.cp_rejected > 0);
}

#[test]
fn toy_city_has_paper_like_los_fraction() {
    let scene = toy_city_scene();
    let (ofdm, array) = desk_cfg();
    let (ds, _) = generate_dataset(&scene, &array, &ofdm, 3.0, 1.5, None, 1).unwrap();
    let frac = ds.los_count() as f64 / ds.len() as f64;
    assert!(
        frac > 0.25 && frac < 0.55,
        "toy city LoS fraction {frac:.3} out of range"
    );
    assert!(ds.len() > 300, "{} samples", ds.len());
}

fn smoke_config(family: ModelFamily) -> ExperimentConfig {
    let text = format!(
        r#"
schema = "twinlos-experiment"
version = 1

[dataset]
scene = "unused.toml"
cell_size = 2.0
max_samples = 60
test_fraction = 0.3
stratified = true
seed = 11

[model]
family = "{}"
pool = [4, 4]
epochs = 2
batch_size = 16
seed = 3

[classic]
grid_search = false

[eval]
snr_list = [0.0, 15.0]
seed = 2
"#,
        family.name()
    );
    ExperimentConfig::from_toml_str(&text).unwrap()
}

#[test]
fn experiment_runs_end_to_end_and_is_idempotent() {
    let dir = std::env::temp_dir().join(format!("twinlos_exp_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let exp =
        Experiment::from_parts(smoke_config(ModelFamily::ResnetMini), tiny_scene(), &dir).unwrap();
    let summary = run_experiment(&exp, false).unwrap();
    assert!(summary.contains("snr_db,accuracy,auc"));
    assert!(exp.path("dataset.ndtl").exists());
    assert!(exp.path("model_resnet_mini.ckpt").exists());
    assert!(exp.path("sweep_resnet_mini.csv").exists());
    assert!(exp.path("roc_resnet_mini_0.csv").exists());
    assert!(exp.path("train_log_resnet_mini.csv").exists());
    assert!(exp.path("flops_reference.txt").exists());

    // Second run with the same config is a no-op.
    let mtime = std::fs::metadata(exp.path("summary.txt")).unwrap().modified().unwrap();
    let again = run_experiment(&exp, false).unwrap();
    assert_eq!(summary, again);
    let mtime2 = std::fs::metadata(exp.path("summary.txt")).unwrap().modified().unwrap();
    assert_eq!(mtime, mtime2);

    // A different config aimed at the same directory is rejected.
    let other =
        Experiment::from_parts(smoke_config(ModelFamily::Rf), tiny_scene(), &dir).unwrap();
    assert!(run_experiment(&other, false).is_err());

    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn classic_experiment_trains_and_sweeps() {
    let dir = std::env::temp_dir().join(format!("twinlos_rf_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let exp = Experiment::from_parts(smoke_config(ModelFamily::Rf), tiny_scene(), &dir).unwrap();
    let summary = run_experiment(&exp, false).unwrap();
    assert!(exp.path("model_rf.ckpt").exists());
    assert!(exp.path("tune_rf.txt").exists());
    assert!(summary.contains("rf"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn features_stage_writes_expected_header() {
    let dir = std::env::temp_dir().join(format!("twinlos_feat_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let exp =
        Experiment::from_parts(smoke_config(ModelFamily::ResnetMini), tiny_scene(), &dir).unwrap();
    let path = stage_features(&exp, false).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with("p_rss,p_max,tau_rms,delta_tau,theta_rms,phi_rms,label,snr_db"));
    let _ = std::fs::remove_dir_all(&dir);
}
