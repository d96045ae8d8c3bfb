//! Orchestration: dataset generation, manifests, experiment configuration,
//! staged experiment execution, and the toy scene fixture.

mod dataset;
mod expconfig;
mod experiment;
mod manifest;

pub use dataset::{
    generate_dataset, load_dataset, read_dataset, save_dataset, write_dataset, Dataset, GenStats,
    Sample,
};
pub use expconfig::{
    desk_profile, paper_profile, ClassicSection, DatasetSection, EvalSection, ExperimentConfig,
    ModelFamily, ModelSection, MpcSection, DEFAULT_SNR_SWEEP, EXPERIMENT_SCHEMA,
    EXPERIMENT_VERSION,
};
pub use experiment::{
    reference_cost_table, run_experiment, stage_eval, stage_features, stage_flops, stage_generate,
    stage_report, stage_split, stage_sweep, stage_train, toy_city_scene, Experiment,
};
pub use manifest::{sha256_hex, split, DatasetManifest, SplitSize, MANIFEST_VERSION};

#[cfg(test)]
mod tests;
