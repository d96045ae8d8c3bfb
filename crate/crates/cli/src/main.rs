//! Command-line front end for the digital-twin LoS classification pipeline.
//!
//! Every subcommand reads the experiment config (`--config`), works inside
//! the artifact directory (`--out`), reuses artifacts that already exist,
//! and recomputes its own outputs under `--force`. Worker count is taken
//! from the `RAYON_NUM_THREADS` environment variable.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use twinlos::pipeline::{
    run_experiment, stage_eval, stage_features, stage_flops, stage_generate, stage_report,
    stage_split, stage_sweep, stage_train, Experiment,
};

#[derive(Parser)]
#[command(
    name = "twinlos",
    about = "LoS/NLoS classification on digital-twin wireless channels",
    version
)]
struct Cli {
    /// Experiment configuration file (TOML).
    #[arg(long, global = true, default_value = "experiment.toml")]
    config: PathBuf,

    /// Artifact output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override every seed in the config (dataset, model, eval).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Recompute this stage's artifacts even when they exist.
    #[arg(long, global = true)]
    force: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace the scene and write the dataset container and manifest.
    Generate,
    /// Draw the train/test split and persist it in the manifest.
    Split,
    /// Export the twin ground-truth feature table (CSV).
    Features,
    /// Train the configured model and write its checkpoint.
    Train,
    /// Evaluate the model on the test split at the config's eval SNR.
    Eval,
    /// Evaluate over the configured SNR list; write sweep and ROC CSVs.
    Sweep,
    /// Write analytic inference-cost reports.
    Flops,
    /// Assemble the summary report from stored artifacts.
    Report,
    /// Run every stage in order (generate through report).
    Run,
}

fn load_experiment(cli: &Cli) -> twinlos::Result<Experiment> {
    let mut exp = Experiment::load(&cli.config, &cli.out)?;
    if let Some(seed) = cli.seed {
        exp.config.dataset.seed = seed;
        exp.config.model.seed = seed;
        exp.config.eval.seed = seed;
    }
    Ok(exp)
}

fn dispatch(cli: &Cli) -> twinlos::Result<()> {
    let exp = load_experiment(cli)?;
    match cli.command {
        Command::Generate => {
            let (ds, manifest) = stage_generate(&exp, cli.force)?;
            println!(
                "dataset: {} samples ({} LoS) from {} grid positions -> {}",
                ds.len(),
                ds.los_count(),
                manifest.grid_positions,
                exp.path("dataset.ndtl").display()
            );
        }
        Command::Split => {
            let (_, manifest) = stage_split(&exp, cli.force)?;
            println!(
                "split: {} train / {} test",
                manifest.train_indices().len(),
                manifest.test_indices.len()
            );
        }
        Command::Features => {
            let path = stage_features(&exp, cli.force)?;
            println!("features: {}", path.display());
        }
        Command::Train => {
            let artifact = stage_train(&exp, cli.force)?;
            println!(
                "trained {} -> {}",
                artifact.name(),
                exp.path(&format!("model_{}.ckpt", artifact.name())).display()
            );
        }
        Command::Eval => {
            let snr = exp.config.eval.eval_snr_db;
            let (acc, auc, _) = stage_eval(&exp, snr, cli.force)?;
            println!("eval at {snr} dB: accuracy {acc:.4}, auc {auc:.4}");
        }
        Command::Sweep => {
            let result = stage_sweep(&exp, cli.force)?;
            for p in &result.points {
                println!(
                    "{:>7.1} dB: accuracy {:.4}, auc {:.4}",
                    p.snr_db, p.accuracy, p.auc
                );
            }
        }
        Command::Flops => {
            let path = stage_flops(&exp, cli.force)?;
            println!("{}", std::fs::read_to_string(path)?);
        }
        Command::Report => {
            let summary = stage_report(&exp)?;
            println!("{summary}");
        }
        Command::Run => {
            let summary = run_experiment(&exp, cli.force)?;
            println!("{summary}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
