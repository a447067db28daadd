//! Command-line front end: config loading, subcommands and the sweep
//! harness.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod manifest;
pub mod sweep;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{
    cmd_autolabel, cmd_eval, cmd_extract, cmd_synth, cmd_train, cmd_translate, load_training_data,
    train_joint, TrainOutcome, TrainingData,
};
pub use config::{PipelineConfig, SweepAxis, SweepGrid};
pub use sweep::{cmd_sweep, leg_config, SweepResult};

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "tonguenet", version, about = "Tongue contour extraction with a translational deep autoencoder")]
pub struct Cli {
    /// Pipeline config file (`key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `paths.out`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Serial reductions. Every kernel already runs serially, so this only
    /// documents intent.
    #[arg(long, global = true)]
    pub deterministic: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic sequence with truth contours.
    Synth,
    /// Label every frame with the column-wise tracker (Ref contours).
    Autolabel,
    /// Train the joint autoencoder stack.
    Train,
    /// Train the translational first layer on top of a joint model.
    Translate,
    /// Extract contours from ultrasound alone.
    Extract,
    /// Score contour sources against each other.
    Eval,
    /// Train one stack per value of a single hyperparameter.
    Sweep {
        /// depth, hidden_units, batch_size or epochs; overrides `sweep.axis`.
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated values; overrides `sweep.values`.
        #[arg(long)]
        values: Option<String>,
    },
}

/// Config from the file (or defaults) with command-line overrides applied.
pub fn effective_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.paths.out = out.clone();
    }
    if let Command::Sweep { axis, values } = &cli.command {
        for (key, flag, v) in [("sweep.axis", "--axis", axis), ("sweep.values", "--values", values)] {
            if let Some(v) = v {
                cfg.set(key, v)
                    .map_err(|msg| Error::Config { line: 0, msg: format!("{flag}: {msg}") })?;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one parsed invocation; progress goes to `progress`.
pub fn execute(cli: &Cli, progress: &mut dyn Write) -> Result<i32> {
    let cfg = effective_config(cli)?;
    match cli.command {
        Command::Synth => cmd_synth(&cfg, progress).map(|_| 0),
        Command::Autolabel => cmd_autolabel(&cfg, progress).map(|_| 0),
        Command::Train => cmd_train(&cfg, progress).map(|_| 0),
        Command::Translate => cmd_translate(&cfg, progress).map(|_| 0),
        Command::Extract => cmd_extract(&cfg, progress).map(|_| 0),
        Command::Eval => cmd_eval(&cfg, progress).map(|_| 0),
        Command::Sweep { .. } => {
            let result = cmd_sweep(&cfg, progress)?;
            Ok(if result.failures() > 0 { 1 } else { 0 })
        }
    }
}

/// Process entry point; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
