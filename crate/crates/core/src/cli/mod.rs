//! Subcommand front end. Every command writes into its `--out` run directory,
//! starting with a `config.txt` snapshot of the effective settings.

mod commands;
mod tables;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pcgkit::config::{Origin, RunConfig};
use pcgkit::PcgError;

#[derive(Parser, Debug)]
#[command(name = "pcgkit", version, about = "Heart sound classification toolkit")]
pub struct Cli {
    /// Run configuration file with `key = value` lines.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Seed for every stochastic step (same as --set seed=N).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Input {
    /// `filename,label` manifest.
    #[arg(long, required_unless_present = "recipe")]
    manifest: Option<PathBuf>,
    /// Directory the manifest's file names are relative to (default: the manifest's directory).
    #[arg(long, requires = "manifest")]
    audio_dir: Option<PathBuf>,
    /// Fused-set recipe naming its source manifests, instead of --manifest.
    #[arg(long, conflicts_with = "manifest")]
    recipe: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FeatureKind {
    Acoustic,
    Rl,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic corpus: WAVs, manifest and state ground truth.
    Synth {
        #[arg(long)]
        n: Option<usize>,
        /// Seconds per recording.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Resample to the model rate and remove spikes.
    Preprocess {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: PathBuf,
    },
    /// Heart-state segmentation; scores against `.states.csv` ground truth when present.
    Segment {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the binary normal/abnormal branch CNN.
    Pretrain {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replace a binary model's head with a fresh 3-class head.
    Transfer {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fine-tune a 3-class branch CNN.
    Finetune {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: Input,
        /// Manifest monitored for per-epoch metrics instead of the training set.
        #[arg(long)]
        devel: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one sequence autoencoder per spectrogram threshold.
    TrainAe {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract acoustic functionals or autoencoder features.
    Features {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum)]
        kind: FeatureKind,
        /// Directory holding `train-ae` models (rl only).
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an SVM, LDA or MLP on a features CSV.
    TrainShallow {
        #[arg(long)]
        features: PathBuf,
        /// Manifest or any CSV with `filename,label`.
        #[arg(long)]
        labels: PathBuf,
        /// Threshold rows to use from autoencoder features, e.g. `-60` or `-60,-75`.
        #[arg(long, allow_hyphen_values = true)]
        threshold: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict with a branch CNN (needs --manifest) or a shallow model (needs --features).
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        audio_dir: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        threshold: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Majority vote over prediction files, optionally gated by a binary prediction file.
    Ensemble {
        #[arg(long = "pred", required = true)]
        preds: Vec<PathBuf>,
        #[arg(long)]
        gate: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against truth labels.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Collect metrics files into one results table.
    Report {
        /// `system=path/to/metrics.csv`; repeatable.
        #[arg(long = "metrics", required = true, value_name = "NAME=PATH")]
        metrics: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn config(cli: &Cli) -> pcgkit::Result<RunConfig> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), &cli.set)?;
    if let Some(seed) = cli.seed {
        cfg.set("seed", &seed.to_string(), Origin::Flag)?;
    }
    Ok(cfg)
}

/// Parses arguments, runs the command and maps the outcome to an exit status:
/// 0 success, 1 pipeline failure, 2 usage error.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = config(&cli).and_then(|cfg| commands::run(&cli.command, &cfg));
    match result {
        Ok(()) => 0,
        Err(e @ PcgError::Config(_)) => {
            eprintln!("usage error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
