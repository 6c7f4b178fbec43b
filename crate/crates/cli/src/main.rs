use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use indexgate_cli::{cmd_ablate, cmd_predict, cmd_run, cmd_sweep, cmd_synth, cmd_train, Overrides};

/// Automatic subject indexing of short texts with document-level quality
/// estimation and filtering.
#[derive(Parser)]
#[command(name = "indexgate", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus (corpus.jsonl + vocab.tsv).
    Synth {
        /// Synthesis config (JSON); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (must exist).
        #[arg(long)]
        out: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the nested cross-validation experiment.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (speed only; results are identical).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run the feature-group ablation and isolation study.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Re-threshold an existing estimates.jsonl dump.
    Sweep {
        /// estimates.jsonl written by `run`.
        #[arg(long)]
        estimates: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated ascending thresholds (default: 0.0..1.0 step 0.05).
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
    },
    /// Train a model bundle on the full corpus.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Apply a trained bundle to a corpus.
    Predict {
        /// bundle.json written by `train`.
        #[arg(long)]
        bundle: PathBuf,
        /// Corpus to index (JSON lines; labels may be empty).
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth { config, out, seed } => cmd_synth(config.as_deref(), &out, seed),
        Command::Run {
            config,
            out,
            seed,
            threads,
        } => cmd_run(&config, out.as_deref(), Overrides { seed, threads }),
        Command::Ablate {
            config,
            out,
            seed,
            threads,
        } => cmd_ablate(&config, out.as_deref(), Overrides { seed, threads }),
        Command::Sweep {
            estimates,
            out,
            thresholds,
        } => cmd_sweep(&estimates, &out, thresholds),
        Command::Train {
            config,
            out,
            seed,
            threads,
        } => cmd_train(&config, out.as_deref(), Overrides { seed, threads }).map(|_| ()),
        Command::Predict {
            bundle,
            corpus,
            out,
        } => cmd_predict(&bundle, &corpus, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
