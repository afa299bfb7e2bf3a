//! `stdetect` — command-line front end for the ischemia detection
//! pipeline.
//!
//! Subcommands map one-to-one onto pipeline stages: `inspect` a raw
//! record, `build` labeled shards, `train` the CNN, `eval` a
//! checkpoint, fit the classical `baselines`, and `verify` the
//! numerics with no data present. Every command reads the same JSON
//! config; any field can be overridden with `--set a.b.c=value`.
//!
//! Exit codes: 0 success; 2 usage and config errors, including record
//! parse failures in `inspect`; 3 data problems such as an empty data
//! root; 4 missing or corrupt artifacts (shards, checkpoints); 5 a
//! checkpoint that does not match the active config; 1 verification
//! failures and everything else.

mod baselines;
mod build;
mod configio;
mod error;
mod eval;
mod inspect;
mod shards;
mod train;
mod verify;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stdetect_core::dataset::SplitName;

#[derive(Parser)]
#[command(name = "stdetect", version, about = "ST-deviation ischemia detection pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every config-driven command.
#[derive(Args)]
pub struct RunArgs {
    /// Pipeline config JSON; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config field, e.g. --set train.epochs=3.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    #[value(alias = "val")]
    Validation,
    Test,
}

impl From<SplitArg> for SplitName {
    fn from(arg: SplitArg) -> Self {
        match arg {
            SplitArg::Train => SplitName::Train,
            SplitArg::Validation => SplitName::Validation,
            SplitArg::Test => SplitName::Test,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Summarize one record: leads, duration, ST episodes per protocol.
    Inspect {
        /// Path to the record's .hea header; the extension may be omitted.
        record: PathBuf,
        /// Emit machine-readable JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Read records, preprocess, window, label, split, and write shards.
    Build {
        #[command(flatten)]
        run: RunArgs,
        /// Worker threads for record-level parallelism; default all cores.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Train the residual CNN on previously built shards.
    Train {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Evaluate a trained checkpoint on one split.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        /// Checkpoint to evaluate; defaults to <output_dir>/checkpoint.ckpt.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Split to score.
        #[arg(long, value_enum, default_value_t = SplitArg::Validation)]
        split: SplitArg,
    },
    /// Fit and score the three classical baselines on built shards.
    Baselines {
        #[command(flatten)]
        run: RunArgs,
        /// Split to score.
        #[arg(long, value_enum, default_value_t = SplitArg::Validation)]
        split: SplitArg,
    },
    /// Run the self-contained numeric verification suite.
    Verify {
        /// Seed for the randomized oracle trials.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Corrupt one analytic gradient to prove the check can fail.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Inspect { record, json } => inspect::run(&record, json),
        Command::Build { run, jobs } => {
            configio::load(&run).and_then(|config| build::run(&config, jobs))
        }
        Command::Train { run } => configio::load(&run).and_then(|config| train::run(&config)),
        Command::Eval { run, checkpoint, split } => configio::load(&run)
            .and_then(|config| eval::run(&config, checkpoint.as_deref(), split.into())),
        Command::Baselines { run, split } => {
            configio::load(&run).and_then(|config| baselines::run(&config, split.into()))
        }
        Command::Verify { seed, inject_fault } => verify::run(seed, inject_fault),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
