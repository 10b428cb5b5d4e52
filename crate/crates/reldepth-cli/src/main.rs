//! `reldepth` — relative depth classification between annotated object
//! pairs, from the command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data validation
//! error, 3 runtime failure. Set `RELDEPTH_LOG` (error/warn/info/debug) to
//! control verbosity.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use reldepth::Error;

#[derive(Parser)]
#[command(name = "reldepth", disable_version_flag = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by all data-processing subcommands.
#[derive(Args, Debug, Clone, Default)]
struct CommonArgs {
    /// Flat key-value TOML config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Annotation document (JSON).
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Manifest mapping image ids to depth-map grid files.
    #[arg(long)]
    depth_manifest: Option<PathBuf>,
    /// Depth tolerance; repeat for several thresholds.
    #[arg(long = "threshold")]
    threshold: Vec<u8>,
    /// Feature group combination such as `geo` or `geo,sem,per`; repeatable.
    #[arg(long = "groups")]
    groups: Vec<String>,
    /// Model kind (dt, rf, lr, nn); repeatable.
    #[arg(long = "model")]
    model: Vec<String>,
    /// Cross-validation fold count.
    #[arg(long)]
    folds: Option<usize>,
    /// RNG seed for splits and training.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for reports and artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a dataset and summarize pair counts and class balance.
    Ingest(CommonArgs),
    /// Export assembled feature matrices as CSV, one file per feature-group
    /// combination and threshold.
    Features(CommonArgs),
    /// Train a single configuration, report cross-validated accuracy and
    /// save the fitted model.
    Train(CommonArgs),
    /// Run the full experiment grid (feature groups x models x thresholds).
    Grid(CommonArgs),
    /// Compare depth-map-derived relative depths with the human labels and
    /// optionally with a trained model.
    DepthCompare {
        #[command(flatten)]
        common: CommonArgs,
        /// Previously trained pipeline model file to include in the
        /// comparison.
        #[arg(long)]
        model_file: Option<PathBuf>,
    },
    /// Print the version.
    Version,
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_)) => 1,
        Some(
            Error::Annotation { .. }
            | Error::DepthMap { .. }
            | Error::Geometry(_)
            | Error::NonFinite { .. }
            | Error::SchemaMismatch(_)
            | Error::Version { .. }
            | Error::Json(_),
        ) => 2,
        Some(Error::Training(_) | Error::LengthMismatch { .. } | Error::Io(_)) => 3,
        None => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RELDEPTH_LOG", "warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };

    let result = match &cli.command {
        Command::Ingest(common) => commands::ingest(common),
        Command::Features(common) => commands::features(common),
        Command::Train(common) => commands::train(common),
        Command::Grid(common) => commands::grid(common),
        Command::DepthCompare { common, model_file } => {
            commands::depth_compare(common, model_file.as_deref())
        }
        Command::Version => {
            println!("reldepth {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
