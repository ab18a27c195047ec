//! `readout` — reproducible command-line workflows over the readout-chain
//! models: synthesize calibration bundles, run the calibration pipeline,
//! tabulate amplifier-chain noise, sweep the traveling-wave line, simulate
//! single-shot readout, and compare chains or calibration runs.
//!
//! Every command resolves a [`RunConfig`] (a TOML file via `--config`, or
//! the built-in eight-qubit demo), applies the `--seed` override, and writes
//! a JSON report embedding the command line, the seed, and the fully
//! resolved config, so any report reproduces itself byte for byte.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use readout_core::config::RunConfig;
use readout_core::{Error, Result};

mod commands;
use commands::{calibrate, chain, compare, shots, synth, twline, Ctx, Format};

#[derive(Debug, Parser)]
#[command(
    name = "readout",
    version,
    about = "Simulate and calibrate amplified dispersive-readout chains"
)]
struct Cli {
    /// TOML run configuration; omitted, the built-in eight-qubit demo is used.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override every seeded stage in the configuration.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// `json` writes the report alone; `csv` adds plot-ready tables.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a calibration dataset bundle from the configured ground truth.
    Synth(synth::Args),
    /// Run the per-qubit calibration pipeline over a dataset bundle.
    Calibrate(calibrate::Args),
    /// Tabulate gain and added noise for the configured amplifier chains.
    Chain(chain::Args),
    /// Sweep the traveling-wave line: dispersion, stopband, and gain profile.
    Twline(twline::Args),
    /// Simulate single-shot readout and report SNR and fidelity.
    Shots(shots::Args),
    /// Compare two chains or two calibration reports.
    Compare(compare::Args),
}

fn run(cli: &Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::demo(),
    };
    if let Some(seed) = cli.seed {
        config.synth.seed = seed;
        config.pipeline.seed = seed;
        config.shots.options.seed = seed;
    }
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| Error::data(format!("{}: {e}", cli.out.display())))?;
    // Reports embed the invocation without the binary path, which varies
    // between installations without changing the result.
    let command_line = std::iter::once("readout".to_string())
        .chain(std::env::args().skip(1))
        .collect::<Vec<_>>()
        .join(" ");
    let ctx = Ctx {
        seed: cli.seed,
        config,
        out: cli.out.clone(),
        format: cli.format,
        command_line,
    };
    match &cli.command {
        Command::Synth(args) => synth::run(&ctx, args),
        Command::Calibrate(args) => calibrate::run(&ctx, args),
        Command::Chain(args) => chain::run(&ctx, args),
        Command::Twline(args) => twline::run(&ctx, args),
        Command::Shots(args) => shots::run(&ctx, args),
        Command::Compare(args) => compare::run(&ctx, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Invalid(_) => 2,
                Error::Data(_) => 3,
                Error::Fit(_) => 4,
            })
        }
    }
}
