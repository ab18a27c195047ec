//! Shared command context and report plumbing.

pub mod calibrate;
pub mod chain;
pub mod compare;
pub mod shots;
pub mod synth;
pub mod twline;

use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;
use readout_core::config::RunConfig;
use readout_core::report::Report;
use readout_core::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Resolved invocation shared by every command.
pub struct Ctx {
    /// Configuration after the `--seed` override.
    pub config: RunConfig,
    /// The raw `--seed` flag, for commands without a config-side seed.
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub format: Format,
    pub command_line: String,
}

impl Ctx {
    pub fn want_csv(&self) -> bool {
        self.format == Format::Csv
    }

    /// Write `report_<name>.json` in the output directory and echo its path.
    pub fn write_report<T: Serialize>(&self, name: &str, seed: u64, results: T) -> Result<()> {
        let path = self.out.join(format!("report_{name}.json"));
        Report::new(self.command_line.clone(), seed, self.config.clone(), results)
            .write(&path)?;
        println!("report: {}", path.display());
        Ok(())
    }
}

/// Uniformly spaced inclusive grid.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}
