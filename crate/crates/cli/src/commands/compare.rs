//! Compare two amplification chains analytically, or two finished calibration
//! reports empirically, and tabulate the predicted SNR scaling.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use readout_core::calfit::{compare_reports, PairedNoise};
use readout_core::report::{self, Report};
use readout_core::rfchain::{compare_chains, ChainComparison};
use readout_core::{csvio, Error, Result};

use super::{calibrate, linspace, Ctx};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Two configured chain names: compare their modeled noise tables.
    #[arg(long, num_args = 2, value_names = ["A", "B"], conflicts_with = "reports")]
    pub chains: Option<Vec<String>>,
    /// Two calibrate report paths: pair their per-qubit extracted noise.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    pub reports: Option<Vec<PathBuf>>,
    /// Frequency points across the shared band (chain mode).
    #[arg(long, default_value_t = 226)]
    pub points: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Results {
    Chains {
        a: String,
        b: String,
        comparison: ChainComparison,
    },
    Reports {
        a: PathBuf,
        b: PathBuf,
        paired: Vec<PairedNoise>,
    },
}

fn run_chain_mode(ctx: &Ctx, names: &[String], points: usize) -> Result<Results> {
    let a = ctx.config.chain(&names[0])?;
    let b = ctx.config.chain(&names[1])?;
    let lo = a.band_hz[0].max(b.band_hz[0]);
    let hi = a.band_hz[1].min(b.band_hz[1]);
    if lo >= hi {
        return Err(Error::invalid(format!(
            "chains '{}' and '{}' share no frequency band",
            names[0], names[1]
        )));
    }
    let comparison = compare_chains(a, b, &linspace(lo, hi, points))?;

    let mid = &comparison.rows[comparison.rows.len() / 2];
    println!(
        "{} vs {} at {:.3} GHz: N_added {:.3} vs {:.3}, sqrt(T_N ratio) {:.3}",
        names[0],
        names[1],
        mid.f_hz / 1e9,
        mid.a.n_added,
        mid.b.n_added,
        mid.tn_sqrt_ratio
    );

    if ctx.want_csv() {
        let path = ctx.out.join("compare_chains.csv");
        csvio::write_comparison_csv(&path, &comparison)?;
        println!("wrote {}", path.display());
    }
    Ok(Results::Chains {
        a: names[0].clone(),
        b: names[1].clone(),
        comparison,
    })
}

fn run_report_mode(ctx: &Ctx, paths: &[PathBuf]) -> Result<Results> {
    let ra: Report<calibrate::Results> = report::read_json(&paths[0])?;
    let rb: Report<calibrate::Results> = report::read_json(&paths[1])?;
    let paired = compare_reports(&ra.results.primary, &rb.results.primary);
    if paired.is_empty() {
        return Err(Error::data(format!(
            "reports {} and {} share no calibrated qubit labels",
            paths[0].display(),
            paths[1].display()
        )));
    }

    for row in &paired {
        println!(
            "{}: N_added {:.3} vs {:.3} quanta -> predicted SNR ratio {:.3}",
            row.label, row.n_added_a, row.n_added_b, row.predicted_snr_ratio
        );
    }

    if ctx.want_csv() {
        let path = ctx.out.join("compare_reports.csv");
        csvio::write_paired_noise_csv(&path, &paired)?;
        println!("wrote {}", path.display());
    }
    Ok(Results::Reports {
        a: paths[0].clone(),
        b: paths[1].clone(),
        paired,
    })
}

pub fn run(ctx: &Ctx, args: &Args) -> Result<()> {
    let results = match (&args.chains, &args.reports) {
        (Some(names), None) => run_chain_mode(ctx, names, args.points)?,
        (None, Some(paths)) => run_report_mode(ctx, paths)?,
        _ => {
            return Err(Error::invalid(
                "pass exactly one of --chains A B or --reports A B",
            ))
        }
    };
    ctx.write_report("compare", ctx.seed.unwrap_or(0), &results)
}
