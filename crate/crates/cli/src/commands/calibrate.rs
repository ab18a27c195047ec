//! `readout calibrate` — run the full per-qubit pipeline over a bundle,
//! optionally calibrating a second (baseline) bundle and comparing noise.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use readout_core::bundle::Bundle;
use readout_core::calfit::{
    compare_reports, run_pipeline, FailureKind, PairedNoise, PipelineReport,
};
use readout_core::{csvio, Error, FitError, Result};

use super::Ctx;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Bundle directory; defaults to `<out>/bundle` as written by `synth`.
    #[arg(long, value_name = "DIR")]
    pub data: Option<PathBuf>,
    /// Second bundle to calibrate and compare against (e.g. amplifier off).
    #[arg(long, value_name = "DIR")]
    pub baseline: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Results {
    pub primary: PipelineReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<PipelineReport>,
    /// Noise ratio baseline/primary per shared qubit; the square root
    /// predicts the readout SNR gain of the primary chain.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare: Option<Vec<PairedNoise>>,
}

fn calibrate_dir(ctx: &Ctx, dir: &PathBuf) -> Result<PipelineReport> {
    let bundle = Bundle::open(dir)?;
    let report = run_pipeline(&bundle, &ctx.config.pipeline)?;
    for cal in report.calibrated() {
        println!(
            "{}: attenuation {:+.2} dB, gain {:+.2} dB, added noise {:.3} ± {:.3} quanta",
            cal.label, cal.stark.attenuation_db, cal.gain.g_sys_db, cal.added.n_added,
            cal.added.sigma
        );
    }
    for failure in report.failures() {
        println!("{}: FAILED at {:?}: {}", failure.label, failure.stage, failure.message);
    }
    Ok(report)
}

/// Exit with the error class of the first failed qubit so batch callers see
/// a nonzero status even though the report itself was written.
fn first_failure(report: &PipelineReport) -> Option<Error> {
    report.failures().next().map(|f| {
        let msg = format!("qubit {} failed during {:?}: {}", f.label, f.stage, f.message);
        match f.kind {
            FailureKind::Config => Error::Invalid(msg),
            FailureKind::Data => Error::Data(msg),
            FailureKind::Fit => Error::Fit(FitError::Stage(msg)),
        }
    })
}

pub fn run(ctx: &Ctx, args: &Args) -> Result<()> {
    let data = args.data.clone().unwrap_or_else(|| ctx.out.join("bundle"));
    let primary = calibrate_dir(ctx, &data)?;
    let baseline = args.baseline.as_ref().map(|dir| calibrate_dir(ctx, dir)).transpose()?;
    let compare = baseline.as_ref().map(|b| compare_reports(&primary, b));
    if let Some(pairs) = &compare {
        for pair in pairs {
            println!(
                "{}: noise ratio {:.3}, predicted SNR gain {:.3}",
                pair.label, pair.t_n_ratio, pair.predicted_snr_ratio
            );
        }
    }

    if ctx.want_csv() {
        let rows: Vec<_> = primary.calibrated().collect();
        csvio::write_calibration_csv(&ctx.out.join("calibration.csv"), &rows)?;
        if let Some(b) = &baseline {
            let rows: Vec<_> = b.calibrated().collect();
            csvio::write_calibration_csv(&ctx.out.join("calibration_baseline.csv"), &rows)?;
        }
    }

    let failure = first_failure(&primary)
        .or_else(|| baseline.as_ref().and_then(first_failure));
    let results = Results { primary, baseline, compare };
    ctx.write_report("calibrate", ctx.config.pipeline.seed, results)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
