//! Single-shot readout simulation through one chain, optionally compared
//! against a second chain at the same readout frequency.

use serde::{Deserialize, Serialize};

use readout_core::rfchain::{cascade, SystemNoiseResult};
use readout_core::shots::{
    analytic_fidelity, expected_snr, histogram, rotate_and_fit, simulate_shots, Histogram,
    ReadoutStats,
};
use readout_core::{csvio, Result};

use super::Ctx;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Override the configured chain for the primary ensemble.
    #[arg(long)]
    pub chain: Option<String>,
    /// Second chain: run the same ensemble through it and report the SNR
    /// ratio and fidelity pair.
    #[arg(long)]
    pub versus: Option<String>,
    /// Override the configured number of shots.
    #[arg(long)]
    pub n: Option<usize>,
}

/// One chain's ensemble, reduced to statistics (raw I/Q goes to CSV).
#[derive(Debug, Serialize, Deserialize)]
pub struct ChainRun {
    pub chain: String,
    pub system: SystemNoiseResult,
    pub stats: ReadoutStats,
    pub expected_snr: f64,
    pub analytic_fidelity: f64,
    pub histogram: Histogram,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Comparison {
    pub chain_a: String,
    pub chain_b: String,
    /// Measured SNR ratio a/b.
    pub snr_ratio: f64,
    /// sqrt(T_N,b / T_N,a): the ratio the noise temperatures predict.
    pub predicted_snr_ratio: f64,
    pub fidelity_a: f64,
    pub fidelity_b: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Results {
    pub qubit: String,
    pub readout_freq_hz: f64,
    pub n_shots: usize,
    pub integration_time_s: f64,
    pub primary: ChainRun,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub versus: Option<ChainRun>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
}

fn run_chain(ctx: &Ctx, name: &str, f_ro: f64, n: usize, seed: u64) -> Result<ChainRun> {
    let scfg = &ctx.config.shots;
    let params = ctx.config.qubit(&scfg.qubit)?.to_params();
    let mut opts = scfg.options;
    opts.readout_freq_hz = Some(f_ro);
    opts.seed = seed;

    let system = cascade(ctx.config.chain(name)?, f_ro)?;
    let ensemble = simulate_shots(&params, &system, n, scfg.integration_time_s, &opts)?;
    let stats = rotate_and_fit(&ensemble)?;
    let hist = histogram(&ensemble, &stats, scfg.histogram_bins)?;
    let expected = expected_snr(&params, &system, scfg.integration_time_s, &opts)?;

    println!(
        "{name}: N_added {:.3} quanta, SNR {:.3} (expected {:.3}), fidelity {:.4}",
        system.n_added, stats.snr, expected, stats.fidelity
    );

    if ctx.want_csv() {
        let spath = ctx.out.join(format!("shots_{name}.csv"));
        csvio::write_shots_csv(&spath, &ensemble)?;
        println!("wrote {}", spath.display());
        let hpath = ctx.out.join(format!("histogram_{name}.csv"));
        csvio::write_histogram_csv(&hpath, &hist)?;
        println!("wrote {}", hpath.display());
    }

    Ok(ChainRun {
        chain: name.to_string(),
        system,
        stats,
        expected_snr: expected,
        analytic_fidelity: analytic_fidelity(stats.snr)?,
        histogram: hist,
    })
}

pub fn run(ctx: &Ctx, args: &Args) -> Result<()> {
    let scfg = &ctx.config.shots;
    let params = ctx.config.qubit(&scfg.qubit)?.to_params();
    let f_ro = scfg
        .options
        .readout_freq_hz
        .unwrap_or(params.f_res_hz - params.chi_hz);
    let n = args.n.unwrap_or(scfg.n_shots);
    let primary_name = args.chain.clone().unwrap_or_else(|| scfg.chain.clone());
    let seed = scfg.options.seed;

    let primary = run_chain(ctx, &primary_name, f_ro, n, seed)?;

    let (versus, comparison) = match &args.versus {
        Some(other) => {
            // Separate stream so the two ensembles' noise draws stay independent.
            let b = run_chain(ctx, other, f_ro, n, seed.wrapping_add(1))?;
            let cmp = Comparison {
                chain_a: primary_name.clone(),
                chain_b: other.clone(),
                snr_ratio: primary.stats.snr / b.stats.snr,
                predicted_snr_ratio: (b.system.t_n_k / primary.system.t_n_k).sqrt(),
                fidelity_a: primary.stats.fidelity,
                fidelity_b: b.stats.fidelity,
            };
            println!(
                "SNR ratio {}/{}: {:.3} (predicted {:.3}); fidelity pair ({:.4}, {:.4})",
                cmp.chain_a,
                cmp.chain_b,
                cmp.snr_ratio,
                cmp.predicted_snr_ratio,
                cmp.fidelity_a,
                cmp.fidelity_b
            );
            (Some(b), Some(cmp))
        }
        None => (None, None),
    };

    let results = Results {
        qubit: scfg.qubit.clone(),
        readout_freq_hz: f_ro,
        n_shots: n,
        integration_time_s: scfg.integration_time_s,
        primary,
        versus,
        comparison,
    };
    ctx.write_report("shots", seed, &results)
}
