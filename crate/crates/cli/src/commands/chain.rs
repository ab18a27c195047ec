//! Tabulate cascaded gain and added noise for configured amplification chains.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use readout_core::rfchain::{cascade, SystemNoiseResult};
use readout_core::{csvio, Result};

use super::{linspace, Ctx};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Chain to evaluate; repeat for several (default: every configured chain).
    #[arg(long = "name")]
    pub names: Vec<String>,
    /// Number of frequency points across each chain's band.
    #[arg(long, default_value_t = 226)]
    pub points: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Results {
    /// Per-chain noise tables, one row per frequency point.
    pub chains: BTreeMap<String, Vec<SystemNoiseResult>>,
}

pub fn run(ctx: &Ctx, args: &Args) -> Result<()> {
    let names: Vec<String> = if args.names.is_empty() {
        ctx.config.chains.keys().cloned().collect()
    } else {
        args.names.clone()
    };

    let mut chains = BTreeMap::new();
    for name in &names {
        let spec = ctx.config.chain(name)?;
        let freqs = linspace(spec.band_hz[0], spec.band_hz[1], args.points);
        let rows: Vec<SystemNoiseResult> =
            freqs.iter().map(|&f| cascade(spec, f)).collect::<Result<_>>()?;

        let mid = &rows[rows.len() / 2];
        println!(
            "{name}: G_sys {:.2} dB, T_N {:.3} K, N_added {:.3} quanta at {:.3} GHz",
            mid.g_sys_db,
            mid.t_n_k,
            mid.n_added,
            mid.f_hz / 1e9
        );

        if ctx.want_csv() {
            let path = ctx.out.join(format!("chain_{name}.csv"));
            csvio::write_system_noise_csv(&path, &rows)?;
            println!("wrote {}", path.display());
        }
        chains.insert(name.clone(), rows);
    }

    let results = Results { chains };
    ctx.write_report("chain", ctx.seed.unwrap_or(0), &results)
}
