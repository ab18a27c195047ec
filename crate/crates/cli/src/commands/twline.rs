//! Dispersion and parametric-gain profile of the configured traveling-wave line.

use serde::{Deserialize, Serialize};

use readout_core::twline::{dispersion_sweep, find_first_stopband, gain_profile, BlochPoint, GainProfile};
use readout_core::{csvio, Result};

use super::Ctx;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Override the number of sweep points from the config.
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Results {
    /// Time-of-flight estimate of the first Bloch stopband center [Hz].
    pub bragg_frequency_hz: f64,
    /// One loading period of the line [m].
    pub period_m: f64,
    /// Total line length [m].
    pub total_length_m: f64,
    /// First stopband edges [Hz], if one exists below the search ceiling.
    pub stopband_hz: Option<(f64, f64)>,
    /// Bloch wavenumber per sweep frequency.
    pub dispersion: Vec<BlochPoint>,
    /// Pumped-vs-unpumped gain and insertion loss over the sweep.
    pub gain: GainProfile,
}

pub fn run(ctx: &Ctx, args: &Args) -> Result<()> {
    let mut line_cfg = ctx.config.twline.clone();
    if let Some(points) = args.points {
        line_cfg.points = points;
    }
    line_cfg.validate()?;

    let sc = &line_cfg.supercell;
    let freqs = line_cfg.sweep_freqs();

    let bragg_hz = sc.bragg_frequency_hz();
    // Search past the sweep so the stopband is reported even when it sits
    // above the configured band.
    let search_ceiling = line_cfg.f_stop_hz.max(1.25 * bragg_hz);
    let stopband = find_first_stopband(sc, search_ceiling)?;
    let dispersion = dispersion_sweep(sc, &freqs)?;
    let gain = gain_profile(sc, &line_cfg.pump, &line_cfg.loss, &freqs)?;

    println!(
        "line: {} supercells, period {:.1} um, length {:.3} m",
        sc.n_supercells,
        sc.period_m() * 1e6,
        sc.total_length_m()
    );
    println!("Bragg estimate (time of flight): {:.3} GHz", bragg_hz / 1e9);
    match stopband {
        Some((lo, hi)) => println!(
            "first stopband: {:.3}-{:.3} GHz (center {:.3} GHz)",
            lo / 1e9,
            hi / 1e9,
            0.5 * (lo + hi) / 1e9
        ),
        None => println!("no stopband below {:.3} GHz", search_ceiling / 1e9),
    }
    let (i_peak, peak_db) = gain
        .gain_on_off_db
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty sweep");
    println!(
        "peak on/off gain: {:.2} dB at {:.3} GHz (net {:.2} dB)",
        peak_db,
        gain.freqs_hz[i_peak] / 1e9,
        gain.net_gain_db[i_peak]
    );

    if ctx.want_csv() {
        let dpath = ctx.out.join("twline_dispersion.csv");
        csvio::write_dispersion_csv(&dpath, &dispersion)?;
        println!("wrote {}", dpath.display());
        let gpath = ctx.out.join("twline_gain.csv");
        csvio::write_gain_profile_csv(&gpath, &gain)?;
        println!("wrote {}", gpath.display());
    }

    let results = Results {
        bragg_frequency_hz: bragg_hz,
        period_m: sc.period_m(),
        total_length_m: sc.total_length_m(),
        stopband_hz: stopband,
        dispersion,
        gain,
    };
    ctx.write_report("twline", ctx.seed.unwrap_or(0), &results)
}
