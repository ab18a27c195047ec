//! Generator-to-cavity attenuation calibration from Stark-spectroscopy maps:
//! the qubit line's shift reaches 2χ exactly at one mean cavity photon, which
//! pins the absolute power at the cavity port.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::calfit::lm::{self, LmOptions};
use crate::calfit::resonator::ResonatorFit;
use crate::cqed::{cavity_power, CavityQubitParams, QFactorMode, StarkMap};
use crate::error::{Error, FitError, Result};
use crate::rfchain::watts_to_dbm;

/// Knobs for [`calibrate_stark`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarkCalOptions {
    /// Quality-factor convention for the one-photon cavity power.
    pub q_mode: QFactorMode,
    /// Parametric-bootstrap resamples for the uncertainty.
    pub resamples: usize,
    pub seed: u64,
    /// Uncertainty of the dispersive shift entering the 2χ threshold
    /// (from the trace-pair fit); 0 leaves χ fixed in the bootstrap.
    pub chi_sigma_hz: f64,
}

impl Default for StarkCalOptions {
    fn default() -> Self {
        StarkCalOptions {
            q_mode: QFactorMode::CouplingOnly,
            resamples: 1000,
            seed: 0,
            chi_sigma_hz: 0.0,
        }
    }
}

/// One fitted slice of the shift-vs-power staircase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftPoint {
    pub power_dbm: f64,
    /// Fitted qubit-line center [Hz].
    pub center_hz: f64,
    /// Stark shift `f_q - center` [Hz], positive below the bare line.
    pub shift_hz: f64,
    pub sigma_hz: f64,
}

/// Result of the absolute power calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarkCalibration {
    /// Generator-plane minus cavity-plane power [dB].
    pub attenuation_db: f64,
    /// Generator power producing one mean cavity photon [dBm].
    pub p_gen_at_n1_dbm: f64,
    /// Cavity-port power at one photon [dBm]; equals
    /// `p_gen_at_n1_dbm - attenuation_db` identically.
    pub p_cav_at_n1_dbm: f64,
    /// Bootstrap standard deviation of the attenuation [dB].
    pub uncertainty_db: f64,
    pub shift_curve: Vec<ShiftPoint>,
    /// Bootstrap resamples that produced a valid crossing.
    pub resamples_used: usize,
}

/// Lorentzian-peak fit of one spectroscopy slice: `b + a/(1 + (2(f-c)/w)²)`,
/// fitted over `(b, a, c, ln w)`. Returns center and its sigma.
fn fit_slice(freqs: &[f64], row: &[f64]) -> Result<(f64, f64)> {
    let n = row.len();
    if n < 8 {
        return Err(Error::data(format!("spectroscopy slice has only {n} points")));
    }
    let mut sorted = row.to_vec();
    sorted.sort_by(f64::total_cmp);
    let b_init = sorted[n / 2];
    let (peak_idx, &peak_val) =
        row.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    let a_init = peak_val - b_init;
    let spread = sorted[n - 1] - sorted[0];
    if a_init <= 0.0 || (spread > 0.0 && a_init < 0.2 * spread) {
        return Err(FitError::PeakNotFound.into());
    }
    let c_init = freqs[peak_idx];
    // Half-maximum width estimate, falling back to a fraction of the span.
    let half = b_init + a_init / 2.0;
    let mut left = None;
    for k in (0..peak_idx).rev() {
        if row[k] < half {
            left = Some(freqs[k]);
            break;
        }
    }
    let mut right = None;
    for k in peak_idx + 1..n {
        if row[k] < half {
            right = Some(freqs[k]);
            break;
        }
    }
    let span = freqs[n - 1] - freqs[0];
    let w_init = match (left, right) {
        (Some(l), Some(r)) => (r - l).max(span / n as f64),
        _ => span / 20.0,
    };
    let residuals = |p: &[f64]| -> Vec<f64> {
        let (b, a, c, w) = (p[0], p[1], p[2], p[3].exp());
        freqs
            .iter()
            .zip(row)
            .map(|(&f, &y)| {
                let u = 2.0 * (f - c) / w;
                b + a / (1.0 + u * u) - y
            })
            .collect()
    };
    let fit = lm::fit(residuals, &[b_init, a_init, c_init, w_init.ln()], &LmOptions::default())?;
    let sigma = fit.covariance[(2, 2)].max(0.0).sqrt();
    Ok((fit.params[2], sigma))
}

/// Draw from N(0, cov) for the resonator-fit parameters; falls back to the
/// diagonal when the covariance is not positive definite (noiseless fits).
fn sample_mvn(chol: &Option<DMatrix<f64>>, diag: &[f64; 4], rng: &mut ChaCha8Rng) -> [f64; 4] {
    let z: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
    match chol {
        Some(l) => {
            let mut out = [0.0; 4];
            for r in 0..4 {
                for c in 0..=r {
                    out[r] += l[(r, c)] * z[c];
                }
            }
            out
        }
        None => std::array::from_fn(|i| diag[i] * z[i]),
    }
}

/// One-photon cavity-port power [dBm] for possibly perturbed fit parameters.
fn p_cav_n1_dbm(
    base: &CavityQubitParams,
    f_res: f64,
    q: f64,
    q_c: f64,
    mode: QFactorMode,
) -> Result<f64> {
    let inv_int = 1.0 / q - 1.0 / q_c;
    let q_int = if inv_int > 0.0 { 1.0 / inv_int } else { f64::INFINITY };
    let p = CavityQubitParams { f_res_hz: f_res, q_c, q_int, ..*base };
    watts_to_dbm(cavity_power(&p, 1.0, mode))
}

/// Interpolate the generator power where the shift staircase crosses
/// `target` [Hz]. Interpolation runs in linear power, where the shift is
/// itself linear, so the noiseless crossing is exact.
fn crossing_dbm(powers_dbm: &[f64], shifts: &[f64], target: f64) -> Option<f64> {
    for i in 0..shifts.len() - 1 {
        let (s0, s1) = (shifts[i], shifts[i + 1]);
        if (s0 - target) * (s1 - target) <= 0.0 && s0 != s1 {
            let x0 = 10f64.powf(powers_dbm[i] / 10.0);
            let x1 = 10f64.powf(powers_dbm[i + 1] / 10.0);
            let t = (target - s0) / (s1 - s0);
            let x = x0 + t * (x1 - x0);
            if x > 0.0 {
                return Some(10.0 * x.log10());
            }
        }
    }
    None
}

/// Calibrate the generator-to-cavity attenuation from a Stark map.
///
/// Per-slice Lorentzian fits give the shift-vs-power staircase; the generator
/// power where the shift equals `2χ` marks one mean photon, and subtracting
/// the one-photon cavity power from the resonator fit yields the attenuation.
/// Uncertainty comes from a seeded parametric bootstrap over the slice
/// centers, the resonator-fit covariance, and optionally χ.
pub fn calibrate_stark(
    map: &StarkMap,
    fit: &ResonatorFit,
    chi_hz: f64,
    opts: &StarkCalOptions,
) -> Result<StarkCalibration> {
    map.validate()?;
    if !(chi_hz > 0.0) {
        return Err(Error::invalid("dispersive shift must be positive"));
    }
    if map.readout_powers_dbm.len() < 2 {
        return Err(Error::data("stark map needs at least two power slices"));
    }
    let f_q = map.params.f_q_hz;
    let mut curve = Vec::with_capacity(map.readout_powers_dbm.len());
    for (i, &p_dbm) in map.readout_powers_dbm.iter().enumerate() {
        let row: Vec<f64> = map.response.row(i).to_vec();
        let (center_hz, sigma_hz) = fit_slice(&map.qubit_drive_freqs_hz, &row)?;
        curve.push(ShiftPoint { power_dbm: p_dbm, center_hz, shift_hz: f_q - center_hz, sigma_hz });
    }
    // The staircase must not descend by more than noise allows.
    for w in curve.windows(2) {
        let tol = 5.0 * w[0].sigma_hz.hypot(w[1].sigma_hz);
        if w[1].shift_hz < w[0].shift_hz - tol {
            return Err(FitError::NonMonotoneShift.into());
        }
    }
    let powers: Vec<f64> = curve.iter().map(|s| s.power_dbm).collect();
    let shifts: Vec<f64> = curve.iter().map(|s| s.shift_hz).collect();
    let p_gen_at_n1_dbm =
        crossing_dbm(&powers, &shifts, 2.0 * chi_hz).ok_or(FitError::CrossingNotFound)?;
    let p_cav = p_cav_n1_dbm(&map.params, fit.f_res_hz, fit.q, fit.q_c, opts.q_mode)?;
    let attenuation_db = p_gen_at_n1_dbm - p_cav;

    // Parametric bootstrap: jitter slice centers, resonator parameters, and
    // χ by their fitted uncertainties, and redo the crossing arithmetic.
    let cov = DMatrix::from_fn(4, 4, |r, c| fit.covariance[r][c]);
    let chol = nalgebra::Cholesky::new(cov).map(|c| c.l());
    let diag: [f64; 4] = std::array::from_fn(|i| fit.covariance[i][i].max(0.0).sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut att_samples = Vec::with_capacity(opts.resamples);
    for _ in 0..opts.resamples {
        let shifts_b: Vec<f64> = curve
            .iter()
            .map(|s| {
                let z: f64 = StandardNormal.sample(&mut rng);
                s.shift_hz + s.sigma_hz * z
            })
            .collect();
        let dp = sample_mvn(&chol, &diag, &mut rng);
        let zc: f64 = StandardNormal.sample(&mut rng);
        let chi_b = chi_hz + opts.chi_sigma_hz * zc;
        if chi_b <= 0.0 {
            continue;
        }
        let Some(p_gen_b) = crossing_dbm(&powers, &shifts_b, 2.0 * chi_b) else {
            continue;
        };
        let f_res_b = fit.f_res_hz + dp[0];
        let q_b = (fit.q.ln() + dp[1]).exp();
        let q_c_b = (fit.q_c.ln() + dp[2]).exp();
        let Ok(p_cav_b) = p_cav_n1_dbm(&map.params, f_res_b, q_b, q_c_b, opts.q_mode) else {
            continue;
        };
        att_samples.push(p_gen_b - p_cav_b);
    }
    if opts.resamples > 0 && att_samples.len() < opts.resamples / 2 {
        return Err(FitError::Degenerate(format!(
            "only {} of {} bootstrap resamples produced a valid crossing",
            att_samples.len(),
            opts.resamples
        ))
        .into());
    }
    let uncertainty_db = if att_samples.len() >= 2 {
        let mean = att_samples.iter().sum::<f64>() / att_samples.len() as f64;
        let var = att_samples.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>()
            / (att_samples.len() - 1) as f64;
        var.sqrt()
    } else {
        0.0
    };
    Ok(StarkCalibration {
        attenuation_db,
        p_gen_at_n1_dbm,
        p_cav_at_n1_dbm: p_gen_at_n1_dbm - attenuation_db,
        uncertainty_db,
        shift_curve: curve,
        resamples_used: att_samples.len(),
    })
}
