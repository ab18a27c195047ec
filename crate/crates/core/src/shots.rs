//! Single-shot dispersive readout Monte Carlo: IQ ensembles generated from
//! the cavity response and a chain's added noise, quadrature rotation,
//! threshold classification, and fidelity/SNR statistics.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::cqed::{s21, CavityQubitParams, QubitState};
use crate::error::{Error, FitError, Result};
use crate::rfchain::SystemNoiseResult;

/// One integrated readout record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub i: f64,
    pub q: f64,
    pub prepared: QubitState,
}

/// A full ensemble plus the settings that produced it — enough to reproduce
/// or re-analyze without the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotEnsemble {
    pub shots: Vec<Shot>,
    /// Integration time τ [s].
    pub integration_time_s: f64,
    pub readout_freq_hz: f64,
    pub seed: u64,
}

impl ShotEnsemble {
    pub fn validate(&self) -> Result<()> {
        if self.shots.len() < 2 {
            return Err(Error::invalid("ensemble needs at least two shots"));
        }
        let has = |s: QubitState| self.shots.iter().any(|x| x.prepared == s);
        if !has(QubitState::Ground) || !has(QubitState::Excited) {
            return Err(Error::data("ensemble must contain both prepared states"));
        }
        if !(self.integration_time_s > 0.0) {
            return Err(Error::invalid("integration time must be positive"));
        }
        Ok(())
    }
}

/// Generation knobs for [`simulate_shots`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotOptions {
    /// Readout tone [Hz]; `None` places it midway between the two dressed
    /// cavity dips (`f_res - χ`), where the state contrast peaks.
    pub readout_freq_hz: Option<f64>,
    /// Mean cavity photons of the readout tone.
    pub readout_photons: f64,
    /// Quanta-to-variance convention: one quadrature's variance is
    /// `(N_added + 1/2)/(2·rate·τ)`.
    pub measurement_rate_hz: f64,
    /// Probability that a prepared-excited shot decays at a uniform random
    /// time within the integration window.
    pub relaxation_prob: f64,
    pub seed: u64,
    /// Shots per parallel work unit; has no effect on the output values.
    pub chunk: usize,
}

impl Default for ShotOptions {
    fn default() -> Self {
        ShotOptions {
            readout_freq_hz: None,
            readout_photons: 10.0,
            measurement_rate_hz: 1e6,
            relaxation_prob: 0.0,
            seed: 0,
            chunk: 8192,
        }
    }
}

/// Per-quadrature noise standard deviation for the given chain and timing.
fn quadrature_sigma(chain: &SystemNoiseResult, rate_hz: f64, tau_s: f64) -> f64 {
    ((chain.n_added + 0.5) / (2.0 * rate_hz * tau_s)).sqrt()
}

/// State-dependent mean IQ point: `sqrt(n_ro) · S21(f_ro, state)`.
fn mean_point(p: &CavityQubitParams, f_ro: f64, n_ro: f64, state: QubitState) -> Complex64 {
    n_ro.sqrt() * s21(p, f_ro, state)
}

/// Generate `n` shots, alternating prepared states, under the chain's noise.
///
/// Per-shot means come from the dispersive response at the readout tone;
/// isotropic complex Gaussian noise has per-quadrature variance
/// `(N_added + 1/2)/(2·rate·τ)`. With `relaxation_prob > 0`, affected
/// excited-state shots decay at `t ~ U[0, τ)` and integrate to the convex
/// mix `(t/τ)·m1 + (1 - t/τ)·m0`, producing the characteristic tail.
///
/// Each shot draws from its own RNG stream keyed by shot index, so results
/// are bit-identical for any chunk size or thread schedule.
pub fn simulate_shots(
    p: &CavityQubitParams,
    chain: &SystemNoiseResult,
    n: usize,
    tau_s: f64,
    opts: &ShotOptions,
) -> Result<ShotEnsemble> {
    p.validate()?;
    if n < 2 {
        return Err(Error::invalid(format!("need at least two shots, got {n}")));
    }
    if !(tau_s > 0.0) {
        return Err(Error::invalid("integration time must be positive"));
    }
    if !(0.0..=1.0).contains(&opts.relaxation_prob) {
        return Err(Error::invalid("relaxation probability must be in [0, 1]"));
    }
    if !(opts.measurement_rate_hz > 0.0) || !(opts.readout_photons >= 0.0) {
        return Err(Error::invalid("rate must be positive and photons non-negative"));
    }
    if chain.n_added < -0.5 {
        return Err(Error::invalid("added noise below -1/2 quanta is unphysical"));
    }
    let f_ro = opts.readout_freq_hz.unwrap_or(p.f_res_hz - p.chi_hz);
    let m0 = mean_point(p, f_ro, opts.readout_photons, QubitState::Ground);
    let m1 = mean_point(p, f_ro, opts.readout_photons, QubitState::Excited);
    let sigma = quadrature_sigma(chain, opts.measurement_rate_hz, tau_s);
    let base = ChaCha8Rng::seed_from_u64(opts.seed);
    let chunk = opts.chunk.max(1);
    let n_chunks = n.div_ceil(chunk);
    let shots: Vec<Shot> = (0..n_chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let lo = c * chunk;
            let hi = ((c + 1) * chunk).min(n);
            let base = base.clone();
            (lo..hi).map(move |k| {
                let mut rng = base.clone();
                rng.set_stream(k as u64 + 1);
                let prepared =
                    if k % 2 == 0 { QubitState::Ground } else { QubitState::Excited };
                let mut mean = match prepared {
                    QubitState::Ground => m0,
                    QubitState::Excited => m1,
                };
                if prepared == QubitState::Excited && opts.relaxation_prob > 0.0 {
                    let u: f64 = rng.gen();
                    if u < opts.relaxation_prob {
                        let t_frac: f64 = rng.gen();
                        mean = t_frac * m1 + (1.0 - t_frac) * m0;
                    }
                }
                let zi: f64 = StandardNormal.sample(&mut rng);
                let zq: f64 = StandardNormal.sample(&mut rng);
                Shot { i: mean.re + sigma * zi, q: mean.im + sigma * zq, prepared }
            })
        })
        .collect();
    let ensemble = ShotEnsemble {
        shots,
        integration_time_s: tau_s,
        readout_freq_hz: f_ro,
        seed: opts.seed,
    };
    ensemble.validate()?;
    Ok(ensemble)
}

/// How the classification boundary between the fitted clouds is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// Midway between the fitted means.
    #[default]
    Midpoint,
    /// Equal-likelihood point of the two fitted Gaussians (handles unequal
    /// widths); falls back to the midpoint for equal widths.
    MaxLikelihood,
}

/// Rotated-quadrature statistics and classification outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutStats {
    /// Rotation applied so the full separation lies in I [rad].
    pub rotation_rad: f64,
    pub i0: f64,
    pub i1: f64,
    pub sigma0: f64,
    pub sigma1: f64,
    /// `|I0 - I1|`.
    pub mu: f64,
    /// `sqrt(σ0² + σ1²)`.
    pub sigma_t: f64,
    /// `mu / sigma_t`.
    pub snr: f64,
    pub threshold: f64,
    /// Fraction of prepared-excited shots classified ground.
    pub p01: f64,
    /// Fraction of prepared-ground shots classified excited.
    pub p10: f64,
    /// `1 - (p01 + p10)/2`.
    pub fidelity: f64,
    pub n_shots: usize,
}

/// Rotate into the separation quadrature and fit per-state means and widths;
/// classification uses the midpoint rule.
pub fn rotate_and_fit(e: &ShotEnsemble) -> Result<ReadoutStats> {
    fidelity(e, ThresholdRule::Midpoint)
}

/// Full analysis: rotation, per-state Gaussian moments, SNR, threshold
/// classification, and the conditional-error fidelity.
pub fn fidelity(e: &ShotEnsemble, rule: ThresholdRule) -> Result<ReadoutStats> {
    e.validate()?;
    let mean_iq = |state: QubitState| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut count = 0usize;
        for s in &e.shots {
            if s.prepared == state {
                acc += Complex64::new(s.i, s.q);
                count += 1;
            }
        }
        acc / count as f64
    };
    let c0 = mean_iq(QubitState::Ground);
    let c1 = mean_iq(QubitState::Excited);
    let rotation_rad = -(c1 - c0).arg();
    let rot = Complex64::from_polar(1.0, rotation_rad);
    // Projected per-state samples after rotation.
    let project = |state: QubitState| -> Vec<f64> {
        e.shots
            .iter()
            .filter(|s| s.prepared == state)
            .map(|s| (rot * Complex64::new(s.i, s.q)).re)
            .collect()
    };
    let x0 = project(QubitState::Ground);
    let x1 = project(QubitState::Excited);
    let moments = |x: &[f64]| -> (f64, f64) {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        if x.len() < 2 {
            return (m, 0.0);
        }
        let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64;
        (m, v.sqrt())
    };
    let (i0, sigma0) = moments(&x0);
    let (i1, sigma1) = moments(&x1);
    let mu = (i1 - i0).abs();
    let sigma_t = sigma0.hypot(sigma1);
    if sigma_t == 0.0 && mu == 0.0 {
        return Err(FitError::Degenerate("ensemble has zero spread and zero separation".into())
            .into());
    }
    let snr = if sigma_t > 0.0 { mu / sigma_t } else { f64::INFINITY };
    let threshold = match rule {
        ThresholdRule::Midpoint => 0.5 * (i0 + i1),
        ThresholdRule::MaxLikelihood => max_likelihood_threshold(i0, sigma0, i1, sigma1),
    };
    // After rotation the excited mean sits at higher I by construction.
    let p10 = x0.iter().filter(|&&x| x > threshold).count() as f64 / x0.len() as f64;
    let p01 = x1.iter().filter(|&&x| x <= threshold).count() as f64 / x1.len() as f64;
    Ok(ReadoutStats {
        rotation_rad,
        i0,
        i1,
        sigma0,
        sigma1,
        mu,
        sigma_t,
        snr,
        threshold,
        p01,
        p10,
        fidelity: 1.0 - 0.5 * (p01 + p10),
        n_shots: e.shots.len(),
    })
}

/// Equal-likelihood boundary of two Gaussians with `i0 < i1`.
fn max_likelihood_threshold(i0: f64, sigma0: f64, i1: f64, sigma1: f64) -> f64 {
    let midpoint = 0.5 * (i0 + i1);
    if sigma0 <= 0.0 || sigma1 <= 0.0 || (sigma0 - sigma1).abs() < 1e-12 * sigma_t_of(sigma0, sigma1)
    {
        return midpoint;
    }
    // (x-i0)²/σ0² + 2 ln σ0 = (x-i1)²/σ1² + 2 ln σ1, a quadratic in x.
    let (v0, v1) = (sigma0 * sigma0, sigma1 * sigma1);
    let a = 1.0 / v0 - 1.0 / v1;
    let b = -2.0 * (i0 / v0 - i1 / v1);
    let c = i0 * i0 / v0 - i1 * i1 / v1 + 2.0 * (sigma0 / sigma1).ln();
    let disc = b * b - 4.0 * a * c;
    if disc <= 0.0 {
        return midpoint;
    }
    let sq = disc.sqrt();
    let roots = [(-b + sq) / (2.0 * a), (-b - sq) / (2.0 * a)];
    // Use the root between the means; otherwise the clouds barely overlap
    // and the midpoint is as good as any boundary.
    roots
        .into_iter()
        .find(|r| *r > i0.min(i1) && *r < i0.max(i1))
        .unwrap_or(midpoint)
}

fn sigma_t_of(sigma0: f64, sigma1: f64) -> f64 {
    sigma0.hypot(sigma1).max(f64::MIN_POSITIVE)
}

/// Equal-σ Gaussian closure: fidelity of an ideal midpoint classifier at a
/// given SNR, `F = 1 - Q(snr/√2) = 1 - erfc(snr/2)/2`. Strictly increasing.
pub fn analytic_fidelity(snr: f64) -> Result<f64> {
    if !(snr >= 0.0) {
        return Err(Error::invalid("snr must be non-negative"));
    }
    Ok(1.0 - 0.5 * erfc(snr / 2.0))
}

/// Deterministic SNR of the generative model for the given settings — the
/// value [`simulate_shots`] converges to as the shot count grows.
pub fn expected_snr(
    p: &CavityQubitParams,
    chain: &SystemNoiseResult,
    tau_s: f64,
    opts: &ShotOptions,
) -> Result<f64> {
    p.validate()?;
    if !(tau_s > 0.0) {
        return Err(Error::invalid("integration time must be positive"));
    }
    let f_ro = opts.readout_freq_hz.unwrap_or(p.f_res_hz - p.chi_hz);
    let m0 = mean_point(p, f_ro, opts.readout_photons, QubitState::Ground);
    let m1 = mean_point(p, f_ro, opts.readout_photons, QubitState::Excited);
    let sigma = quadrature_sigma(chain, opts.measurement_rate_hz, tau_s);
    if sigma == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((m1 - m0).norm() / (std::f64::consts::SQRT_2 * sigma))
}

/// Added-quanta level that makes the generative model hit `target_snr`
/// exactly (in expectation) at the given settings. Errors when even vacuum
/// noise (−1/2... i.e. `N_added = -0.5`) would leave the SNR below target.
pub fn added_quanta_for_target_snr(
    p: &CavityQubitParams,
    target_snr: f64,
    tau_s: f64,
    opts: &ShotOptions,
) -> Result<f64> {
    p.validate()?;
    if !(target_snr > 0.0) {
        return Err(Error::invalid("target snr must be positive"));
    }
    let f_ro = opts.readout_freq_hz.unwrap_or(p.f_res_hz - p.chi_hz);
    let m0 = mean_point(p, f_ro, opts.readout_photons, QubitState::Ground);
    let m1 = mean_point(p, f_ro, opts.readout_photons, QubitState::Excited);
    let mu = (m1 - m0).norm();
    // snr = mu/(√2 σ) with σ² = (N+1/2)/(2·rate·τ) solves to
    // N = rate·τ·mu²/snr² - 1/2.
    let n = opts.measurement_rate_hz * tau_s * mu * mu / (target_snr * target_snr) - 0.5;
    if n < -0.5 {
        return Err(Error::invalid(format!(
            "target snr {target_snr} unreachable: needs added noise {n:.3} < -1/2"
        )));
    }
    Ok(n)
}

/// Plot-ready per-state histogram over the rotated quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_centers: Vec<f64>,
    pub count_state0: Vec<u64>,
    pub count_state1: Vec<u64>,
}

/// Histogram the rotated I quadrature with `n_bins` equal bins spanning the
/// full ensemble.
pub fn histogram(e: &ShotEnsemble, stats: &ReadoutStats, n_bins: usize) -> Result<Histogram> {
    e.validate()?;
    if n_bins < 2 {
        return Err(Error::invalid("need at least two bins"));
    }
    let rot = Complex64::from_polar(1.0, stats.rotation_rad);
    let xs: Vec<(f64, QubitState)> = e
        .shots
        .iter()
        .map(|s| ((rot * Complex64::new(s.i, s.q)).re, s.prepared))
        .collect();
    let lo = xs.iter().map(|(x, _)| *x).fold(f64::INFINITY, f64::min);
    let hi = xs.iter().map(|(x, _)| *x).fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / n_bins as f64 } else { 1.0 };
    let mut count_state0 = vec![0u64; n_bins];
    let mut count_state1 = vec![0u64; n_bins];
    for (x, state) in xs {
        let idx = (((x - lo) / width) as usize).min(n_bins - 1);
        match state {
            QubitState::Ground => count_state0[idx] += 1,
            QubitState::Excited => count_state1[idx] += 1,
        }
    }
    let bin_centers = (0..n_bins).map(|i| lo + (i as f64 + 0.5) * width).collect();
    Ok(Histogram { bin_centers, count_state0, count_state1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn qubit1() -> CavityQubitParams {
        CavityQubitParams {
            f_res_hz: 7.218e9,
            q_c: 7136.0,
            q_int: f64::INFINITY,
            chi_hz: 135e3,
            f_q_hz: 4.730e9,
            qubit_linewidth_hz: 300e3,
            asymmetry_rad: 0.0,
        }
    }

    fn chain_with_quanta(n_added: f64) -> SystemNoiseResult {
        SystemNoiseResult::from_added_quanta(7.218e9 - 135e3, 95.0, n_added).unwrap()
    }

    /// Options yielding an exact target SNR in expectation.
    fn opts_for_snr(target: f64, seed: u64) -> (SystemNoiseResult, ShotOptions, f64) {
        let tau = 1e-6;
        let opts = ShotOptions { seed, ..Default::default() };
        let n = added_quanta_for_target_snr(&qubit1(), target, tau, &opts).unwrap();
        (chain_with_quanta(n), opts, tau)
    }

    #[test]
    fn arithmetic_example_unit_sigma() {
        // Two shots per state at ±1 ∓ d with d = 1/√2 give per-state sample
        // σ = 1, so mu = 2, σ_T = √2, snr = √2.
        let d = 1.0 / std::f64::consts::SQRT_2;
        let mk = |i: f64, s: QubitState| Shot { i, q: 0.0, prepared: s };
        let e = ShotEnsemble {
            shots: vec![
                mk(-1.0 - d, QubitState::Ground),
                mk(-1.0 + d, QubitState::Ground),
                mk(1.0 - d, QubitState::Excited),
                mk(1.0 + d, QubitState::Excited),
            ],
            integration_time_s: 1e-6,
            readout_freq_hz: 7.2e9,
            seed: 0,
        };
        let st = rotate_and_fit(&e).unwrap();
        assert_relative_eq!(st.mu, 2.0, epsilon = 1e-12);
        assert_relative_eq!(st.sigma_t, std::f64::consts::SQRT_2, epsilon = 1e-12);
        assert_relative_eq!(st.snr, std::f64::consts::SQRT_2, epsilon = 1e-12);
        assert_relative_eq!(st.fidelity, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rotation_and_scale_invariance() {
        let (chain, opts, tau) = opts_for_snr(2.0, 5);
        let e = simulate_shots(&qubit1(), &chain, 20_000, tau, &opts).unwrap();
        let st = rotate_and_fit(&e).unwrap();
        // Rotate every shot by 37° and scale by 3: snr must not move.
        let rot = Complex64::from_polar(3.0, 37f64.to_radians());
        let e2 = ShotEnsemble {
            shots: e
                .shots
                .iter()
                .map(|s| {
                    let z = rot * Complex64::new(s.i, s.q);
                    Shot { i: z.re, q: z.im, prepared: s.prepared }
                })
                .collect(),
            ..e.clone()
        };
        let st2 = rotate_and_fit(&e2).unwrap();
        assert_relative_eq!(st.snr, st2.snr, max_relative = 1e-9);
        assert_relative_eq!(st.fidelity, st2.fidelity, epsilon = 1e-12);
    }

    #[test]
    fn separation_along_q_rotates_into_i() {
        // Hand-built clouds split purely along Q.
        let mut shots = Vec::new();
        for k in 0..2000 {
            let x = ((k * 37 % 101) as f64 / 101.0 - 0.5) * 0.1;
            let (q, s) = if k % 2 == 0 {
                (-1.0 + x, QubitState::Ground)
            } else {
                (1.0 + x, QubitState::Excited)
            };
            shots.push(Shot { i: 0.3 * x, q, prepared: s });
        }
        let e = ShotEnsemble {
            shots,
            integration_time_s: 1e-6,
            readout_freq_hz: 7.2e9,
            seed: 0,
        };
        let st = rotate_and_fit(&e).unwrap();
        assert!(st.mu > 1.9, "separation must survive rotation, mu = {}", st.mu);
        assert_relative_eq!(st.fidelity, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn snr_estimator_consistent_with_generative_truth() {
        let (chain, opts, tau) = opts_for_snr(2.0, 11);
        let e = simulate_shots(&qubit1(), &chain, 100_000, tau, &opts).unwrap();
        let st = rotate_and_fit(&e).unwrap();
        // Standard error of the SNR estimate at n = 1e5 is ~0.5%.
        let se = 2.0 * (2.5 / 1e5f64).sqrt();
        assert!((st.snr - 2.0).abs() < 3.0 * se, "snr {} vs 2.0 ± {}", st.snr, 3.0 * se);
        let exp = expected_snr(&qubit1(), &chain, tau, &opts).unwrap();
        assert_relative_eq!(exp, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn analytic_fidelity_known_values() {
        assert_relative_eq!(analytic_fidelity(0.0).unwrap(), 0.5, epsilon = 1e-15);
        assert!(analytic_fidelity(50.0).unwrap() > 1.0 - 1e-12);
        // erfc oracle values.
        assert_relative_eq!(
            analytic_fidelity(2.0 * std::f64::consts::SQRT_2).unwrap(),
            0.977_249_868_051_820_8,
            epsilon = 1e-12
        );
        assert_relative_eq!(analytic_fidelity(0.5).unwrap(), 0.638_163_195_1, epsilon = 1e-9);
        assert_relative_eq!(analytic_fidelity(1.0).unwrap(), 0.760_249_938_9, epsilon = 1e-9);
        assert_relative_eq!(analytic_fidelity(2.0).unwrap(), 0.921_350_396_5, epsilon = 1e-9);
        assert_relative_eq!(analytic_fidelity(3.0).unwrap(), 0.983_052_573_2, epsilon = 1e-9);
        // Strictly increasing.
        let mut last = 0.0;
        for k in 1..=60 {
            let f = analytic_fidelity(k as f64 * 0.1).unwrap();
            assert!(f > last);
            last = f;
        }
    }

    #[test]
    fn monte_carlo_matches_analytic_across_snr_grid() {
        for (idx, target) in [0.5, 1.0, 2.0, 3.0].into_iter().enumerate() {
            let (chain, opts, tau) = opts_for_snr(target, 100 + idx as u64);
            let n = 100_000;
            let e = simulate_shots(&qubit1(), &chain, n, tau, &opts).unwrap();
            let st = fidelity(&e, ThresholdRule::Midpoint).unwrap();
            let f_true = analytic_fidelity(target).unwrap();
            let band = 3.0 * (f_true * (1.0 - f_true) / n as f64).sqrt();
            assert!(
                (st.fidelity - f_true).abs() < band,
                "snr {target}: fidelity {} vs {f_true} ± {band}",
                st.fidelity
            );
        }
    }

    #[test]
    fn snr_ratio_follows_sqrt_noise_temperature_ratio() {
        // Two chains whose noise temperatures differ by 2.1025: the SNRs
        // must differ by √2.1025 = 1.45 (exactly, in expectation).
        let p = qubit1();
        let tau = 1e-6;
        let opts = ShotOptions { seed: 21, ..Default::default() };
        let quiet = chain_with_quanta(2.0);
        // T ∝ N + 1/2 exactly, so scale (N+1/2) by the temperature ratio.
        let loud_n = 2.1025 * (2.0 + 0.5) - 0.5;
        let loud = chain_with_quanta(loud_n);
        let e_hot = simulate_shots(&p, &loud, 100_000, tau, &opts).unwrap();
        let e_cold =
            simulate_shots(&p, &quiet, 100_000, tau, &ShotOptions { seed: 22, ..opts }).unwrap();
        let r = rotate_and_fit(&e_cold).unwrap().snr / rotate_and_fit(&e_hot).unwrap().snr;
        assert!((r - 1.45).abs() < 0.05 * 1.45, "snr ratio {r} vs 1.45 ± 5%");
        // The generative-model ratio is exact.
        let exact = expected_snr(&p, &quiet, tau, &opts).unwrap()
            / expected_snr(&p, &loud, tau, &opts).unwrap();
        assert_relative_eq!(exact, 1.45, max_relative = 1e-12);
    }

    #[test]
    fn infinite_noise_washes_out_information() {
        let p = qubit1();
        let chain = chain_with_quanta(1e9);
        let e = simulate_shots(&p, &chain, 100_000, 1e-6, &ShotOptions::default()).unwrap();
        let st = rotate_and_fit(&e).unwrap();
        assert!(st.snr < 0.02, "snr {} should vanish", st.snr);
        assert!((st.fidelity - 0.5).abs() < 0.01, "fidelity {} should sit at chance", st.fidelity);
    }

    #[test]
    fn relaxation_skews_excited_state_and_costs_fidelity() {
        let (chain, opts, tau) = opts_for_snr(3.0, 31);
        let opts = ShotOptions { relaxation_prob: 0.15, ..opts };
        let e = simulate_shots(&qubit1(), &chain, 100_000, tau, &opts).unwrap();
        let st = rotate_and_fit(&e).unwrap();
        // Excited-state skew points toward the ground cloud (negative side).
        let rot = Complex64::from_polar(1.0, st.rotation_rad);
        let x1: Vec<f64> = e
            .shots
            .iter()
            .filter(|s| s.prepared == QubitState::Excited)
            .map(|s| (rot * Complex64::new(s.i, s.q)).re)
            .collect();
        let m = x1.iter().sum::<f64>() / x1.len() as f64;
        let sd = (x1.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / x1.len() as f64).sqrt();
        let skew = x1.iter().map(|x| ((x - m) / sd).powi(3)).sum::<f64>() / x1.len() as f64;
        assert!(skew < -0.5, "excited cloud should have a tail toward ground, skew {skew}");
        // And the fidelity sits strictly below the ideal-Gaussian value.
        let ideal = analytic_fidelity(3.0).unwrap();
        assert!(
            st.fidelity < ideal - 0.01,
            "relaxation must cost fidelity: {} vs ideal {ideal}",
            st.fidelity
        );
        // Unequal widths: the max-likelihood boundary recovers part of it.
        let ml = fidelity(&e, ThresholdRule::MaxLikelihood).unwrap();
        assert!(ml.sigma1 > ml.sigma0);
        assert!(ml.fidelity >= st.fidelity - 2e-3, "ml {} vs midpoint {}", ml.fidelity, st.fidelity);
    }

    #[test]
    fn max_likelihood_beats_midpoint_for_unequal_widths() {
        // Hand-built Gaussian clouds with σ0 ≠ σ1.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut shots = Vec::with_capacity(100_000);
        for k in 0..100_000 {
            let z: f64 = StandardNormal.sample(&mut rng);
            let s = if k % 2 == 0 {
                Shot { i: -1.0 + 0.4 * z, q: 0.0, prepared: QubitState::Ground }
            } else {
                Shot { i: 1.0 + 1.3 * z, q: 0.0, prepared: QubitState::Excited }
            };
            shots.push(s);
        }
        let e = ShotEnsemble {
            shots,
            integration_time_s: 1e-6,
            readout_freq_hz: 7.2e9,
            seed: 17,
        };
        let mid = fidelity(&e, ThresholdRule::Midpoint).unwrap();
        let ml = fidelity(&e, ThresholdRule::MaxLikelihood).unwrap();
        assert!(
            ml.fidelity >= mid.fidelity,
            "ml {} should beat midpoint {}",
            ml.fidelity,
            mid.fidelity
        );
        assert!(ml.threshold < mid.threshold, "boundary should shift toward the narrow cloud");
    }

    #[test]
    fn deterministic_and_chunk_invariant() {
        let (chain, opts, tau) = opts_for_snr(2.0, 3);
        let a = simulate_shots(&qubit1(), &chain, 5000, tau, &opts).unwrap();
        let b = simulate_shots(&qubit1(), &chain, 5000, tau, &opts).unwrap();
        assert_eq!(a, b, "same seed must reproduce shots bit for bit");
        let c = simulate_shots(&qubit1(), &chain, 5000, tau, &ShotOptions { chunk: 7, ..opts })
            .unwrap();
        assert_eq!(a, c, "chunk size must not affect the ensemble");
        let d = simulate_shots(&qubit1(), &chain, 5000, tau, &ShotOptions { seed: 99, ..opts })
            .unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn input_validation() {
        let p = qubit1();
        let chain = chain_with_quanta(2.0);
        assert!(simulate_shots(&p, &chain, 1, 1e-6, &ShotOptions::default()).is_err());
        assert!(simulate_shots(&p, &chain, 100, 0.0, &ShotOptions::default()).is_err());
        let bad = ShotOptions { relaxation_prob: 1.5, ..Default::default() };
        assert!(simulate_shots(&p, &chain, 100, 1e-6, &bad).is_err());
        // Single-state ensembles are rejected at analysis time.
        let e = ShotEnsemble {
            shots: vec![
                Shot { i: 0.0, q: 0.0, prepared: QubitState::Ground },
                Shot { i: 1.0, q: 0.0, prepared: QubitState::Ground },
            ],
            integration_time_s: 1e-6,
            readout_freq_hz: 7.2e9,
            seed: 0,
        };
        assert!(rotate_and_fit(&e).is_err());
        // All-identical shots cannot be analyzed.
        let e = ShotEnsemble {
            shots: vec![
                Shot { i: 0.5, q: 0.5, prepared: QubitState::Ground },
                Shot { i: 0.5, q: 0.5, prepared: QubitState::Excited },
            ],
            integration_time_s: 1e-6,
            readout_freq_hz: 7.2e9,
            seed: 0,
        };
        assert!(matches!(rotate_and_fit(&e), Err(Error::Fit(FitError::Degenerate(_)))));
    }

    #[test]
    fn histogram_partitions_all_shots() {
        let (chain, opts, tau) = opts_for_snr(2.0, 8);
        let e = simulate_shots(&qubit1(), &chain, 10_000, tau, &opts).unwrap();
        let st = rotate_and_fit(&e).unwrap();
        let h = histogram(&e, &st, 64).unwrap();
        assert_eq!(h.bin_centers.len(), 64);
        let n0: u64 = h.count_state0.iter().sum();
        let n1: u64 = h.count_state1.iter().sum();
        assert_eq!(n0 + n1, 10_000);
        assert_eq!(n0, 5000, "alternating preparation splits evenly");
        // Counts concentrate around the two means, not the edges.
        assert!(h.count_state0[0] + h.count_state1[63] < 50);
    }
}
