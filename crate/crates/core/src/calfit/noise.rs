//! System gain and added-noise extraction from spectrum-analyzer traces:
//! a calibrated on-chip tone fixes the end-to-end gain, and the measured
//! noise floor referred back through that gain gives the added quanta.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::calfit::stark::StarkCalibration;
use crate::constants::{HBAR, K_B};
use crate::error::{Error, FitError, Result};
use crate::rfchain::{dbm_to_watts, psd_to_added_quanta, watts_to_dbm};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Spectrum-analyzer trace: power per resolution bandwidth vs frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SaTrace {
    pub freqs_hz: Vec<f64>,
    pub power_dbm: Vec<f64>,
}

impl SaTrace {
    pub fn validate(&self) -> Result<()> {
        if self.freqs_hz.len() != self.power_dbm.len() {
            return Err(Error::data(format!(
                "trace axes disagree: {} frequencies vs {} powers",
                self.freqs_hz.len(),
                self.power_dbm.len()
            )));
        }
        if self.freqs_hz.len() < 3 {
            return Err(Error::data("spectrum trace needs at least three points"));
        }
        if !self.freqs_hz.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::data("trace frequencies must be strictly increasing"));
        }
        Ok(())
    }
}

/// Synthetic spectrum-analyzer trace: a flat noise floor with per-bin
/// Gaussian jitter (in dB) and a single tone added in linear power at the
/// bin nearest `tone_freq_hz`.
pub fn synth_sa_trace(
    freqs: &[f64],
    tone_freq_hz: f64,
    tone_power_dbm: f64,
    floor_dbm: f64,
    jitter_db: f64,
    seed: u64,
) -> Result<SaTrace> {
    if jitter_db < 0.0 {
        return Err(Error::invalid("jitter must be >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tone_idx = freqs
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - tone_freq_hz).abs().total_cmp(&(b.1 - tone_freq_hz).abs()))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::invalid("frequency axis is empty"))?;
    let mut power_dbm = Vec::with_capacity(freqs.len());
    for (i, _) in freqs.iter().enumerate() {
        let z: f64 = StandardNormal.sample(&mut rng);
        let mut p_w = dbm_to_watts(floor_dbm + jitter_db * z)?;
        if i == tone_idx {
            p_w += dbm_to_watts(tone_power_dbm)?;
        }
        power_dbm.push(watts_to_dbm(p_w)?);
    }
    let trace = SaTrace { freqs_hz: freqs.to_vec(), power_dbm };
    trace.validate()?;
    Ok(trace)
}

/// End-to-end gain extracted from a calibrated tone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemGain {
    /// `sa_tone_power - (tone_gen_power - attenuation)` [dB].
    pub g_sys_db: f64,
    /// Dominated by the attenuation calibration; the tone peak readout
    /// itself contributes negligibly once it clears the floor check.
    pub g_sys_sigma_db: f64,
    pub tone_freq_hz: f64,
    pub sa_tone_power_dbm: f64,
    pub sa_floor_dbm: f64,
}

/// Locate the tone peak and form the system gain. The on-chip tone power is
/// the generator power minus the calibrated attenuation.
pub fn extract_system_gain(
    trace: &SaTrace,
    cal: &StarkCalibration,
    tone_gen_power_dbm: f64,
) -> Result<SystemGain> {
    trace.validate()?;
    let (peak_idx, &peak_dbm) = trace
        .power_dbm
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    // Floor from the median of bins away from the peak.
    let mut floor_bins: Vec<f64> = trace
        .power_dbm
        .iter()
        .enumerate()
        .filter(|(i, _)| i.abs_diff(peak_idx) > 3)
        .map(|(_, &p)| p)
        .collect();
    if floor_bins.is_empty() {
        return Err(Error::data("trace too short to separate tone from floor"));
    }
    floor_bins.sort_by(f64::total_cmp);
    let floor_dbm = floor_bins[floor_bins.len() / 2];
    if peak_dbm < floor_dbm + 10.0 {
        return Err(FitError::PeakNotFound.into());
    }
    // The peak bin holds tone plus floor; subtract the floor in watts so a
    // modest tone-to-floor contrast does not bias the gain upward.
    let tone_dbm = watts_to_dbm(dbm_to_watts(peak_dbm)? - dbm_to_watts(floor_dbm)?)?;
    let on_chip_dbm = tone_gen_power_dbm - cal.attenuation_db;
    Ok(SystemGain {
        g_sys_db: tone_dbm - on_chip_dbm,
        g_sys_sigma_db: cal.uncertainty_db,
        tone_freq_hz: trace.freqs_hz[peak_idx],
        sa_tone_power_dbm: tone_dbm,
        sa_floor_dbm: floor_dbm,
    })
}

/// Noise floor measured at ± the given detuning from the tone: linear-power
/// average over a window on each side, with the standard error of the mean.
pub fn noise_floor_at_detuning(
    trace: &SaTrace,
    tone_freq_hz: f64,
    detuning_hz: f64,
    window_hz: f64,
) -> Result<(f64, f64)> {
    trace.validate()?;
    if detuning_hz <= 0.0 || window_hz <= 0.0 {
        return Err(Error::invalid("detuning and window must be positive"));
    }
    let mut bins_w = Vec::new();
    for sign in [-1.0, 1.0] {
        let center = tone_freq_hz + sign * detuning_hz;
        for (i, &f) in trace.freqs_hz.iter().enumerate() {
            if (f - center).abs() <= window_hz / 2.0 {
                bins_w.push(dbm_to_watts(trace.power_dbm[i])?);
            }
        }
    }
    if bins_w.len() < 2 {
        return Err(Error::data(format!(
            "no trace bins within ±{window_hz:.0} Hz of the ±{detuning_hz:.0} Hz offsets"
        )));
    }
    let mean = bins_w.iter().sum::<f64>() / bins_w.len() as f64;
    let var = bins_w.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>()
        / (bins_w.len() - 1) as f64;
    let sem_w = (var / bins_w.len() as f64).sqrt();
    let floor_dbm = watts_to_dbm(mean)?;
    // Standard error mapped to dB around the mean.
    let sigma_db = 10.0 * ((mean + sem_w) / mean).log10();
    Ok((floor_dbm, sigma_db))
}

/// Everything needed to refer the noise floor back to the chip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseMeasurement {
    pub tone_freq_hz: f64,
    pub sa_tone_power_dbm: f64,
    /// Noise floor in one resolution bandwidth [dBm].
    pub sa_noise_floor_dbm: f64,
    pub resolution_bw_hz: f64,
    pub detuning_hz: f64,
    pub g_sys_db: f64,
    pub g_sys_sigma_db: f64,
    pub floor_sigma_db: f64,
}

impl NoiseMeasurement {
    /// Conventional analyzer settings: 30 kHz resolution bandwidth, floor
    /// read 10 MHz off the tone.
    pub fn new(tone_freq_hz: f64, sa_tone_power_dbm: f64, sa_noise_floor_dbm: f64, g_sys_db: f64) -> Self {
        NoiseMeasurement {
            tone_freq_hz,
            sa_tone_power_dbm,
            sa_noise_floor_dbm,
            resolution_bw_hz: 30e3,
            detuning_hz: 10e6,
            g_sys_db,
            g_sys_sigma_db: 0.0,
            floor_sigma_db: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.resolution_bw_hz > 0.0) {
            return Err(Error::invalid("resolution bandwidth must be positive"));
        }
        if !(self.tone_freq_hz > 0.0) {
            return Err(Error::invalid("tone frequency must be positive"));
        }
        Ok(())
    }

    /// Input-referred noise temperature `P_SA/(G_sys·k_B·BW)` [K].
    pub fn noise_temperature_k(&self) -> Result<f64> {
        let p_w = dbm_to_watts(self.sa_noise_floor_dbm)?;
        let g = 10f64.powf(self.g_sys_db / 10.0);
        Ok(p_w / (g * K_B * self.resolution_bw_hz))
    }
}

/// Added noise with a Monte Carlo error bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AddedNoise {
    pub n_added: f64,
    pub sigma: f64,
    /// Excess over the half-quantum limit, `n_added - 1/2`.
    pub excess_n: f64,
    pub t_n_k: f64,
    pub t_n_sigma_k: f64,
}

/// Knobs for the added-noise Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseOptions {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for NoiseOptions {
    fn default() -> Self {
        NoiseOptions { resamples: 1000, seed: 0 }
    }
}

/// Refer the measured floor to the chip and convert to added quanta:
/// `N = (k_B·T_N - ħω/2)/(ħω)` with `T_N = P_SA/(G_sys·k_B·BW)`.
///
/// The error bar resamples the floor and gain by their sigmas (the gain
/// sigma carries the attenuation-calibration uncertainty). A result below
/// vacuum by more than 3σ is flagged as a calibration inconsistency.
pub fn extract_added_noise(m: &NoiseMeasurement, opts: &NoiseOptions) -> Result<AddedNoise> {
    m.validate()?;
    let t_n_k = m.noise_temperature_k()?;
    let n_added = psd_to_added_quanta(K_B * t_n_k, m.tone_freq_hz)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut samples_n = Vec::with_capacity(opts.resamples);
    let mut samples_t = Vec::with_capacity(opts.resamples);
    for _ in 0..opts.resamples {
        let zf: f64 = StandardNormal.sample(&mut rng);
        let zg: f64 = StandardNormal.sample(&mut rng);
        let floor = m.sa_noise_floor_dbm + m.floor_sigma_db * zf;
        let g_db = m.g_sys_db + m.g_sys_sigma_db * zg;
        let p_w = dbm_to_watts(floor)?;
        let t = p_w / (10f64.powf(g_db / 10.0) * K_B * m.resolution_bw_hz);
        samples_t.push(t);
        samples_n.push(psd_to_added_quanta(K_B * t, m.tone_freq_hz)?);
    }
    let std = |v: &[f64]| -> f64 {
        if v.len() < 2 {
            return 0.0;
        }
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    let sigma = std(&samples_n);
    let t_n_sigma_k = std(&samples_t);
    if n_added < 0.0 && n_added + 3.0 * sigma < 0.0 {
        return Err(FitError::BelowVacuum.into());
    }
    Ok(AddedNoise { n_added, sigma, excess_n: n_added - 0.5, t_n_k, t_n_sigma_k })
}

/// Floor power [dBm] a given input-referred noise temperature produces on the
/// analyzer; the forward direction of [`extract_added_noise`], used to build
/// synthetic traces.
pub fn floor_dbm_for_noise_temp(t_n_k: f64, g_sys_db: f64, resolution_bw_hz: f64) -> Result<f64> {
    if t_n_k <= 0.0 || resolution_bw_hz <= 0.0 {
        return Err(Error::invalid("temperature and bandwidth must be positive"));
    }
    watts_to_dbm(10f64.powf(g_sys_db / 10.0) * K_B * t_n_k * resolution_bw_hz)
}

/// Floor power [dBm] for a given added-quanta level at frequency `f_hz`;
/// inverse of the full extraction chain.
pub fn floor_dbm_for_added_quanta(
    n_added: f64,
    f_hz: f64,
    g_sys_db: f64,
    resolution_bw_hz: f64,
) -> Result<f64> {
    if n_added <= -0.5 {
        return Err(Error::invalid("added quanta must exceed -1/2"));
    }
    let psd = (n_added + 0.5) * HBAR * TWO_PI * f_hz;
    watts_to_dbm(10f64.powf(g_sys_db / 10.0) * psd * resolution_bw_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dummy_cal(attenuation_db: f64, uncertainty_db: f64) -> StarkCalibration {
        StarkCalibration {
            attenuation_db,
            p_gen_at_n1_dbm: attenuation_db - 138.0,
            p_cav_at_n1_dbm: -138.0,
            uncertainty_db,
            shift_curve: Vec::new(),
            resamples_used: 0,
        }
    }

    fn sa_axis() -> Vec<f64> {
        (0..801).map(|i| 6.5e9 - 20e6 + i as f64 * 50e3).collect()
    }

    #[test]
    fn gain_is_peak_minus_on_chip_power() {
        // On-chip tone at -140 dBm, analyzer peak at -45 dBm: 95 dB gain.
        let cal = dummy_cal(-110.0, 0.0);
        let tone_gen = -250.0; // -250 - (-110) = -140 dBm on chip
        let trace = synth_sa_trace(&sa_axis(), 6.5e9, -45.0, -80.0, 0.0, 0).unwrap();
        let g = extract_system_gain(&trace, &cal, tone_gen).unwrap();
        assert_relative_eq!(g.g_sys_db, 95.0, epsilon = 1e-2);
        assert_relative_eq!(g.sa_floor_dbm, -80.0, epsilon = 1e-9);
    }

    #[test]
    fn gain_roundtrip_with_noise() {
        let cal = dummy_cal(-110.0, 0.05);
        let tone_gen = -250.0;
        let trace = synth_sa_trace(&sa_axis(), 6.5e9, -45.0, -80.0, 0.2, 7).unwrap();
        let g = extract_system_gain(&trace, &cal, tone_gen).unwrap();
        assert!((g.g_sys_db - 95.0).abs() < 0.1, "got {}", g.g_sys_db);
        assert_relative_eq!(g.g_sys_sigma_db, 0.05, epsilon = 1e-12);
    }

    #[test]
    fn gain_is_linear_in_peak_power() {
        let cal = dummy_cal(-110.0, 0.0);
        let t1 = synth_sa_trace(&sa_axis(), 6.5e9, -45.0, -80.0, 0.0, 0).unwrap();
        let t2 = synth_sa_trace(&sa_axis(), 6.5e9, -35.0, -80.0, 0.0, 0).unwrap();
        let g1 = extract_system_gain(&t1, &cal, -250.0).unwrap();
        let g2 = extract_system_gain(&t2, &cal, -250.0).unwrap();
        assert_relative_eq!(g2.g_sys_db - g1.g_sys_db, 10.0, epsilon = 1e-2);
    }

    #[test]
    fn gain_invariant_under_joint_power_shift() {
        let cal = dummy_cal(-110.0, 0.0);
        let t1 = synth_sa_trace(&sa_axis(), 6.5e9, -45.0, -80.0, 0.0, 0).unwrap();
        let t2 = synth_sa_trace(&sa_axis(), 6.5e9, -38.0, -80.0, 0.0, 0).unwrap();
        let g1 = extract_system_gain(&t1, &cal, -250.0).unwrap();
        let g2 = extract_system_gain(&t2, &cal, -243.0).unwrap();
        assert_relative_eq!(g1.g_sys_db, g2.g_sys_db, epsilon = 1e-9);
    }

    #[test]
    fn buried_tone_reports_peak_not_found() {
        let cal = dummy_cal(-110.0, 0.0);
        let trace = synth_sa_trace(&sa_axis(), 6.5e9, -75.0, -80.0, 0.0, 0).unwrap();
        assert!(matches!(
            extract_system_gain(&trace, &cal, -250.0),
            Err(Error::Fit(FitError::PeakNotFound))
        ));
    }

    #[test]
    fn floor_at_detuning_averages_both_sides() {
        let trace = synth_sa_trace(&sa_axis(), 6.5e9, -45.0, -80.0, 0.0, 0).unwrap();
        let (floor, sigma) = noise_floor_at_detuning(&trace, 6.5e9, 10e6, 1e6).unwrap();
        assert_relative_eq!(floor, -80.0, epsilon = 1e-9);
        assert!(sigma < 1e-9);
        // Window that misses the trace entirely.
        assert!(noise_floor_at_detuning(&trace, 6.5e9, 200e6, 1e6).is_err());
    }

    #[test]
    fn half_quantum_at_vacuum_psd() {
        // Floor corresponding to an input PSD of exactly ħω: one half
        // quantum of added noise above the vacuum term.
        let f = 6.5e9;
        let floor = floor_dbm_for_added_quanta(0.5, f, 95.0, 30e3).unwrap();
        let m = NoiseMeasurement::new(f, -45.0, floor, 95.0);
        let out = extract_added_noise(&m, &NoiseOptions::default()).unwrap();
        assert_relative_eq!(out.n_added, 0.5, max_relative = 1e-10);
        assert_relative_eq!(out.excess_n, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn known_temperature_roundtrip() {
        // 1.72 K at 6.5 GHz is 5.0137 added quanta.
        let f = 6.5e9;
        let floor = floor_dbm_for_noise_temp(1.72, 95.0, 30e3).unwrap();
        let m = NoiseMeasurement::new(f, -45.0, floor, 95.0);
        let out = extract_added_noise(&m, &NoiseOptions::default()).unwrap();
        assert_relative_eq!(out.t_n_k, 1.72, max_relative = 1e-10);
        assert_relative_eq!(out.n_added, 5.013_689_986_781_9, max_relative = 1e-10);
    }

    #[test]
    fn uncertainties_propagate_and_shrink_with_input_sigma() {
        let f = 6.5e9;
        let floor = floor_dbm_for_noise_temp(1.72, 95.0, 30e3).unwrap();
        let mut m = NoiseMeasurement::new(f, -45.0, floor, 95.0);
        m.g_sys_sigma_db = 0.1;
        m.floor_sigma_db = 0.1;
        let wide = extract_added_noise(&m, &NoiseOptions::default()).unwrap();
        m.g_sys_sigma_db = 0.01;
        m.floor_sigma_db = 0.01;
        let tight = extract_added_noise(&m, &NoiseOptions::default()).unwrap();
        assert!(wide.sigma > tight.sigma);
        assert!(wide.sigma > 0.0);
        // ~0.14 dB total sigma is ~3.3% in linear power: the error bar
        // should sit near 3% of the quanta value.
        assert!((wide.sigma / wide.n_added) > 0.01 && (wide.sigma / wide.n_added) < 0.10);
    }

    #[test]
    fn below_vacuum_is_flagged() {
        let f = 6.5e9;
        // Claimed gain 20 dB above reality pushes the inferred PSD below
        // vacuum with zero error bar.
        let floor = floor_dbm_for_added_quanta(0.5, f, 95.0, 30e3).unwrap();
        let m = NoiseMeasurement::new(f, -45.0, floor, 115.0);
        assert!(matches!(
            extract_added_noise(&m, &NoiseOptions::default()),
            Err(Error::Fit(FitError::BelowVacuum))
        ));
    }

    #[test]
    fn added_noise_invariant_under_joint_gain_and_floor_shift() {
        // Moving the reference plane: floor and gain rise together, the
        // input-referred quanta stay put.
        let f = 6.5e9;
        let floor = floor_dbm_for_noise_temp(1.72, 95.0, 30e3).unwrap();
        let a = extract_added_noise(
            &NoiseMeasurement::new(f, -45.0, floor, 95.0),
            &NoiseOptions::default(),
        )
        .unwrap();
        let b = extract_added_noise(
            &NoiseMeasurement::new(f, -38.0, floor + 7.0, 102.0),
            &NoiseOptions::default(),
        )
        .unwrap();
        assert_relative_eq!(a.n_added, b.n_added, max_relative = 1e-9);
    }
}
