//! Cavity–qubit forward model: notch-resonator transmission, the
//! photon-number ↔ drive-power conversion at the cavity port, the linear ac
//! Stark shift, and synthetic Stark-spectroscopy maps used to exercise the
//! calibration fits.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::rfchain::dbm_to_watts;

use num_complex::Complex64;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Fixed parameters of one readout cavity and its qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityQubitParams {
    /// Bare (qubit in ground state) cavity resonance [Hz].
    pub f_res_hz: f64,
    /// Coupling (external) quality factor.
    pub q_c: f64,
    /// Internal quality factor. `f64::INFINITY` models a lossless cavity.
    pub q_int: f64,
    /// Dispersive shift χ [Hz]; the cavity moves by 2χ between qubit states.
    pub chi_hz: f64,
    /// Bare qubit transition frequency [Hz].
    pub f_q_hz: f64,
    /// Zero-power qubit linewidth [Hz] (FWHM of the spectroscopy response).
    pub qubit_linewidth_hz: f64,
    /// Impedance-mismatch rotation of the notch lineshape [rad].
    #[serde(default)]
    pub asymmetry_rad: f64,
}

impl CavityQubitParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_res_hz > 0.0) || !self.f_res_hz.is_finite() {
            return Err(Error::invalid("cavity frequency must be positive and finite"));
        }
        if !(self.q_c > 0.0) || !(self.q_int > 0.0) {
            return Err(Error::invalid("quality factors must be positive"));
        }
        if !(self.chi_hz > 0.0) {
            return Err(Error::invalid("dispersive shift must be positive"));
        }
        if !(self.f_q_hz > 0.0) || self.f_q_hz >= self.f_res_hz {
            return Err(Error::invalid("qubit frequency must sit below the cavity"));
        }
        if !(self.qubit_linewidth_hz > 0.0) {
            return Err(Error::invalid("qubit linewidth must be positive"));
        }
        Ok(())
    }

    /// Total (loaded) quality factor `Q = (1/Q_c + 1/Q_int)^-1`.
    pub fn q_total(&self) -> f64 {
        1.0 / (1.0 / self.q_c + 1.0 / self.q_int)
    }

    /// Loaded cavity linewidth `f_res / Q` [Hz].
    pub fn cavity_fwhm_hz(&self) -> f64 {
        self.f_res_hz / self.q_total()
    }
}

/// Qubit computational state, which selects the cavity pull.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QubitState {
    Ground,
    Excited,
}

impl QubitState {
    /// 0 for ground, 1 for excited (the CSV/label convention).
    pub fn index(self) -> usize {
        match self {
            QubitState::Ground => 0,
            QubitState::Excited => 1,
        }
    }

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            0 => Ok(QubitState::Ground),
            1 => Ok(QubitState::Excited),
            _ => Err(Error::data(format!("qubit state index {i} not in {{0,1}}"))),
        }
    }

    /// State-dependent cavity center: `f_res` for ground, `f_res - 2χ` for
    /// excited (the dispersive pull moves the cavity down).
    pub fn cavity_center_hz(self, p: &CavityQubitParams) -> f64 {
        match self {
            QubitState::Ground => p.f_res_hz,
            QubitState::Excited => p.f_res_hz - 2.0 * p.chi_hz,
        }
    }
}

/// Which quality factor enters the photon-number/power conversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QFactorMode {
    /// Full expression with the coupling fraction `Q_c/Q²`.
    Exact,
    /// The `Q = Q_c` simplification, `1/Q_c`; the usual calibration choice
    /// when the internal quality factor is only loosely bounded.
    #[default]
    CouplingOnly,
}

/// Complex feedline transmission past the notch resonator.
///
/// `S21(f) = 1 - (Q/Q_c)·e^{iφ} / (1 + 2iQ·(f - f_center)/f_res)` with the
/// state-dependent center from [`QubitState::cavity_center_hz`]. The
/// linewidth normalization always uses the bare `f_res`, so the excited-state
/// trace is an exact translation of the ground-state trace by `-2χ`.
pub fn s21(p: &CavityQubitParams, f_hz: f64, state: QubitState) -> Complex64 {
    let q = p.q_total();
    let depth = Complex64::from_polar(q / p.q_c, p.asymmetry_rad);
    let delta = f_hz - state.cavity_center_hz(p);
    let denom = Complex64::new(1.0, 2.0 * q * delta / p.f_res_hz);
    Complex64::new(1.0, 0.0) - depth / denom
}

/// Drive power at the cavity port sustaining a mean photon number `n` [W]:
/// `P = (Q_c/Q²)·n·ħω²/2` with `ω = 2πf_res`, or `n·ħω²/(2Q_c)` in
/// [`QFactorMode::CouplingOnly`].
pub fn cavity_power(p: &CavityQubitParams, n: f64, mode: QFactorMode) -> f64 {
    debug_assert!(n >= 0.0, "photon number must be non-negative");
    let omega = TWO_PI * p.f_res_hz;
    let q_coef = match mode {
        QFactorMode::Exact => {
            let q = p.q_total();
            p.q_c / (q * q)
        }
        QFactorMode::CouplingOnly => 1.0 / p.q_c,
    };
    q_coef * n * HBAR * omega * omega / 2.0
}

/// Exact inverse of [`cavity_power`]: mean photon number at a given cavity
/// port power [W].
pub fn photons_from_power(p: &CavityQubitParams, power_w: f64, mode: QFactorMode) -> f64 {
    debug_assert!(power_w >= 0.0, "power must be non-negative");
    power_w / cavity_power(p, 1.0, mode)
}

/// Stark-shifted qubit frequency at mean cavity occupation `n` (linear
/// regime): `f_q(n) = f_q - 2χ·n`. The shift is toward lower frequency.
pub fn stark_shifted_freq(p: &CavityQubitParams, n: f64) -> f64 {
    debug_assert!(n >= 0.0, "photon number must be non-negative");
    p.f_q_hz - 2.0 * p.chi_hz * n
}

/// Knobs for [`synth_stark_map`] beyond the axes and noise level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarkSynthOptions {
    /// Power-broadening coefficient: linewidth grows by this much per photon
    /// [Hz/photon].
    pub broadening_hz_per_photon: f64,
    /// Largest photon number still treated as the linear Stark regime;
    /// synthesizing past it is an input error.
    pub n_linear_max: f64,
    /// Quality-factor convention for the photon-number conversion.
    pub q_mode: QFactorMode,
    pub seed: u64,
}

impl Default for StarkSynthOptions {
    fn default() -> Self {
        StarkSynthOptions {
            broadening_hz_per_photon: 5e4,
            n_linear_max: 100.0,
            q_mode: QFactorMode::CouplingOnly,
            seed: 0,
        }
    }
}

/// Two-tone Stark-spectroscopy map: qubit response vs (readout generator
/// power, qubit drive frequency).
#[derive(Debug, Clone, PartialEq)]
pub struct StarkMap {
    /// Readout generator powers, strictly increasing [dBm].
    pub readout_powers_dbm: Vec<f64>,
    /// Qubit drive frequencies, strictly increasing [Hz].
    pub qubit_drive_freqs_hz: Vec<f64>,
    /// Response magnitude, row `i` = power slice `i`, column `j` = drive
    /// frequency `j`.
    pub response: Array2<f64>,
    /// Parameters the map was built with (or fitted independently for lab
    /// data); the calibration uses `f_q` and the power conversion from here.
    pub params: CavityQubitParams,
}

impl StarkMap {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.response.nrows() != self.readout_powers_dbm.len()
            || self.response.ncols() != self.qubit_drive_freqs_hz.len()
        {
            return Err(Error::data(format!(
                "response shape {:?} does not match axes {} x {}",
                self.response.dim(),
                self.readout_powers_dbm.len(),
                self.qubit_drive_freqs_hz.len()
            )));
        }
        if !self.readout_powers_dbm.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::data("readout powers must be strictly increasing"));
        }
        if !self.qubit_drive_freqs_hz.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::data("drive frequencies must be strictly increasing"));
        }
        Ok(())
    }
}

/// Normalized Lorentzian spectroscopy peak of FWHM `width` centered at `c`.
fn lorentzian_peak(f: f64, c: f64, width: f64) -> f64 {
    let u = 2.0 * (f - c) / width;
    1.0 / (1.0 + u * u)
}

/// Synthesize a Stark map: each power slice is a unit-amplitude Lorentzian
/// centered at the Stark-shifted qubit frequency for the cavity occupation
/// that slice's power produces after `attenuation_db` (generator plane minus
/// cavity plane), with width `linewidth + broadening·n` and additive Gaussian
/// noise of standard deviation `noise_level`. Deterministic under the seed,
/// independent of thread scheduling (one RNG stream per slice).
pub fn synth_stark_map(
    p: &CavityQubitParams,
    attenuation_db: f64,
    power_axis_dbm: &[f64],
    freq_axis_hz: &[f64],
    noise_level: f64,
    opts: &StarkSynthOptions,
) -> Result<StarkMap> {
    p.validate()?;
    if power_axis_dbm.is_empty() || freq_axis_hz.is_empty() {
        return Err(Error::invalid("stark map axes must be non-empty"));
    }
    if !power_axis_dbm.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::invalid("power axis must be strictly increasing"));
    }
    if !freq_axis_hz.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::invalid("frequency axis must be strictly increasing"));
    }
    if noise_level < 0.0 {
        return Err(Error::invalid("noise level must be >= 0"));
    }
    if !attenuation_db.is_finite() {
        return Err(Error::invalid("attenuation must be finite"));
    }
    // Photon number per slice; reject powers outside the linear Stark model.
    let mut occupations = Vec::with_capacity(power_axis_dbm.len());
    for &p_gen in power_axis_dbm {
        let p_cav_w = dbm_to_watts(p_gen - attenuation_db)?;
        let n = photons_from_power(p, p_cav_w, opts.q_mode);
        if n > opts.n_linear_max {
            return Err(Error::invalid(format!(
                "generator power {p_gen} dBm drives {n:.1} photons, beyond the \
                 linear-regime bound {}",
                opts.n_linear_max
            )));
        }
        occupations.push(n);
    }
    let ncols = freq_axis_hz.len();
    let rows: Vec<Vec<f64>> = occupations
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(i as u64 + 1);
            let center = stark_shifted_freq(p, n);
            let width = p.qubit_linewidth_hz + opts.broadening_hz_per_photon * n;
            freq_axis_hz
                .iter()
                .map(|&f| {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    lorentzian_peak(f, center, width) + noise_level * noise
                })
                .collect()
        })
        .collect();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let response = Array2::from_shape_vec((power_axis_dbm.len(), ncols), flat)
        .expect("row-major assembly matches axes");
    let map = StarkMap {
        readout_powers_dbm: power_axis_dbm.to_vec(),
        qubit_drive_freqs_hz: freq_axis_hz.to_vec(),
        response,
        params: *p,
    };
    map.validate()?;
    Ok(map)
}
