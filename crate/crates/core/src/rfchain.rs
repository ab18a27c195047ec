//! Cascaded amplifier-chain link budget.
//!
//! Unit conversions between power, power spectral density, noise temperature,
//! and photon quanta, plus Friis cascading of gain and noise with an explicit
//! reference plane (by default the on-chip cavity port, index 0).

use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, K_B};
use crate::error::{Error, Result};

/// Convert a power in dBm to watts: `p_W = 10^(p/10) * 1e-3`.
pub fn dbm_to_watts(p_dbm: f64) -> Result<f64> {
    if !p_dbm.is_finite() {
        return Err(Error::invalid(format!("non-finite power {p_dbm} dBm")));
    }
    Ok(1e-3 * 10f64.powf(p_dbm / 10.0))
}

/// Convert a power in watts to dBm. Requires `p_w > 0`.
pub fn watts_to_dbm(p_w: f64) -> Result<f64> {
    if !p_w.is_finite() || p_w <= 0.0 {
        return Err(Error::invalid(format!("power must be positive, got {p_w} W")));
    }
    Ok(10.0 * (p_w / 1e-3).log10())
}

/// dB to linear power ratio.
pub fn db_to_linear(g_db: f64) -> f64 {
    10f64.powf(g_db / 10.0)
}

/// Linear power ratio to dB.
pub fn linear_to_db(g: f64) -> f64 {
    10.0 * g.log10()
}

/// Added noise quanta above vacuum for a one-sided PSD at frequency `f_hz`:
/// `N = (psd - hbar*omega/2) / (hbar*omega)`, `omega = 2*pi*f`.
///
/// `psd = k_B * T_N` turns this into the noise-temperature form; the vacuum
/// PSD `hbar*omega/2` maps to exactly zero added quanta.
pub fn psd_to_added_quanta(psd_w_per_hz: f64, f_hz: f64) -> Result<f64> {
    if f_hz <= 0.0 || !f_hz.is_finite() {
        return Err(Error::invalid(format!("frequency must be positive, got {f_hz} Hz")));
    }
    if psd_w_per_hz < 0.0 || !psd_w_per_hz.is_finite() {
        return Err(Error::invalid(format!("psd must be non-negative, got {psd_w_per_hz} W/Hz")));
    }
    let hw = HBAR * 2.0 * std::f64::consts::PI * f_hz;
    Ok((psd_w_per_hz - hw / 2.0) / hw)
}

/// Added quanta for a noise temperature `t_n_k` at `f_hz`.
pub fn temperature_to_added_quanta(t_n_k: f64, f_hz: f64) -> Result<f64> {
    if t_n_k < 0.0 {
        return Err(Error::invalid(format!("noise temperature must be >= 0, got {t_n_k} K")));
    }
    psd_to_added_quanta(K_B * t_n_k, f_hz)
}

/// Piecewise-linear gain curve, dB vs Hz. A single knot acts as a flat gain;
/// evaluation clamps to the end values outside the knot range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainCurve {
    points: Vec<(f64, f64)>, // (Hz, dB), strictly increasing in Hz
}

impl GainCurve {
    /// Frequency-independent gain.
    pub fn flat(gain_db: f64) -> Self {
        GainCurve { points: vec![(0.0, gain_db)] }
    }

    /// Build from `(frequency_hz, gain_db)` knots, which must be finite and
    /// strictly increasing in frequency.
    pub fn from_points(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("gain curve needs at least one point"));
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::invalid(format!(
                    "gain curve frequencies must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if points.iter().any(|&(f, g)| !f.is_finite() || !g.is_finite()) {
            return Err(Error::invalid("gain curve points must be finite"));
        }
        Ok(GainCurve { points })
    }

    /// Gain in dB at `f_hz` (linear interpolation, clamped at the ends).
    pub fn gain_db(&self, f_hz: f64) -> f64 {
        let pts = &self.points;
        if f_hz <= pts[0].0 {
            return pts[0].1;
        }
        if f_hz >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        let i = pts.partition_point(|&(f, _)| f < f_hz);
        let (f0, g0) = pts[i - 1];
        let (f1, g1) = pts[i];
        g0 + (g1 - g0) * (f_hz - f0) / (f1 - f0)
    }

    /// Largest gain value over the knots [dB].
    pub fn max_db(&self) -> f64 {
        self.points.iter().map(|&(_, g)| g).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Access the knots.
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}

/// Role of a chain stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Amplifier,
    Attenuator,
    Passive,
}

/// One stage of an amplification chain.
///
/// Amplifiers carry a noise temperature; attenuators and passives carry a
/// physical temperature and contribute `T_e = (1/G - 1) * T_phys`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainComponent {
    pub name: String,
    pub kind: ComponentKind,
    pub gain: GainCurve,
    /// Amplifier noise temperature [K]; ignored for passives.
    #[serde(default)]
    pub noise_temp_k: f64,
    /// Physical temperature [K] for attenuators/passives; ignored for amplifiers.
    #[serde(default)]
    pub physical_temp_k: f64,
    /// One-sigma uncertainty on the gain [dB] (flat offset).
    #[serde(default)]
    pub gain_sigma_db: f64,
    /// One-sigma uncertainty on the relevant temperature [K].
    #[serde(default)]
    pub temp_sigma_k: f64,
}

impl ChainComponent {
    pub fn amplifier(name: impl Into<String>, gain: GainCurve, noise_temp_k: f64) -> Self {
        ChainComponent {
            name: name.into(),
            kind: ComponentKind::Amplifier,
            gain,
            noise_temp_k,
            physical_temp_k: 0.0,
            gain_sigma_db: 0.0,
            temp_sigma_k: 0.0,
        }
    }

    pub fn attenuator(name: impl Into<String>, gain: GainCurve, physical_temp_k: f64) -> Self {
        ChainComponent {
            name: name.into(),
            kind: ComponentKind::Attenuator,
            gain,
            noise_temp_k: 0.0,
            physical_temp_k,
            gain_sigma_db: 0.0,
            temp_sigma_k: 0.0,
        }
    }

    pub fn passive(name: impl Into<String>, gain: GainCurve, physical_temp_k: f64) -> Self {
        ChainComponent {
            kind: ComponentKind::Passive,
            ..ChainComponent::attenuator(name, gain, physical_temp_k)
        }
    }

    /// Builder: attach a one-sigma gain uncertainty [dB].
    pub fn with_gain_sigma(mut self, sigma_db: f64) -> Self {
        self.gain_sigma_db = sigma_db;
        self
    }

    /// Builder: attach a one-sigma temperature uncertainty [K].
    pub fn with_temp_sigma(mut self, sigma_k: f64) -> Self {
        self.temp_sigma_k = sigma_k;
        self
    }

    fn validate(&self) -> Result<()> {
        match self.kind {
            ComponentKind::Amplifier => {
                if self.noise_temp_k < 0.0 {
                    return Err(Error::invalid(format!(
                        "amplifier '{}' noise temperature must be >= 0",
                        self.name
                    )));
                }
            }
            ComponentKind::Attenuator | ComponentKind::Passive => {
                if self.gain.max_db() > 1e-9 {
                    return Err(Error::invalid(format!(
                        "attenuator/passive '{}' must have gain <= 0 dB",
                        self.name
                    )));
                }
                if self.physical_temp_k < 0.0 {
                    return Err(Error::invalid(format!(
                        "passive '{}' physical temperature must be >= 0",
                        self.name
                    )));
                }
            }
        }
        if self.gain_sigma_db < 0.0 || self.temp_sigma_k < 0.0 {
            return Err(Error::invalid(format!("component '{}' sigmas must be >= 0", self.name)));
        }
        Ok(())
    }

    /// Input-referred effective noise temperature of this stage at `f_hz`,
    /// with optional perturbations used for uncertainty propagation.
    fn effective_noise_temp(&self, f_hz: f64, gain_offset_db: f64, temp_offset_k: f64) -> f64 {
        match self.kind {
            ComponentKind::Amplifier => self.noise_temp_k + temp_offset_k,
            ComponentKind::Attenuator | ComponentKind::Passive => {
                let g = db_to_linear(self.gain.gain_db(f_hz) + gain_offset_db);
                (1.0 / g - 1.0) * (self.physical_temp_k + temp_offset_k)
            }
        }
    }
}

/// Ordered amplification chain with an analysis band and reference plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub components: Vec<ChainComponent>,
    /// Index of the first stage included in the cascade; 0 = on-chip cavity port.
    #[serde(default)]
    pub reference_plane: usize,
    /// Analysis band `[f_min, f_max]` [Hz].
    pub band_hz: [f64; 2],
}

impl ChainSpec {
    pub fn new(components: Vec<ChainComponent>, band_hz: [f64; 2]) -> Result<Self> {
        let spec = ChainSpec { components, reference_plane: 0, band_hz };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.band_hz[0] <= 0.0 || self.band_hz[1] <= self.band_hz[0] {
            return Err(Error::invalid(format!(
                "band must satisfy 0 < f_min < f_max, got {:?}",
                self.band_hz
            )));
        }
        if self.reference_plane >= self.components.len() {
            return Err(Error::invalid(format!(
                "reference plane {} outside component list of length {}",
                self.reference_plane,
                self.components.len()
            )));
        }
        if !self.components[self.reference_plane..]
            .iter()
            .any(|c| c.kind == ComponentKind::Amplifier)
        {
            return Err(Error::invalid("chain needs at least one amplifier after the reference plane"));
        }
        for c in &self.components {
            c.validate()?;
        }
        Ok(())
    }

    fn check_frequency(&self, f_hz: f64) -> Result<()> {
        if f_hz < self.band_hz[0] || f_hz > self.band_hz[1] {
            return Err(Error::invalid(format!(
                "frequency {f_hz} Hz outside analysis band {:?}",
                self.band_hz
            )));
        }
        Ok(())
    }
}

/// Cascade result at a single frequency, referenced to the chain's reference
/// plane. `n_added = (k_B*T_N - hbar*omega/2) / (hbar*omega)` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemNoiseResult {
    pub f_hz: f64,
    pub g_sys_db: f64,
    pub g_sys_sigma_db: f64,
    pub t_n_k: f64,
    pub t_n_sigma_k: f64,
    pub n_added: f64,
    pub n_added_sigma: f64,
}

impl SystemNoiseResult {
    /// Build a result directly from a noise temperature (no gain uncertainty).
    pub fn from_temperature(f_hz: f64, g_sys_db: f64, t_n_k: f64) -> Result<Self> {
        Ok(SystemNoiseResult {
            f_hz,
            g_sys_db,
            g_sys_sigma_db: 0.0,
            t_n_k,
            t_n_sigma_k: 0.0,
            n_added: temperature_to_added_quanta(t_n_k, f_hz)?,
            n_added_sigma: 0.0,
        })
    }

    /// Build a result directly from added quanta (inverts the quanta formula).
    pub fn from_added_quanta(f_hz: f64, g_sys_db: f64, n_added: f64) -> Result<Self> {
        if n_added < -0.5 {
            return Err(Error::invalid(format!("n_added must be >= -0.5, got {n_added}")));
        }
        let hw = HBAR * 2.0 * std::f64::consts::PI * f_hz;
        let t_n_k = (n_added + 0.5) * hw / K_B;
        SystemNoiseResult::from_temperature(f_hz, g_sys_db, t_n_k)
    }
}

/// Input-referred system noise temperature [K] with per-stage offsets applied
/// (offsets are used by the first-order uncertainty propagation).
fn cascade_t_sys(stages: &[ChainComponent], f_hz: f64, gain_off: &[f64], temp_off: &[f64]) -> f64 {
    let mut t_sys = 0.0;
    let mut g_acc = 1.0; // linear gain of everything before the current stage
    for (i, c) in stages.iter().enumerate() {
        t_sys += c.effective_noise_temp(f_hz, gain_off[i], temp_off[i]) / g_acc;
        g_acc *= db_to_linear(c.gain.gain_db(f_hz) + gain_off[i]);
    }
    t_sys
}

/// Friis cascade of all stages from the reference plane to the output.
///
/// Gains multiply; stage noise is divided by the gain of everything before
/// it. One-sigma uncertainties are propagated to first order in linear space
/// over each component's `gain_sigma_db` and `temp_sigma_k`.
pub fn cascade(chain: &ChainSpec, f_hz: f64) -> Result<SystemNoiseResult> {
    chain.validate()?;
    chain.check_frequency(f_hz)?;
    let stages = &chain.components[chain.reference_plane..];
    let n = stages.len();
    let zeros = vec![0.0; n];

    let g_sys_db: f64 = stages.iter().map(|c| c.gain.gain_db(f_hz)).sum();
    let t_n_k = cascade_t_sys(stages, f_hz, &zeros, &zeros);

    // Gain enters the total in dB linearly, so its variance just adds.
    let g_var_db: f64 = stages.iter().map(|c| c.gain_sigma_db.powi(2)).sum();

    // First-order propagation onto T_sys via central differences.
    let mut t_var = 0.0;
    for i in 0..n {
        if stages[i].gain_sigma_db > 0.0 {
            let h = 1e-4; // dB
            let mut off = zeros.clone();
            off[i] = h;
            let up = cascade_t_sys(stages, f_hz, &off, &zeros);
            off[i] = -h;
            let dn = cascade_t_sys(stages, f_hz, &off, &zeros);
            let slope = (up - dn) / (2.0 * h);
            t_var += (slope * stages[i].gain_sigma_db).powi(2);
        }
        if stages[i].temp_sigma_k > 0.0 {
            let t0 = match stages[i].kind {
                ComponentKind::Amplifier => stages[i].noise_temp_k,
                _ => stages[i].physical_temp_k,
            };
            let h = 1e-6 * t0.abs().max(1.0);
            let mut off = zeros.clone();
            off[i] = h;
            let up = cascade_t_sys(stages, f_hz, &zeros, &off);
            off[i] = -h;
            let dn = cascade_t_sys(stages, f_hz, &zeros, &off);
            let slope = (up - dn) / (2.0 * h);
            t_var += (slope * stages[i].temp_sigma_k).powi(2);
        }
    }
    let t_n_sigma_k = t_var.sqrt();

    let hw = HBAR * 2.0 * std::f64::consts::PI * f_hz;
    Ok(SystemNoiseResult {
        f_hz,
        g_sys_db,
        g_sys_sigma_db: g_var_db.sqrt(),
        t_n_k,
        t_n_sigma_k,
        n_added: psd_to_added_quanta(K_B * t_n_k, f_hz)?,
        n_added_sigma: K_B * t_n_sigma_k / hw,
    })
}

/// One row of a two-chain comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub f_hz: f64,
    pub a: SystemNoiseResult,
    pub b: SystemNoiseResult,
    /// `sqrt(T_N,a / T_N,b)`: the expected SNR scaling between the chains.
    pub tn_sqrt_ratio: f64,
}

/// Per-frequency comparison of two chains.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainComparison {
    pub rows: Vec<ComparisonRow>,
}

/// Evaluate both chains over `freqs` and tabulate gain, added noise, and the
/// `sqrt(T_N,a/T_N,b)` ratio per frequency.
pub fn compare_chains(a: &ChainSpec, b: &ChainSpec, freqs: &[f64]) -> Result<ChainComparison> {
    if freqs.is_empty() {
        return Err(Error::invalid("comparison frequency list is empty"));
    }
    let mut rows = Vec::with_capacity(freqs.len());
    for &f in freqs {
        let ra = cascade(a, f)?;
        let rb = cascade(b, f)?;
        let tn_sqrt_ratio = (ra.t_n_k / rb.t_n_k).sqrt();
        rows.push(ComparisonRow { f_hz: f, a: ra, b: rb, tn_sqrt_ratio });
    }
    Ok(ChainComparison { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn simple_chain(g1_db: f64, t1_k: f64, g2_db: f64, t2_k: f64) -> ChainSpec {
        ChainSpec::new(
            vec![
                ChainComponent::amplifier("first", GainCurve::flat(g1_db), t1_k),
                ChainComponent::amplifier("second", GainCurve::flat(g2_db), t2_k),
            ],
            [1e9, 20e9],
        )
        .unwrap()
    }

    #[test]
    fn dbm_to_watts_known_values() {
        assert_relative_eq!(dbm_to_watts(0.0).unwrap(), 1.0e-3, max_relative = 1e-12);
        assert_relative_eq!(dbm_to_watts(20.0).unwrap(), 1.0e-1, max_relative = 1e-12);
        // 10^(-13.818)*1e-3, evaluated independently.
        assert_relative_eq!(dbm_to_watts(-138.18).unwrap(), 1.520_547_529_732_49e-17, max_relative = 1e-12);
        assert!(dbm_to_watts(f64::NAN).is_err());
        assert!(watts_to_dbm(0.0).is_err());
        assert!(watts_to_dbm(-1.0).is_err());
    }

    #[test]
    fn quanta_at_known_psd() {
        // One photon of PSD minus the vacuum half.
        let hw = HBAR * 2.0 * std::f64::consts::PI * 6e9;
        assert_relative_eq!(psd_to_added_quanta(hw, 6e9).unwrap(), 0.5, max_relative = 1e-12);
        assert_relative_eq!(psd_to_added_quanta(hw / 2.0, 6e9).unwrap(), 0.0, epsilon = 1e-12);
        // k_B * 1.72 K at 6.5 GHz, evaluated independently: 5.0137 quanta.
        let n = psd_to_added_quanta(K_B * 1.72, 6.5e9).unwrap();
        assert_relative_eq!(n, 5.013_689_986_781_9, max_relative = 1e-10);
        assert!(n < 5.02, "stays in the below-five-quanta regime");
        assert!(psd_to_added_quanta(1e-23, 0.0).is_err());
        assert!(psd_to_added_quanta(-1e-23, 1e9).is_err());
    }

    #[test]
    fn cascade_two_stage_friis() {
        // Unity first-stage gain: temperatures add.
        let r = cascade(&simple_chain(0.0, 1.0, 10.0, 100.0), 6e9).unwrap();
        assert_relative_eq!(r.t_n_k, 101.0, max_relative = 1e-12);
        // 20 dB first stage: second stage suppressed to 1 K.
        let r = cascade(&simple_chain(20.0, 1.0, 10.0, 100.0), 6e9).unwrap();
        assert_relative_eq!(r.t_n_k, 2.0, max_relative = 1e-12);
        assert_relative_eq!(r.g_sys_db, 30.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_kelvin_attenuator_adds_no_noise() {
        let chain = ChainSpec::new(
            vec![
                ChainComponent::attenuator("att", GainCurve::flat(-3.0), 0.0),
                ChainComponent::amplifier("amp", GainCurve::flat(30.0), 0.0),
            ],
            [1e9, 20e9],
        )
        .unwrap();
        let r = cascade(&chain, 6e9).unwrap();
        assert_relative_eq!(r.t_n_k, 0.0, epsilon = 1e-15);
        assert_relative_eq!(r.g_sys_db, 27.0, max_relative = 1e-12);
        assert_relative_eq!(db_to_linear(-3.0), 0.501187, max_relative = 1e-5);
    }

    #[test]
    fn attenuator_noise_formula() {
        // T_e = (1/G - 1) * T_phys referred to the attenuator input.
        let chain = ChainSpec::new(
            vec![
                ChainComponent::attenuator("att", GainCurve::flat(-6.0), 4.0),
                ChainComponent::amplifier("amp", GainCurve::flat(30.0), 0.0),
            ],
            [1e9, 20e9],
        )
        .unwrap();
        let r = cascade(&chain, 6e9).unwrap();
        let g = db_to_linear(-6.0);
        assert_relative_eq!(r.t_n_k, (1.0 / g - 1.0) * 4.0, max_relative = 1e-12);
    }

    #[test]
    fn unity_zero_noise_stage_is_transparent() {
        let base = simple_chain(20.0, 1.0, 10.0, 100.0);
        let r0 = cascade(&base, 6e9).unwrap();
        for pos in 0..=2 {
            let mut components = base.components.clone();
            components.insert(pos, ChainComponent::amplifier("unity", GainCurve::flat(0.0), 0.0));
            let chain = ChainSpec::new(components, base.band_hz).unwrap();
            let r = cascade(&chain, 6e9).unwrap();
            assert_relative_eq!(r.t_n_k, r0.t_n_k, max_relative = 1e-15);
            assert_relative_eq!(r.g_sys_db, r0.g_sys_db, max_relative = 1e-15);
        }
    }

    #[test]
    fn more_first_stage_gain_lowers_t_sys() {
        let mut last = f64::INFINITY;
        for g1 in [0.0, 5.0, 10.0, 15.0, 20.0, 25.0] {
            let t = cascade(&simple_chain(g1, 1.0, 10.0, 100.0), 6e9).unwrap().t_n_k;
            assert!(t < last, "T_sys must fall as first-stage gain rises");
            last = t;
        }
    }

    #[test]
    fn n_added_identity_and_floor() {
        let r = cascade(&simple_chain(20.0, 1.72, 10.0, 0.0), 6.5e9).unwrap();
        let hw = HBAR * 2.0 * std::f64::consts::PI * r.f_hz;
        assert_relative_eq!(r.n_added, (K_B * r.t_n_k - hw / 2.0) / hw, max_relative = 1e-14);
        assert!(r.n_added >= -0.5);
        // Noiseless chain sits exactly on the sub-vacuum floor.
        let r = cascade(&simple_chain(20.0, 0.0, 10.0, 0.0), 6.5e9).unwrap();
        assert_relative_eq!(r.n_added, -0.5, max_relative = 1e-12);
    }

    #[test]
    fn cascade_rejects_out_of_band_frequency() {
        let chain = simple_chain(20.0, 1.0, 10.0, 100.0);
        assert!(cascade(&chain, 0.5e9).is_err());
        assert!(cascade(&chain, 25e9).is_err());
    }

    #[test]
    fn reference_plane_drops_leading_stages() {
        let mut chain = ChainSpec::new(
            vec![
                ChainComponent::attenuator("line", GainCurve::flat(-10.0), 4.0),
                ChainComponent::amplifier("amp", GainCurve::flat(30.0), 2.0),
            ],
            [1e9, 20e9],
        )
        .unwrap();
        chain.reference_plane = 1;
        let r = cascade(&chain, 6e9).unwrap();
        assert_relative_eq!(r.t_n_k, 2.0, max_relative = 1e-12);
        assert_relative_eq!(r.g_sys_db, 30.0, max_relative = 1e-12);
    }

    #[test]
    fn compare_chains_identical_gives_unity_ratio() {
        let chain = simple_chain(20.0, 2.0, 10.0, 100.0);
        let freqs = [5e9, 6e9, 7e9];
        let cmp = compare_chains(&chain, &chain, &freqs).unwrap();
        assert_eq!(cmp.rows.len(), 3);
        for row in &cmp.rows {
            assert_relative_eq!(row.tn_sqrt_ratio, 1.0, max_relative = 1e-14);
        }
        assert!(compare_chains(&chain, &chain, &[]).is_err());
    }

    #[test]
    fn compare_chains_anchor_ratio() {
        // Single-stage chains with T_N ratio 2.1025 give sqrt ratio 1.45.
        let a = simple_chain(30.0, 2.0 * 2.1025, 0.0, 0.0);
        let b = simple_chain(30.0, 2.0, 0.0, 0.0);
        let cmp = compare_chains(&a, &b, &[6.5e9]).unwrap();
        assert_relative_eq!(cmp.rows[0].tn_sqrt_ratio, 1.45, max_relative = 1e-12);
    }

    #[test]
    fn unpumped_twpa_penalty_is_strict() {
        // An unpumped TWPA acts as a frequency-sloped attenuator in front of
        // the first amplifier and must raise the added noise everywhere.
        let hemt_only = ChainSpec::new(
            vec![
                ChainComponent::passive("isolator", GainCurve::flat(-0.2), 0.05),
                ChainComponent::amplifier("hemt", GainCurve::flat(40.0), 2.0),
            ],
            [1e9, 12e9],
        )
        .unwrap();
        let slope = 0.75; // dB/GHz
        let points: Vec<(f64, f64)> =
            (1..=12).map(|g| (g as f64 * 1e9, -slope * g as f64)).collect();
        let twpa_off = ChainSpec::new(
            vec![
                ChainComponent::passive("isolator", GainCurve::flat(-0.2), 0.05),
                ChainComponent::attenuator("twpa-off", GainCurve::from_points(points).unwrap(), 0.03),
                ChainComponent::amplifier("hemt", GainCurve::flat(40.0), 2.0),
            ],
            [1e9, 12e9],
        )
        .unwrap();
        let freqs: Vec<f64> = (10..=110).map(|i| 1e9 + i as f64 * 0.1e9).collect();
        let cmp = compare_chains(&twpa_off, &hemt_only, &freqs).unwrap();
        for row in &cmp.rows {
            assert!(
                row.a.n_added > row.b.n_added,
                "pump-off chain must add more noise at {} Hz",
                row.f_hz
            );
        }
    }

    #[test]
    fn ratio_invariant_under_common_output_gain_rescale() {
        let mut a = simple_chain(20.0, 4.0, 10.0, 100.0);
        let mut b = simple_chain(20.0, 2.0, 10.0, 80.0);
        let freqs = [5e9, 7e9];
        let r0: Vec<f64> =
            compare_chains(&a, &b, &freqs).unwrap().rows.iter().map(|r| r.tn_sqrt_ratio).collect();
        for chain in [&mut a, &mut b] {
            let last = chain.components.last_mut().unwrap();
            last.gain = GainCurve::flat(last.gain.gain_db(6e9) + 10.0);
        }
        let r1: Vec<f64> =
            compare_chains(&a, &b, &freqs).unwrap().rows.iter().map(|r| r.tn_sqrt_ratio).collect();
        for (x, y) in r0.iter().zip(&r1) {
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }
    }

    #[test]
    fn uncertainty_propagates_from_components() {
        let chain = ChainSpec::new(
            vec![
                ChainComponent::amplifier("first", GainCurve::flat(20.0), 2.0).with_temp_sigma(0.1),
                ChainComponent::amplifier("second", GainCurve::flat(10.0), 100.0)
                    .with_gain_sigma(0.5),
            ],
            [1e9, 20e9],
        )
        .unwrap();
        let r = cascade(&chain, 6e9).unwrap();
        // T_sys = T1 + T2/G1: independent of the second-stage gain, so only
        // the first-stage temperature sigma contributes.
        assert_relative_eq!(r.t_n_sigma_k, 0.1, max_relative = 1e-6);
        assert_relative_eq!(r.g_sys_sigma_db, 0.5, max_relative = 1e-12);
        let hw = HBAR * 2.0 * std::f64::consts::PI * 6e9;
        assert_relative_eq!(r.n_added_sigma, K_B * 0.1 / hw, max_relative = 1e-6);
    }

    #[test]
    fn gain_curve_interpolates_and_clamps() {
        let curve = GainCurve::from_points(vec![(4e9, 40.0), (8e9, 36.0)]).unwrap();
        assert_relative_eq!(curve.gain_db(4e9), 40.0);
        assert_relative_eq!(curve.gain_db(6e9), 38.0, max_relative = 1e-12);
        assert_relative_eq!(curve.gain_db(8e9), 36.0);
        assert_relative_eq!(curve.gain_db(2e9), 40.0); // clamped
        assert_relative_eq!(curve.gain_db(9e9), 36.0); // clamped
        assert!(GainCurve::from_points(vec![]).is_err());
        assert!(GainCurve::from_points(vec![(5e9, 1.0), (5e9, 2.0)]).is_err());
    }

    #[test]
    fn validation_catches_bad_components() {
        assert!(ChainSpec::new(
            vec![ChainComponent::attenuator("att", GainCurve::flat(-3.0), 4.0)],
            [1e9, 10e9]
        )
        .is_err()); // no amplifier
        assert!(ChainSpec::new(
            vec![ChainComponent::attenuator("att", GainCurve::flat(3.0), 4.0),
                 ChainComponent::amplifier("amp", GainCurve::flat(30.0), 2.0)],
            [1e9, 10e9]
        )
        .is_err()); // attenuator with positive gain
        assert!(ChainSpec::new(
            vec![ChainComponent::amplifier("amp", GainCurve::flat(30.0), -1.0)],
            [1e9, 10e9]
        )
        .is_err()); // negative noise temperature
    }

    proptest! {
        #[test]
        fn dbm_watts_roundtrip(p in -200.0f64..30.0) {
            let w = dbm_to_watts(p).unwrap();
            let back = watts_to_dbm(w).unwrap();
            prop_assert!((back - p).abs() <= 1e-12 * p.abs().max(1.0));
        }

        #[test]
        fn added_quanta_never_below_vacuum(t in 0.0f64..100.0, f in 1e9f64..20e9) {
            let n = temperature_to_added_quanta(t, f).unwrap();
            prop_assert!(n >= -0.5);
        }

        #[test]
        fn db_linear_roundtrip(g in -120.0f64..120.0) {
            prop_assert!((linear_to_db(db_to_linear(g)) - g).abs() < 1e-10);
        }
    }
}
