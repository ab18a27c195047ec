//! Stub-loaded traveling-wave line: impedance, periodic-loading dispersion,
//! phase mismatch, and a parameterized small-signal gain profile.
//!
//! The line is a cascade of uniform two-conductor segments. Each supercell
//! (period Λ) concatenates a run of unloaded cells and a run of loaded cells;
//! dispersion comes from the Floquet eigenvalue of the per-supercell ABCD
//! matrix: `cos(kΛ) = (A + D)/2`, with a stopband wherever `|cos(kΛ)| > 1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::EPSILON_0;
use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Uniform line segment parameters per cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    /// Cell length [m].
    pub length_m: f64,
    /// Series inductance per unit length [H/m].
    pub l_per_m: f64,
    /// Shunt capacitance per unit length [F/m].
    pub c_per_m: f64,
}

impl CellSpec {
    pub fn new(length_m: f64, l_per_m: f64, c_per_m: f64) -> Result<Self> {
        let cell = CellSpec { length_m, l_per_m, c_per_m };
        cell.validate()?;
        Ok(cell)
    }

    pub fn validate(&self) -> Result<()> {
        if self.length_m <= 0.0 || self.l_per_m <= 0.0 || self.c_per_m <= 0.0 {
            return Err(Error::invalid(format!(
                "cell parameters must be positive: length {} m, L {} H/m, C {} F/m",
                self.length_m, self.l_per_m, self.c_per_m
            )));
        }
        Ok(())
    }

    /// Phase velocity `1/sqrt(LC)` [m/s].
    pub fn phase_velocity(&self) -> f64 {
        1.0 / (self.l_per_m * self.c_per_m).sqrt()
    }
}

/// Characteristic impedance `Z0 = sqrt(L/C)` [Ω].
pub fn cell_impedance(cell: &CellSpec) -> Result<f64> {
    cell.validate()?;
    Ok((cell.l_per_m / cell.c_per_m).sqrt())
}

/// Parallel-plate stub geometry used to derive loading capacitance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StubGeometry {
    /// Stub length [m].
    pub stub_length_m: f64,
    /// Stub width [m].
    pub stub_width_m: f64,
    /// Dielectric thickness [m].
    pub dielectric_thickness_m: f64,
    /// Relative permittivity (>= 1).
    pub rel_permittivity: f64,
    /// Main line width [m].
    pub line_width_m: f64,
    /// Film sheet inductance [H/square].
    pub film_sheet_inductance: f64,
}

impl StubGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.dielectric_thickness_m <= 0.0 {
            return Err(Error::invalid("dielectric thickness must be positive"));
        }
        if self.stub_length_m < 0.0
            || self.stub_width_m <= 0.0
            || self.line_width_m <= 0.0
            || self.film_sheet_inductance <= 0.0
        {
            return Err(Error::invalid("stub geometry dimensions must be positive"));
        }
        if self.rel_permittivity < 1.0 {
            return Err(Error::invalid("relative permittivity must be >= 1"));
        }
        Ok(())
    }
}

/// Parallel-plate capacitance of one stub: `C = eps0 * eps_r * area / d`.
pub fn stub_capacitance(g: &StubGeometry) -> Result<f64> {
    g.validate()?;
    let area = g.stub_length_m * g.stub_width_m;
    Ok(EPSILON_0 * g.rel_permittivity * area / g.dielectric_thickness_m)
}

/// Periodic loading pattern: `n_unloaded` unloaded cells followed by
/// `n_loaded` loaded cells, repeated `n_supercells` times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupercellSpec {
    pub n_unloaded: usize,
    pub n_loaded: usize,
    pub unloaded: CellSpec,
    pub loaded: CellSpec,
    pub n_supercells: usize,
}

impl SupercellSpec {
    pub fn new(
        n_unloaded: usize,
        n_loaded: usize,
        unloaded: CellSpec,
        loaded: CellSpec,
        n_supercells: usize,
    ) -> Result<Self> {
        let sc = SupercellSpec { n_unloaded, n_loaded, unloaded, loaded, n_supercells };
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_unloaded == 0 {
            return Err(Error::invalid("supercell needs at least one unloaded cell"));
        }
        if self.n_supercells == 0 {
            return Err(Error::invalid("need at least one supercell"));
        }
        self.unloaded.validate()?;
        if self.n_loaded > 0 {
            self.loaded.validate()?;
        }
        Ok(())
    }

    /// Cells per supercell.
    pub fn cells_per_supercell(&self) -> usize {
        self.n_unloaded + self.n_loaded
    }

    /// Total cell count over the whole line.
    pub fn total_cells(&self) -> usize {
        self.n_supercells * self.cells_per_supercell()
    }

    /// Supercell period Λ [m].
    pub fn period_m(&self) -> f64 {
        self.n_unloaded as f64 * self.unloaded.length_m + self.n_loaded as f64 * self.loaded.length_m
    }

    /// Total line length [m].
    pub fn total_length_m(&self) -> f64 {
        self.n_supercells as f64 * self.period_m()
    }

    /// Transit time of one supercell [s].
    pub fn supercell_delay_s(&self) -> f64 {
        let tu = self.n_unloaded as f64 * self.unloaded.length_m / self.unloaded.phase_velocity();
        let tl = if self.n_loaded > 0 {
            self.n_loaded as f64 * self.loaded.length_m / self.loaded.phase_velocity()
        } else {
            0.0
        };
        tu + tl
    }

    /// First-stopband estimate from the Bragg condition: the frequency whose
    /// one-way supercell phase is π, i.e. `v_eff/(2Λ) = 1/(2·delay)`.
    pub fn bragg_frequency_hz(&self) -> f64 {
        1.0 / (2.0 * self.supercell_delay_s())
    }
}

/// 2x2 ABCD (transmission) matrix.
#[derive(Debug, Clone, Copy)]
struct Abcd {
    a: Complex64,
    b: Complex64,
    c: Complex64,
    d: Complex64,
}

impl Abcd {
    /// Uniform lossless segment of electrical length `beta*len` and impedance `z`.
    fn segment(z: f64, beta_len: f64) -> Self {
        let (s, c) = beta_len.sin_cos();
        Abcd {
            a: Complex64::new(c, 0.0),
            b: Complex64::new(0.0, z * s),
            c: Complex64::new(0.0, s / z),
            d: Complex64::new(c, 0.0),
        }
    }

    /// Cascade: self followed by `next`.
    fn compose(&self, next: &Abcd) -> Self {
        Abcd {
            a: self.a * next.a + self.b * next.c,
            b: self.a * next.b + self.b * next.d,
            c: self.c * next.a + self.d * next.c,
            d: self.c * next.b + self.d * next.d,
        }
    }
}

/// `cos(kΛ)` from the supercell ABCD matrix (real for a lossless line).
fn cos_k_lambda(sc: &SupercellSpec, f_hz: f64) -> f64 {
    let w = TWO_PI * f_hz;
    let zu = (sc.unloaded.l_per_m / sc.unloaded.c_per_m).sqrt();
    let bu = w * (sc.unloaded.l_per_m * sc.unloaded.c_per_m).sqrt();
    let mu = Abcd::segment(zu, bu * sc.n_unloaded as f64 * sc.unloaded.length_m);
    let m = if sc.n_loaded > 0 {
        let zl = (sc.loaded.l_per_m / sc.loaded.c_per_m).sqrt();
        let bl = w * (sc.loaded.l_per_m * sc.loaded.c_per_m).sqrt();
        mu.compose(&Abcd::segment(zl, bl * sc.n_loaded as f64 * sc.loaded.length_m))
    } else {
        mu
    };
    0.5 * (m.a + m.d).re
}

/// Bloch wavenumber at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochPoint {
    pub f_hz: f64,
    /// Unwrapped Bloch phase per length [rad/m]. Inside a stopband the
    /// propagating phase pins to the band-edge value.
    pub k_rad_per_m: f64,
    pub in_stopband: bool,
}

/// Walks `cos(kΛ)` from dc upward, keeping the accumulated branch count so the
/// returned phase is unwrapped (monotone) rather than folded into [0, π].
struct PhaseWalker<'a> {
    sc: &'a SupercellSpec,
    lambda_m: f64,
    branch: usize, // completed half-turns: theta in [branch*π, (branch+1)*π]
    theta: f64,    // last unwrapped kΛ [rad]
    f_hz: f64,
}

impl<'a> PhaseWalker<'a> {
    fn new(sc: &'a SupercellSpec) -> Self {
        PhaseWalker { sc, lambda_m: sc.period_m(), branch: 0, theta: 0.0, f_hz: 0.0 }
    }

    /// Step size keeping the phase increment well under one branch.
    fn max_step_hz(&self) -> f64 {
        0.05 / (TWO_PI * self.sc.supercell_delay_s())
    }

    fn fold(&self, x: f64) -> f64 {
        let sign = if self.branch % 2 == 0 { 1.0 } else { -1.0 };
        self.branch as f64 * std::f64::consts::PI + (sign * x.clamp(-1.0, 1.0)).acos()
    }

    /// Advance to `f_hz` (must be >= the previous frequency).
    fn advance(&mut self, f_hz: f64) -> BlochPoint {
        debug_assert!(f_hz >= self.f_hz);
        let step = self.max_step_hz();
        let mut f = self.f_hz;
        loop {
            f = (f + step).min(f_hz);
            let x = cos_k_lambda(self.sc, f);
            if x.abs() <= 1.0 {
                let mut theta = self.fold(x);
                if theta < self.theta - 1e-9 {
                    // Crossed a band edge without a resolvable stopband
                    // (touching bands, e.g. a uniform line): next branch.
                    self.branch += 1;
                    theta = self.fold(x);
                }
                self.theta = theta;
            } else {
                // Stopband: the propagating phase pins at the upper band edge.
                self.theta = (self.branch + 1) as f64 * std::f64::consts::PI;
                self.branch += 1;
                // Skip forward until the stopband is exited or the target hit.
                while f < f_hz {
                    let fn_ = (f + step).min(f_hz);
                    if cos_k_lambda(self.sc, fn_).abs() <= 1.0 {
                        break;
                    }
                    f = fn_;
                }
            }
            if f >= f_hz {
                break;
            }
        }
        self.f_hz = f_hz;
        let x = cos_k_lambda(self.sc, f_hz);
        BlochPoint {
            f_hz,
            k_rad_per_m: self.theta / self.lambda_m,
            in_stopband: x.abs() > 1.0,
        }
    }
}

/// Unwrapped Bloch dispersion at a single frequency.
pub fn bloch_dispersion(sc: &SupercellSpec, f_hz: f64) -> Result<BlochPoint> {
    Ok(dispersion_sweep(sc, &[f_hz])?.pop().expect("one point"))
}

/// Dispersion at many frequencies; one dc-up sweep, so cost is shared.
pub fn dispersion_sweep(sc: &SupercellSpec, freqs: &[f64]) -> Result<Vec<BlochPoint>> {
    sc.validate()?;
    if freqs.iter().any(|&f| f <= 0.0 || !f.is_finite()) {
        return Err(Error::invalid("dispersion frequencies must be positive and finite"));
    }
    let mut order: Vec<usize> = (0..freqs.len()).collect();
    order.sort_by(|&i, &j| freqs[i].total_cmp(&freqs[j]));
    let mut out = vec![BlochPoint { f_hz: 0.0, k_rad_per_m: 0.0, in_stopband: false }; freqs.len()];
    let mut walker = PhaseWalker::new(sc);
    for &i in &order {
        out[i] = walker.advance(freqs[i]);
    }
    Ok(out)
}

/// First stopband `[f_lo, f_hi]` below `f_max_hz`, located on a coarse grid
/// and refined by bisection on `|cos(kΛ)| = 1`. Returns `None` if the line
/// has no stopband in range (e.g. a uniform line).
pub fn find_first_stopband(sc: &SupercellSpec, f_max_hz: f64) -> Result<Option<(f64, f64)>> {
    sc.validate()?;
    if f_max_hz <= 0.0 {
        return Err(Error::invalid("f_max must be positive"));
    }
    let step = 0.02 / (TWO_PI * sc.supercell_delay_s());
    let n = (f_max_hz / step).ceil() as usize;
    let mut enter: Option<(f64, f64)> = None; // bracketing (f_pass, f_stop)
    let mut exit: Option<(f64, f64)> = None; // bracketing (f_stop, f_pass)
    let mut prev_f = step * 1e-3;
    let mut prev_in = cos_k_lambda(sc, prev_f).abs() > 1.0;
    for i in 1..=n {
        let f = (i as f64 * step).min(f_max_hz);
        let now_in = cos_k_lambda(sc, f).abs() > 1.0;
        if !prev_in && now_in && enter.is_none() {
            enter = Some((prev_f, f));
        }
        if prev_in && !now_in && enter.is_some() {
            exit = Some((prev_f, f));
            break;
        }
        prev_f = f;
        prev_in = now_in;
        if f >= f_max_hz {
            break;
        }
    }
    let Some((mut lo_a, mut lo_b)) = enter else {
        return Ok(None);
    };
    // Bisection on the magnitude crossing |cos(kΛ)| = 1.
    let edge = |a: &mut f64, b: &mut f64, stop_side_high: bool| {
        for _ in 0..60 {
            let mid = 0.5 * (*a + *b);
            let inside = cos_k_lambda(sc, mid).abs() > 1.0;
            if inside == stop_side_high {
                *b = mid;
            } else {
                *a = mid;
            }
        }
        0.5 * (*a + *b)
    };
    let f_lo = edge(&mut lo_a, &mut lo_b, true);
    let f_hi = match exit {
        Some((mut a, mut b)) => {
            // Here the stopband is on the low side of the bracket.
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                if cos_k_lambda(sc, mid).abs() > 1.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            0.5 * (a + b)
        }
        None => f_max_hz, // stopband extends past the search window
    };
    Ok(Some((f_lo, f_hi)))
}

/// Parametric mixing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mixing {
    /// Three-wave: `f_idler = f_pump - f_signal` (dc-biased operation).
    #[default]
    ThreeWave,
    /// Four-wave: `f_idler = 2*f_pump - f_signal`.
    FourWave,
}

/// Phase mismatch `Δβ` [rad/m] for the chosen mixing order:
/// three-wave `Δβ = β_p - β_s - β_i`, four-wave `Δβ = 2β_p - β_s - β_i`.
pub fn phase_mismatch(sc: &SupercellSpec, f_pump_hz: f64, f_signal_hz: f64, mixing: Mixing) -> Result<f64> {
    if f_pump_hz <= 0.0 || f_signal_hz <= 0.0 {
        return Err(Error::invalid("pump and signal frequencies must be positive"));
    }
    let f_idler = match mixing {
        Mixing::ThreeWave => f_pump_hz - f_signal_hz,
        Mixing::FourWave => 2.0 * f_pump_hz - f_signal_hz,
    };
    if f_idler <= 0.0 {
        return Err(Error::invalid(format!(
            "idler frequency {f_idler} Hz not positive for signal {f_signal_hz} Hz"
        )));
    }
    let pts = dispersion_sweep(sc, &[f_pump_hz, f_signal_hz, f_idler])?;
    if pts[2].in_stopband {
        return Err(Error::invalid(format!("idler frequency {f_idler} Hz falls in a stopband")));
    }
    let (bp, bs, bi) = (pts[0].k_rad_per_m, pts[1].k_rad_per_m, pts[2].k_rad_per_m);
    Ok(match mixing {
        Mixing::ThreeWave => bp - bs - bi,
        Mixing::FourWave => 2.0 * bp - bs - bi,
    })
}

/// Pump settings for the gain profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec {
    pub f_pump_hz: f64,
    /// Parametric coupling strength g [1/m].
    pub strength_per_m: f64,
    #[serde(default)]
    pub mixing: Mixing,
}

/// Loss and ripple model superposed on the coupled-mode gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRippleModel {
    /// Insertion-loss slope [dB/GHz]; typical measured range 0.5–1.
    pub loss_db_per_ghz: f64,
    /// Gain-ripple period [Hz].
    pub ripple_period_hz: f64,
    /// Gain-ripple amplitude [dB]; applied only with the pump on.
    pub ripple_amplitude_db: f64,
}

impl Default for LossRippleModel {
    fn default() -> Self {
        LossRippleModel {
            loss_db_per_ghz: 0.75,
            ripple_period_hz: 25e6,
            ripple_amplitude_db: 0.0,
        }
    }
}

/// Frequency-resolved gain decomposition. `net = on/off - loss` pointwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainProfile {
    pub freqs_hz: Vec<f64>,
    pub gain_on_off_db: Vec<f64>,
    pub insertion_loss_db: Vec<f64>,
    pub net_gain_db: Vec<f64>,
    /// True where the signal itself has no propagating Bloch mode.
    pub signal_in_stopband: Vec<bool>,
    pub ripple_period_hz: f64,
    pub ripple_amplitude_db: f64,
}

/// Small-signal coupled-mode power gain over the line length `x`:
/// `G = 1 + [(g/κ)·sinh(κx)]²` with `κ² = g² - (Δβ/2)²`; the κ→0 limit is the
/// series value `G = 1 + (gx)²`, and imaginary κ turns sinh into sin.
fn coupled_mode_gain_linear(g_per_m: f64, delta_beta: f64, x_m: f64) -> f64 {
    if g_per_m == 0.0 {
        return 1.0;
    }
    let kappa_sq = g_per_m * g_per_m - (delta_beta / 2.0) * (delta_beta / 2.0);
    let s = if kappa_sq.abs() * x_m * x_m < 1e-12 {
        // Series limit sinh(κx)/κ -> x(1 + (κx)²/6 + ...)
        x_m * (1.0 + kappa_sq * x_m * x_m / 6.0)
    } else if kappa_sq > 0.0 {
        let k = kappa_sq.sqrt();
        (k * x_m).sinh() / k
    } else {
        let k = (-kappa_sq).sqrt();
        (k * x_m).sin() / k
    };
    1.0 + (g_per_m * s) * (g_per_m * s)
}

/// Gain profile over `freqs`: coupled-mode on/off gain from the line's phase
/// mismatch, linear-in-frequency insertion loss, and optional pump-on ripple.
/// Frequencies whose signal or idler cannot propagate get 0 dB on/off gain.
pub fn gain_profile(
    sc: &SupercellSpec,
    pump: &PumpSpec,
    loss: &LossRippleModel,
    freqs: &[f64],
) -> Result<GainProfile> {
    sc.validate()?;
    if freqs.is_empty() {
        return Err(Error::invalid("gain profile frequency list is empty"));
    }
    if pump.strength_per_m < 0.0 {
        return Err(Error::invalid("pump strength must be >= 0"));
    }
    if loss.ripple_period_hz <= 0.0 {
        return Err(Error::invalid("ripple period must be positive"));
    }
    if loss.loss_db_per_ghz < 0.0 {
        return Err(Error::invalid("loss slope must be >= 0"));
    }
    let pump_point = bloch_dispersion(sc, pump.f_pump_hz)?;
    if pump_point.in_stopband {
        return Err(Error::invalid(format!(
            "pump frequency {} Hz falls inside a stopband",
            pump.f_pump_hz
        )));
    }
    let x = sc.total_length_m();
    let signal_points = dispersion_sweep(sc, freqs)?;
    let mut on_off = Vec::with_capacity(freqs.len());
    let mut loss_db = Vec::with_capacity(freqs.len());
    let mut net = Vec::with_capacity(freqs.len());
    let mut stopband = Vec::with_capacity(freqs.len());
    for (i, &f) in freqs.iter().enumerate() {
        let l = loss.loss_db_per_ghz * f / 1e9;
        let mut g_db = 0.0;
        if pump.strength_per_m > 0.0 && !signal_points[i].in_stopband {
            if let Ok(db) = phase_mismatch(sc, pump.f_pump_hz, f, pump.mixing) {
                let g_lin = coupled_mode_gain_linear(pump.strength_per_m, db, x);
                let ripple = loss.ripple_amplitude_db
                    * (TWO_PI * f / loss.ripple_period_hz).sin();
                g_db = 10.0 * g_lin.log10() + ripple;
            }
        }
        on_off.push(g_db);
        loss_db.push(l);
        net.push(g_db - l);
        stopband.push(signal_points[i].in_stopband);
    }
    Ok(GainProfile {
        freqs_hz: freqs.to_vec(),
        gain_on_off_db: on_off,
        insertion_loss_db: loss_db,
        net_gain_db: net,
        signal_in_stopband: stopband,
        ripple_period_hz: loss.ripple_period_hz,
        ripple_amplitude_db: loss.ripple_amplitude_db,
    })
}
