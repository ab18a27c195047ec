//! Notch-resonator parameter extraction from complex transmission traces,
//! and the dispersive-shift measurement built on a pair of such fits.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::calfit::lm::{self, LmOptions};
use crate::cqed::{s21, CavityQubitParams, QubitState};
use crate::error::{Error, FitError, Result};

/// Complex transmission vs frequency, as measured past the feedline.
#[derive(Debug, Clone, PartialEq)]
pub struct S21Trace {
    pub freqs_hz: Vec<f64>,
    pub s21: Vec<Complex64>,
}

impl S21Trace {
    pub fn validate(&self) -> Result<()> {
        if self.freqs_hz.len() != self.s21.len() {
            return Err(Error::data(format!(
                "trace axes disagree: {} frequencies vs {} samples",
                self.freqs_hz.len(),
                self.s21.len()
            )));
        }
        if self.freqs_hz.len() < 2 {
            return Err(Error::data("trace needs at least two points"));
        }
        if !self.freqs_hz.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::data("trace frequencies must be strictly increasing"));
        }
        Ok(())
    }
}

/// Synthetic transmission trace from the forward model, with optional
/// additive complex Gaussian noise of the given standard deviation.
pub fn synth_s21_trace(
    p: &CavityQubitParams,
    state: QubitState,
    freqs: &[f64],
    noise_level: f64,
    seed: u64,
) -> Result<S21Trace> {
    p.validate()?;
    if noise_level < 0.0 {
        return Err(Error::invalid("noise level must be >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = freqs
        .iter()
        .map(|&f| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            s21(p, f, state) + Complex64::new(noise_level * re, noise_level * im)
        })
        .collect();
    let trace = S21Trace { freqs_hz: freqs.to_vec(), s21: samples };
    trace.validate()?;
    Ok(trace)
}

/// Fitted resonator parameters with uncertainties.
///
/// `covariance` is over the fitted vector `(f_res, ln Q, ln Q_c, asymmetry)`;
/// the named sigmas are delta-method projections of its diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonatorFit {
    pub f_res_hz: f64,
    pub q: f64,
    pub q_c: f64,
    /// Derived internal quality factor; `None` when the fitted `Q` and
    /// `Q_c` coincide to working precision (internal loss unresolvable).
    pub q_int: Option<f64>,
    pub asymmetry_rad: f64,
    pub f_res_sigma_hz: f64,
    pub q_sigma: f64,
    pub q_c_sigma: f64,
    pub covariance: [[f64; 4]; 4],
    pub residual_rms: f64,
    pub iterations: usize,
}

/// Notch model used by both the synthesizer and the fitter:
/// `S21 = 1 - (Q/Q_c)·e^{iφ} / (1 + 2iQ·(f - f0)/f0)`.
fn notch_model(f: f64, f0: f64, q: f64, q_c: f64, phi: f64) -> Complex64 {
    let depth = Complex64::from_polar(q / q_c, phi);
    let denom = Complex64::new(1.0, 2.0 * q * (f - f0) / f0);
    Complex64::new(1.0, 0.0) - depth / denom
}

/// Algebraic (Kasa) circle fit: least-squares center and radius of a point
/// cloud in the complex plane.
pub(crate) fn kasa_circle(pts: &[Complex64]) -> Option<(Complex64, f64)> {
    // x² + y² = a·x + b·y + c is linear in (a, b, c).
    let n = pts.len() as f64;
    if pts.len() < 3 {
        return None;
    }
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut sz, mut sxz, mut syz) = (0.0, 0.0, 0.0);
    for p in pts {
        let (x, y) = (p.re, p.im);
        let z = x * x + y * y;
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
        sz += z;
        sxz += x * z;
        syz += y * z;
    }
    let m = nalgebra::Matrix3::new(sxx, sxy, sx, sxy, syy, sy, sx, sy, n);
    let rhs = nalgebra::Vector3::new(sxz, syz, sz);
    let sol = m.lu().solve(&rhs)?;
    let center = Complex64::new(sol[0] / 2.0, sol[1] / 2.0);
    let r_sq = sol[2] + center.norm_sqr();
    if r_sq <= 0.0 {
        return None;
    }
    Some((center, r_sq.sqrt()))
}

/// Median of a slice (copies; fine for trace-sized inputs).
fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Robust per-point noise estimate from successive differences.
fn successive_diff_noise(values: &[f64]) -> f64 {
    let diffs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    if diffs.is_empty() {
        return 0.0;
    }
    // |Δ| of two independent Gaussians has median ~1.349/1.414 σ·√2; the
    // 1.4826 MAD constant over √2 maps the median to one-point σ.
    median(&diffs) * 1.4826 / std::f64::consts::SQRT_2
}

/// Interpolated crossing of `level` walking away from index `start`.
fn crossing_from(
    freqs: &[f64],
    mags: &[f64],
    start: usize,
    level: f64,
    step_right: bool,
) -> Option<f64> {
    let mut prev = start;
    loop {
        let next = if step_right {
            if prev + 1 >= mags.len() {
                return None;
            }
            prev + 1
        } else {
            if prev == 0 {
                return None;
            }
            prev - 1
        };
        if mags[next] >= level {
            let t = (level - mags[prev]) / (mags[next] - mags[prev]);
            return Some(freqs[prev] + t * (freqs[next] - freqs[prev]));
        }
        prev = next;
    }
}

/// Fit the notch model to a complex trace.
///
/// Initialization: dip location from the magnitude minimum, linewidth from
/// the half-depth crossings, dip depth and rotation from an algebraic circle
/// fit in the complex plane. Refinement: Levenberg–Marquardt over
/// `(f0, ln Q, ln Q_c, φ)` on the interleaved real/imaginary residuals.
pub fn fit_resonator(trace: &S21Trace) -> Result<ResonatorFit> {
    trace.validate()?;
    let n = trace.freqs_hz.len();
    if n < 50 {
        return Err(Error::data(format!("resonator fit needs >= 50 points, got {n}")));
    }
    let mags: Vec<f64> = trace.s21.iter().map(|z| z.norm()).collect();
    // Wing level from a high quantile: a median underestimates the baseline
    // (and with it the half-depth linewidth) when the dip fills the window.
    let baseline = {
        let mut v = mags.clone();
        v.sort_by(f64::total_cmp);
        v[((v.len() - 1) as f64 * 0.9).round() as usize]
    };
    let (min_idx, &min_mag) = mags
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let depth = baseline - min_mag;
    let noise = successive_diff_noise(&mags);
    if depth <= 0.0 || depth < 6.0 * noise {
        return Err(FitError::NoDipFound.into());
    }
    let f0_init = trace.freqs_hz[min_idx];
    let half = baseline - depth / 2.0;
    let left = crossing_from(&trace.freqs_hz, &mags, min_idx, half, false);
    let right = crossing_from(&trace.freqs_hz, &mags, min_idx, half, true);
    let (Some(left), Some(right)) = (left, right) else {
        return Err(Error::data(
            "dip is not fully contained: trace must span >= 5 linewidths",
        ));
    };
    let fwhm = right - left;
    let span = trace.freqs_hz[n - 1] - trace.freqs_hz[0];
    if span < 5.0 * fwhm {
        return Err(Error::data(format!(
            "trace spans {:.1} linewidths, need >= 5",
            span / fwhm
        )));
    }
    let q_init = (f0_init / fwhm).max(1.0);
    // Circle fit pins the dip diameter (Q/Q_c) and the rotation angle.
    let (depth_init, phi_init) = match kasa_circle(&trace.s21) {
        Some((center, radius)) => {
            let offset = Complex64::new(1.0, 0.0) - center;
            ((2.0 * radius).clamp(1e-6, 1.0), offset.arg())
        }
        None => ((depth / baseline).clamp(1e-6, 1.0), 0.0),
    };
    let qc_init = q_init / depth_init;
    let residuals = |p: &[f64]| -> Vec<f64> {
        let (f0, q, q_c, phi) = (p[0], p[1].exp(), p[2].exp(), p[3]);
        let mut out = Vec::with_capacity(2 * n);
        for (i, &f) in trace.freqs_hz.iter().enumerate() {
            let d = notch_model(f, f0, q, q_c, phi) - trace.s21[i];
            out.push(d.re);
            out.push(d.im);
        }
        out
    };
    let init = [f0_init, q_init.ln(), qc_init.ln(), phi_init];
    let fit = lm::fit(residuals, &init, &LmOptions::default())?;
    let f_res_hz = fit.params[0];
    let q = fit.params[1].exp();
    let q_c = fit.params[2].exp();
    let inv_int = 1.0 / q - 1.0 / q_c;
    let q_int = (inv_int > 1e-12 / q).then(|| 1.0 / inv_int);
    let mut covariance = [[0.0; 4]; 4];
    for (r, row) in covariance.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = fit.covariance[(r, c)];
        }
    }
    Ok(ResonatorFit {
        f_res_hz,
        q,
        q_c,
        q_int,
        asymmetry_rad: fit.params[3],
        f_res_sigma_hz: covariance[0][0].max(0.0).sqrt(),
        q_sigma: q * covariance[1][1].max(0.0).sqrt(),
        q_c_sigma: q_c * covariance[2][2].max(0.0).sqrt(),
        covariance,
        residual_rms: fit.residual_rms,
        iterations: fit.iterations,
    })
}

/// Dispersive shift between the two qubit states, with both underlying fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiEstimate {
    /// `χ = (f_res,0 - f_res,1)/2`; positive when the excited-state cavity
    /// sits lower, negative if the traces are swapped.
    pub chi_hz: f64,
    pub chi_sigma_hz: f64,
    pub fit_state0: ResonatorFit,
    pub fit_state1: ResonatorFit,
}

/// Fit both traces and form `χ = (f_res,0 - f_res,1)/2`. Antisymmetric under
/// swapping the traces; the combined sigma adds the two fits in quadrature.
pub fn extract_chi(trace0: &S21Trace, trace1: &S21Trace) -> Result<ChiEstimate> {
    let fit_state0 = fit_resonator(trace0)?;
    let fit_state1 = fit_resonator(trace1)?;
    let chi_hz = 0.5 * (fit_state0.f_res_hz - fit_state1.f_res_hz);
    let chi_sigma_hz =
        0.5 * (fit_state0.f_res_sigma_hz.hypot(fit_state1.f_res_sigma_hz));
    Ok(ChiEstimate { chi_hz, chi_sigma_hz, fit_state0, fit_state1 })
}
