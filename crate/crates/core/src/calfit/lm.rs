//! Dense Levenberg–Marquardt least squares with numeric Jacobians.
//!
//! The fits in this crate have at most a handful of parameters and a few
//! thousand residuals, so a dense normal-equations solver with Marquardt
//! damping is simple, fast, and easy to audit. Parameters that must stay
//! positive are fitted in log space by the callers.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::FitError;

/// Solver knobs; the defaults suit all fits in this crate.
#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative decrease of the squared-residual sum that counts as converged.
    pub ftol: f64,
    /// Relative parameter step that counts as converged.
    pub xtol: f64,
    /// Initial Marquardt damping.
    pub lambda_init: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions { max_iterations: 200, ftol: 1e-12, xtol: 1e-12, lambda_init: 1e-3 }
    }
}

/// Converged fit: parameters, scaled covariance, and residual statistics.
#[derive(Debug, Clone)]
pub struct LmFit {
    pub params: Vec<f64>,
    /// `(SSR/(m-n)) · (JᵀJ)⁻¹` at the solution.
    pub covariance: DMatrix<f64>,
    pub ssr: f64,
    pub residual_rms: f64,
    pub iterations: usize,
}

/// Central-difference Jacobian, step `1e-6·max(|p_j|, 1)` per column.
fn jacobian<F>(f: &F, p: &[f64], m: usize) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = p.len();
    let mut j = DMatrix::zeros(m, n);
    let mut work = p.to_vec();
    for col in 0..n {
        let h = 1e-6 * p[col].abs().max(1.0);
        work[col] = p[col] + h;
        let hi = f(&work);
        work[col] = p[col] - h;
        let lo = f(&work);
        work[col] = p[col];
        for row in 0..m {
            j[(row, col)] = (hi[row] - lo[row]) / (2.0 * h);
        }
    }
    j
}

/// Minimize `|f(p)|²` from `init`. `f` returns the residual vector; its
/// length must not change between calls and must exceed the parameter count.
pub fn fit<F>(f: F, init: &[f64], opts: &LmOptions) -> Result<LmFit, FitError>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = init.len();
    let mut p = init.to_vec();
    let mut r = DVector::from_vec(f(&p));
    let m = r.len();
    if m <= n {
        return Err(FitError::Degenerate(format!(
            "{m} residuals cannot determine {n} parameters"
        )));
    }
    let mut ssr = r.norm_squared();
    let mut lambda = opts.lambda_init;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        let j = jacobian(&f, &p, m);
        let a = j.transpose() * &j;
        let g = j.transpose() * &r;
        // Try increasingly damped steps until one lowers the residual.
        let mut accepted = false;
        while lambda <= 1e14 {
            let mut damped = a.clone();
            for k in 0..n {
                damped[(k, k)] += lambda * a[(k, k)].max(1e-300);
            }
            if let Some(chol) = Cholesky::new(damped) {
                let delta = chol.solve(&(-&g));
                let trial: Vec<f64> = (0..n).map(|k| p[k] + delta[k]).collect();
                let r_trial = DVector::from_vec(f(&trial));
                let ssr_trial = r_trial.norm_squared();
                if ssr_trial.is_finite() && ssr_trial < ssr {
                    let drop = ssr - ssr_trial;
                    let step: f64 = (0..n)
                        .map(|k| (delta[k] / p[k].abs().max(1.0)).abs())
                        .fold(0.0, f64::max);
                    p = trial;
                    r = r_trial;
                    ssr = ssr_trial;
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    if drop <= opts.ftol * ssr.max(1e-300) || step <= opts.xtol {
                        converged = true;
                    }
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No damping improves the fit: we are at a (local) minimum.
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(FitError::NotConverged(iterations));
    }
    // Covariance from the undamped normal equations at the solution. The
    // parameters live on wildly different scales, so equilibrate JᵀJ to unit
    // diagonal first; the scaled matrix is invertible exactly when the
    // parameters are locally independent, and near-redundant directions that
    // rounding lets slip through the factorization are caught by checking
    // the inverse against the identity.
    let j = jacobian(&f, &p, m);
    let a = j.transpose() * &j;
    let mut d = vec![0.0; n];
    for k in 0..n {
        let akk = a[(k, k)];
        if !(akk > 0.0) {
            return Err(FitError::Degenerate(format!(
                "parameter {k} has no effect on the residuals"
            )));
        }
        d[k] = 1.0 / akk.sqrt();
    }
    let mut s = a;
    for row in 0..n {
        for col in 0..n {
            s[(row, col)] *= d[row] * d[col];
        }
    }
    let singular = || FitError::Degenerate("singular normal equations at solution".into());
    let mut inv = Cholesky::new(s.clone()).map(|c| c.inverse()).ok_or_else(singular)?;
    if ((&s * &inv) - DMatrix::identity(n, n)).amax() > 1e-6 {
        return Err(singular());
    }
    for row in 0..n {
        for col in 0..n {
            inv[(row, col)] *= d[row] * d[col];
        }
    }
    let scale = ssr / (m - n) as f64;
    Ok(LmFit {
        params: p,
        covariance: inv * scale,
        ssr,
        residual_rms: (ssr / m as f64).sqrt(),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fits_exact_line() {
        // y = 2x + 1 sampled exactly: residuals reach zero.
        let xs: Vec<f64> = (0..20).map(|i| i as f64 / 5.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let f = |p: &[f64]| -> Vec<f64> {
            xs.iter().zip(&ys).map(|(x, y)| p[0] * x + p[1] - y).collect()
        };
        let fit = fit(f, &[0.0, 0.0], &LmOptions::default()).unwrap();
        assert_relative_eq!(fit.params[0], 2.0, epsilon = 1e-9);
        assert_relative_eq!(fit.params[1], 1.0, epsilon = 1e-9);
        assert!(fit.residual_rms < 1e-9);
    }

    #[test]
    fn fits_noisy_exponential_with_sane_covariance() {
        // y = 3·exp(-0.7 x) with deterministic "noise"; the recovered sigmas
        // should bracket the truth.
        let xs: Vec<f64> = (0..200).map(|i| i as f64 / 40.0).collect();
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| 3.0 * (-0.7 * x).exp() + 0.01 * ((i * 37 % 17) as f64 / 8.0 - 1.0))
            .collect();
        let f = |p: &[f64]| -> Vec<f64> {
            xs.iter().zip(&ys).map(|(x, y)| p[0] * (p[1] * x).exp() - y).collect()
        };
        let fit = fit(f, &[1.0, -0.2], &LmOptions::default()).unwrap();
        let (a, k) = (fit.params[0], fit.params[1]);
        let (sa, sk) = (fit.covariance[(0, 0)].sqrt(), fit.covariance[(1, 1)].sqrt());
        assert!((a - 3.0).abs() < 4.0 * sa + 1e-3, "a = {a} ± {sa}");
        assert!((k + 0.7).abs() < 4.0 * sk + 1e-3, "k = {k} ± {sk}");
    }

    #[test]
    fn rejects_underdetermined_problems() {
        let f = |p: &[f64]| -> Vec<f64> { vec![p[0] + p[1]] };
        let err = fit(f, &[0.0, 0.0], &LmOptions::default()).unwrap_err();
        assert!(matches!(err, FitError::Degenerate(_)));
    }

    #[test]
    fn reports_singular_covariance() {
        // Two perfectly redundant parameters: residual fit succeeds but the
        // normal equations cannot be inverted.
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let f = |p: &[f64]| -> Vec<f64> { xs.iter().map(|x| p[0] + p[1] - x * 0.0).collect() };
        let err = fit(f, &[0.0, 0.0], &LmOptions::default()).unwrap_err();
        assert!(matches!(err, FitError::Degenerate(_)));
    }
}
