//! Weighted nonlinear least-squares fit of critical-field points to the
//! thin-film parallel-field model, with covariance, residuals and
//! linearized confidence bands.
//!
//! The model is reparameterized to avoid the degeneracy between the
//! thermodynamical field and the penetration depth, which enter only
//! through their product:
//!
//! * `amplitude`  — `A = sqrt(24) * H_T(0) * lambda0 / D` \[G\],
//! * `t_c`        — critical temperature \[K\],
//! * `correction` — nucleation coefficient `B = (9/pi^6) * (D/xi0)^2`.
//!
//! so that `H(t) = A * sqrt((1-u^2)/(1+u^2)) * (1 + B*(1-u))` with
//! `u = t * t_ref / T_c`. Input reduced temperatures are understood as
//! reduced by a stated reference temperature `t_ref` (the initial-guess
//! `T_c`), which anchors them on the absolute temperature axis; the fitted
//! `T_c` is reported in kelvin. The physical `lambda0` and `xi0` are
//! recovered from `A` and `B` by back-substitution with the user-supplied
//! `H_T(0)` and thickness.
//!
//! The optimizer is a damped Gauss-Newton iteration with a
//! Levenberg-Marquardt damping schedule (start 1e-3, times 0.3 on an
//! accepted step, times 3 on a rejected one). Derivatives are taken by
//! central finite differences throughout; no analytic gradient enters the
//! optimization path, so independent difference checks genuinely validate
//! it.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::FilmParams;

/// Names of the fit parameters, in vector order.
pub const PARAM_NAMES: [&str; 3] = ["amplitude", "t_c", "correction"];

/// One critical-field point `(t, h)` with optional absolute uncertainty.
///
/// `t` is reduced by the reference temperature that travels with the data
/// set; `h` and `sigma_h` are in gauss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub t: f64,
    pub h: f64,
    pub sigma_h: Option<f64>,
}

impl CriticalPoint {
    pub fn new(t: f64, h: f64, sigma_h: Option<f64>) -> Result<Self> {
        if !(t.is_finite() && t > 0.0 && t < 1.0) {
            return Err(Error::Domain(format!(
                "point t must lie in (0, 1), got {t}"
            )));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Domain(format!(
                "point h must be finite and positive, got {h}"
            )));
        }
        if let Some(s) = sigma_h {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::Domain(format!(
                    "sigma_h must be finite and positive, got {s}"
                )));
            }
        }
        Ok(Self { t, h, sigma_h })
    }
}

/// How the supplied uncertainties scale the parameter covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    /// `sigma_h` are trusted absolute uncertainties: the covariance is the
    /// unscaled inverse normal matrix.
    #[default]
    Absolute,
    /// `sigma_h` fix only relative weights: the covariance is scaled by
    /// the reduced chi-square.
    Relative,
}

/// Fit controls.
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Parameters held at their initial values; see [`PARAM_NAMES`].
    pub fixed: BTreeSet<String>,
    pub sigma_mode: SigmaMode,
    pub max_iterations: usize,
    /// Convergence threshold on both the relative step and the relative
    /// cost change.
    pub tolerance: f64,
    /// Reference temperature `t_ref` \[K\] that de-reduces the input `t`
    /// values (`T = t * t_ref`). This is a property of the data set — the
    /// nominal `T_c` it was reduced with — and defaults to `init.t_c`
    /// when `None`, i.e. the convention that the reducing reference and
    /// the starting guess coincide.
    pub t_ref: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            fixed: BTreeSet::new(),
            sigma_mode: SigmaMode::Absolute,
            max_iterations: 200,
            tolerance: 1e-10,
            t_ref: None,
        }
    }
}

/// Outcome of a critical-field fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// Fitted composite amplitude `A` \[G\].
    pub amplitude: f64,
    /// Fitted critical temperature \[K\].
    pub t_c: f64,
    /// Fitted nucleation coefficient `B`.
    pub correction: f64,
    /// Standard errors of `(amplitude, t_c, correction)`; zero for fixed
    /// parameters.
    pub sigma: [f64; 3],
    /// Covariance over `(amplitude, t_c, correction)`; zero rows/columns
    /// for fixed parameters.
    pub covariance: [[f64; 3]; 3],
    /// Penetration depth from `A` via the supplied `H_T(0)` and thickness
    /// \[nm\], with its standard error.
    pub lambda0: f64,
    pub lambda0_sigma: f64,
    /// Coherence length from `B` via the supplied thickness \[nm\]; `None`
    /// when the fitted correction is not positive.
    pub xi0: Option<f64>,
    pub xi0_sigma: Option<f64>,
    /// Relative residuals `(u, (h_obs - h_model)/h_model)` with `u` the
    /// temperature reduced by the fitted `T_c`.
    pub residuals: Vec<(f64, f64)>,
    pub chi2: f64,
    pub dof: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Reference temperature that de-reduces the input `t` values \[K\].
    pub t_ref: f64,
    /// Range of input `t` covered by the data (for extrapolation warnings).
    pub t_range: (f64, f64),
    /// Whether uniform weights were substituted for missing `sigma_h`.
    pub uniform_weights: bool,
}

/// Confidence band evaluated at one temperature.
#[derive(Debug, Clone, Copy)]
pub struct Band {
    pub center: f64,
    pub low: f64,
    pub high: f64,
    /// True when the evaluation point lies outside the fitted `t` range.
    pub extrapolated: bool,
}

/// Model value at input-reduced temperature `t` for parameters
/// `(amplitude, t_c, correction)` with reference `t_ref`.
///
/// Above the fitted critical temperature (`u >= 1`) the field is zero; the
/// formula's analytic continuation is meaningless there.
pub fn model_field(theta: &[f64; 3], t_ref: f64, t: f64) -> f64 {
    let u = t * t_ref / theta[1];
    if u >= 1.0 {
        return 0.0;
    }
    let g = (((1.0 - u) * (1.0 + u)) / (1.0 + u * u)).sqrt();
    theta[0] * g * (1.0 + theta[2] * (1.0 - u))
}

struct Problem<'a> {
    points: &'a [CriticalPoint],
    sigmas: Vec<f64>,
    t_ref: f64,
    free: Vec<usize>,
}

impl Problem<'_> {
    fn residuals(&self, theta: &[f64; 3]) -> DVector<f64> {
        DVector::from_iterator(
            self.points.len(),
            self.points
                .iter()
                .zip(&self.sigmas)
                .map(|(p, s)| (p.h - model_field(theta, self.t_ref, p.t)) / s),
        )
    }

    fn cost(&self, theta: &[f64; 3]) -> f64 {
        self.residuals(theta).norm_squared()
    }

    /// Jacobian of the weighted residual vector with respect to the free
    /// parameters, by central finite differences.
    fn jacobian(&self, theta: &[f64; 3]) -> DMatrix<f64> {
        let m = self.points.len();
        let mut jac = DMatrix::zeros(m, self.free.len());
        for (col, &j) in self.free.iter().enumerate() {
            let column = residual_jacobian_column(self.points, &self.sigmas, self.t_ref, theta, j);
            for i in 0..m {
                jac[(i, col)] = column[i];
            }
        }
        jac
    }
}

/// One column (parameter `j`) of the weighted-residual Jacobian used by
/// the optimizer: central finite differences with the [`fd_step`] rule.
/// Exposed so independent derivative checks can exercise the exact
/// evaluation path of the fit.
pub fn residual_jacobian_column(
    points: &[CriticalPoint],
    sigmas: &[f64],
    t_ref: f64,
    theta: &[f64; 3],
    j: usize,
) -> Vec<f64> {
    let step = fd_step(theta[j]);
    let mut plus = *theta;
    let mut minus = *theta;
    plus[j] += step;
    minus[j] -= step;
    points
        .iter()
        .zip(sigmas)
        .map(|(p, s)| {
            let rp = (p.h - model_field(&plus, t_ref, p.t)) / s;
            let rm = (p.h - model_field(&minus, t_ref, p.t)) / s;
            (rp - rm) / (2.0 * step)
        })
        .collect()
}

/// Central-difference step: relative cube-root-of-epsilon scaling with an
/// absolute floor for near-zero parameters.
pub fn fd_step(value: f64) -> f64 {
    (6e-6 * value.abs()).max(1e-9)
}

/// Fit critical-field points to the parallel-field model.
///
/// `init` provides the starting point (through its amplitude, `T_c` and
/// nucleation coefficient), the reference temperature that de-reduces the
/// input `t` values, and the `H_T(0)` and thickness used to back out
/// `lambda0` and `xi0` from the fitted composite parameters.
///
/// Requires at least two more points than free parameters. Points without
/// `sigma_h` force uniform weights for the whole fit, in which case the
/// covariance is scaled by the reduced chi-square regardless of
/// [`SigmaMode`]. A fit that exhausts its iteration budget is returned
/// with `converged = false` rather than as an error; a singular normal
/// matrix is an error.
pub fn fit_critical_field(
    points: &[CriticalPoint],
    init: &FilmParams,
    opts: &FitOptions,
) -> Result<FitResult> {
    for name in &opts.fixed {
        if !PARAM_NAMES.contains(&name.as_str()) {
            return Err(Error::Fit(format!(
                "unknown fixed parameter {name:?}; valid names: {}",
                PARAM_NAMES.join(", ")
            )));
        }
    }
    let free: Vec<usize> = (0..3)
        .filter(|i| !opts.fixed.contains(PARAM_NAMES[*i]))
        .collect();
    if free.is_empty() {
        return Err(Error::Fit(
            "all parameters fixed, nothing to fit".to_string(),
        ));
    }
    if points.len() < free.len() + 2 {
        return Err(Error::Fit(format!(
            "need at least {} points for {} free parameters, got {}",
            free.len() + 2,
            free.len(),
            points.len()
        )));
    }
    for p in points {
        CriticalPoint::new(p.t, p.h, p.sigma_h)?;
    }

    let uniform_weights = points.iter().any(|p| p.sigma_h.is_none());

    // The optimizer works on a sorted copy so that floating-point
    // accumulation order, and hence the result, is exactly independent of
    // the input ordering; residuals are reported in input order below.
    let mut sorted: Vec<CriticalPoint> = points.to_vec();
    sorted.sort_by(|a, b| (a.t, a.h).partial_cmp(&(b.t, b.h)).expect("finite points"));
    let sigmas: Vec<f64> = if uniform_weights {
        vec![1.0; sorted.len()]
    } else {
        sorted.iter().map(|p| p.sigma_h.unwrap()).collect()
    };

    let t_ref = opts.t_ref.unwrap_or(init.t_c);
    if !(t_ref.is_finite() && t_ref > 0.0) {
        return Err(Error::Fit(format!(
            "t_ref must be finite and positive, got {t_ref}"
        )));
    }
    let problem = Problem {
        points: &sorted,
        sigmas,
        t_ref,
        free: free.clone(),
    };

    let mut theta = [init.amplitude(), init.t_c, init.nucleation_coefficient()];
    let mut cost = problem.cost(&theta);
    let mut damping = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let jac = problem.jacobian(&theta);
        let residuals = problem.residuals(&theta);
        let normal = jac.transpose() * &jac;
        let gradient = jac.transpose() * &residuals;

        let mut accepted = false;
        while damping < 1e15 {
            let mut damped = normal.clone();
            for d in 0..damped.nrows() {
                let scale = normal[(d, d)];
                damped[(d, d)] = scale + damping * if scale > 0.0 { scale } else { 1.0 };
            }
            let step = match damped.clone().cholesky() {
                Some(chol) => chol.solve(&(-&gradient)),
                None => match damped.lu().solve(&(-&gradient)) {
                    Some(s) => s,
                    None => return Err(Error::SingularNormalMatrix),
                },
            };
            let mut trial = theta;
            for (col, &j) in free.iter().enumerate() {
                trial[j] += step[col];
            }
            let trial_cost = problem.cost(&trial);
            if trial_cost <= cost && trial_cost.is_finite() {
                let rel_step = free
                    .iter()
                    .enumerate()
                    .map(|(col, &j)| (step[col] / theta[j].abs().max(1e-8)).abs())
                    .fold(0.0, f64::max);
                let rel_cost = (cost - trial_cost) / cost.max(1e-300);
                theta = trial;
                cost = trial_cost;
                damping *= 0.3;
                accepted = true;
                if rel_step < opts.tolerance && rel_cost < opts.tolerance {
                    converged = true;
                }
                break;
            }
            damping *= 3.0;
        }
        if !accepted || converged {
            break;
        }
    }

    // Covariance from the unscaled normal matrix at the optimum.
    let jac = problem.jacobian(&theta);
    let normal = jac.transpose() * &jac;
    let cov_free = normal
        .clone()
        .try_inverse()
        .ok_or(Error::SingularNormalMatrix)?;
    let dof = points.len().saturating_sub(free.len());
    let scale = if uniform_weights || opts.sigma_mode == SigmaMode::Relative {
        if dof > 0 {
            cost / dof as f64
        } else {
            1.0
        }
    } else {
        1.0
    };

    // Exactly symmetric by construction; the matrix inverse alone can
    // drift by an ulp across the diagonal.
    let mut covariance = [[0.0; 3]; 3];
    for (ci, &i) in free.iter().enumerate() {
        for (cj, &j) in free.iter().enumerate() {
            covariance[i][j] = 0.5 * (cov_free[(ci, cj)] + cov_free[(cj, ci)]) * scale;
        }
    }
    let mut sigma = [0.0; 3];
    for i in 0..3 {
        sigma[i] = covariance[i][i].max(0.0).sqrt();
    }

    // Back-substitution to physical lengths.
    let amp_to_lambda = init.thickness / (crate::model::SQRT_24 * init.h_t0);
    let lambda0 = theta[0] * amp_to_lambda;
    let lambda0_sigma = sigma[0] * amp_to_lambda;
    let (xi0, xi0_sigma) = if theta[2] > 0.0 {
        let pi3 = std::f64::consts::PI.powi(3);
        let xi = 3.0 * init.thickness / (pi3 * theta[2].sqrt());
        (Some(xi), Some(xi * sigma[2] / (2.0 * theta[2])))
    } else {
        (None, None)
    };

    let residuals = points
        .iter()
        .map(|p| {
            let m = model_field(&theta, t_ref, p.t);
            (p.t * t_ref / theta[1], (p.h - m) / m)
        })
        .collect();

    let (mut t_lo, mut t_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        t_lo = t_lo.min(p.t);
        t_hi = t_hi.max(p.t);
    }

    Ok(FitResult {
        amplitude: theta[0],
        t_c: theta[1],
        correction: theta[2],
        sigma,
        covariance,
        lambda0,
        lambda0_sigma,
        xi0,
        xi0_sigma,
        residuals,
        chi2: cost,
        dof,
        converged,
        iterations,
        t_ref,
        t_range: (t_lo, t_hi),
        uniform_weights,
    })
}

impl FitResult {
    pub fn theta(&self) -> [f64; 3] {
        [self.amplitude, self.t_c, self.correction]
    }

    /// Model value at input-reduced temperature `t`.
    pub fn model(&self, t: f64) -> f64 {
        model_field(&self.theta(), self.t_ref, t)
    }
}

/// Linearized (delta-method) confidence band of the fitted model at
/// input-reduced temperature `t`:
/// `H(t) +- z(level) * sqrt(g' C g)` with `g` the central-difference
/// gradient of the model in the fitted parameters.
///
/// Evaluation outside the fitted range is allowed but flagged through
/// [`Band::extrapolated`].
pub fn confidence_band(fr: &FitResult, t: f64, level: f64) -> Result<Band> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Domain(format!(
            "band evaluation t must be positive, got {t}"
        )));
    }
    let z = Normal::standard().inverse_cdf(0.5 * (1.0 + level));
    let theta = fr.theta();
    let mut gradient = [0.0; 3];
    for (j, g) in gradient.iter_mut().enumerate() {
        let step = fd_step(theta[j]);
        let mut plus = theta;
        let mut minus = theta;
        plus[j] += step;
        minus[j] -= step;
        *g = (model_field(&plus, fr.t_ref, t) - model_field(&minus, fr.t_ref, t)) / (2.0 * step);
    }
    let mut var = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            var += gradient[i] * fr.covariance[i][j] * gradient[j];
        }
    }
    let half_width = z * var.max(0.0).sqrt();
    let center = fr.model(t);
    Ok(Band {
        center,
        low: center - half_width,
        high: center + half_width,
        extrapolated: t < fr.t_range.0 || t > fr.t_range.1,
    })
}

/// Root-mean-square relative residual within a reduced-temperature window
/// `(lo, hi)` — the operational definition of the achieved relative field
/// sensitivity. The window is interpreted on the fitted reduced axis (the
/// first component of [`FitResult::residuals`]).
pub fn residual_sensitivity(fr: &FitResult, window: (f64, f64)) -> Result<f64> {
    if !(window.0.is_finite() && window.1.is_finite() && window.0 < window.1) {
        return Err(Error::Domain(format!(
            "window must satisfy lo < hi, got ({}, {})",
            window.0, window.1
        )));
    }
    let selected: Vec<f64> = fr
        .residuals
        .iter()
        .filter(|(u, _)| (window.0..=window.1).contains(u))
        .map(|&(_, r)| r)
        .collect();
    if selected.is_empty() {
        return Err(Error::Domain(format!(
            "no fitted points inside the window ({}, {})",
            window.0, window.1
        )));
    }
    Ok((selected.iter().map(|r| r * r).sum::<f64>() / selected.len() as f64).sqrt())
}
