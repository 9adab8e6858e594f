//! Sensitivity and alignment budgets, and the detectability verdict.
//!
//! Starting from a target (or achieved) relative field sensitivity
//! `delta_r`, the budget chain derives what it demands from the rest of
//! the measurement: the reduced-temperature sensitivity through the
//! logarithmic slope of the critical curve, the absolute temperature
//! sensitivity through `T_c`, and the alignment tolerance through the
//! parallel/perpendicular anisotropy ratio. Detection of a cavity signal
//! aggregates the per-point ratios `r(t_i)/delta_r_i` in quadrature into a
//! single signal-to-noise figure compared against a threshold.
//!
//! Near `t = 1` the critical curve steepens without bound, so temperature
//! requirements tighten to zero and the model itself loses validity;
//! budget evaluation is therefore cut off at a configurable `t_max`.

use crate::error::{Error, Result};
use crate::model::{parallel_field_log_derivative, perp_parallel_ratio, FilmParams, ReducedTemp};
use crate::signal::Signal;

/// Propagated sensitivity requirements for one evaluation temperature.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Budget {
    /// Relative field sensitivity the budget is derived from.
    pub delta_r: f64,
    /// Required reduced-temperature sensitivity.
    pub delta_t: f64,
    /// Required absolute temperature sensitivity \[K\].
    pub delta_temp: f64,
    /// Maximum tolerable misalignment \[rad\].
    pub delta_theta: f64,
    /// Reduced temperature the budget is evaluated at.
    pub t_eval: f64,
}

/// Cutoffs and thresholds for budget and detection computations.
#[derive(Debug, Clone, Copy)]
pub struct BudgetOptions {
    /// Reduced-temperature cutoff; points above it are excluded.
    pub t_max: f64,
    /// Detection threshold on the aggregated signal-to-noise ratio.
    pub threshold: f64,
}

impl Default for BudgetOptions {
    fn default() -> Self {
        Self {
            t_max: 0.995,
            threshold: 5.0,
        }
    }
}

fn check_open_unit(t: f64) -> Result<f64> {
    if !(t.is_finite() && t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!(
            "budget evaluation requires 0 < t < 1, got {t} \
             (the requirement tightens to zero as t approaches 1)"
        )));
    }
    Ok(t)
}

fn check_delta_r(delta_r: f64) -> Result<f64> {
    if !(delta_r.is_finite() && delta_r > 0.0) {
        return Err(Error::Domain(format!(
            "delta_r must be finite and positive, got {delta_r}"
        )));
    }
    Ok(delta_r)
}

/// Temperature sensitivity implied by a relative field sensitivity:
/// `delta_t = delta_r * |d ln H / dt|^-1`, `delta_T = delta_t * T_c`.
/// Returns `(delta_t, delta_T \[K\])`.
pub fn temp_requirement(p: &FilmParams, t: f64, delta_r: f64) -> Result<(f64, f64)> {
    check_open_unit(t)?;
    check_delta_r(delta_r)?;
    let slope = parallel_field_log_derivative(p, ReducedTemp::new(t)?)?.abs();
    let delta_t = delta_r / slope;
    Ok((delta_t, delta_t * p.t_c))
}

/// Closed-form single-film version: with `H ~ sqrt(1 - t)` the
/// logarithmic slope is `1/(2(1-t))`, so `delta_t = 2 (1 - t) delta_r`.
pub fn single_film_temp_requirement(t: f64, delta_r: f64) -> Result<f64> {
    check_open_unit(t)?;
    check_delta_r(delta_r)?;
    Ok(2.0 * (1.0 - t) * delta_r)
}

/// Maximum tolerable misalignment for a relative field sensitivity:
/// `delta_theta_max = delta_r / (H_par/H_perp)(t)` \[rad\].
pub fn alignment_requirement(p: &FilmParams, t: f64, delta_r: f64) -> Result<f64> {
    check_open_unit(t)?;
    check_delta_r(delta_r)?;
    Ok(delta_r / perp_parallel_ratio(p, ReducedTemp::new(t)?)?)
}

/// Full budget at one evaluation temperature.
pub fn budget_at(p: &FilmParams, t: f64, delta_r: f64) -> Result<Budget> {
    let (delta_t, delta_temp) = temp_requirement(p, t, delta_r)?;
    let delta_theta = alignment_requirement(p, t, delta_r)?;
    Ok(Budget {
        delta_r,
        delta_t,
        delta_temp,
        delta_theta,
        t_eval: t,
    })
}

/// Detection outcome.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Detection {
    /// Quadrature-aggregated signal-to-noise ratio
    /// `sqrt(sum_i (r(t_i)/delta_r_i)^2)`.
    pub snr: f64,
    pub threshold: f64,
    pub detectable: bool,
    /// Points that survived the `t_max` cutoff.
    pub points_used: usize,
}

/// Decide whether a deviation signal is detectable given per-point
/// relative sensitivities on a reduced-temperature grid.
///
/// Grid points above `opts.t_max` are excluded (the model is not trusted
/// there); at least one point must survive. `delta_r` must either match
/// the grid length or contain a single value broadcast to every point.
pub fn detectability(
    delta_r: &[f64],
    t_grid: &[f64],
    s: &dyn Signal,
    opts: &BudgetOptions,
) -> Result<Detection> {
    if t_grid.is_empty() {
        return Err(Error::Domain(
            "detectability requires a nonempty t grid".to_string(),
        ));
    }
    if delta_r.len() != t_grid.len() && delta_r.len() != 1 {
        return Err(Error::Domain(format!(
            "delta_r must have 1 or {} entries, got {}",
            t_grid.len(),
            delta_r.len()
        )));
    }
    let mut sum = 0.0;
    let mut used = 0;
    for (i, &t) in t_grid.iter().enumerate() {
        check_open_unit(t)?;
        if t > opts.t_max {
            continue;
        }
        let dr = check_delta_r(if delta_r.len() == 1 {
            delta_r[0]
        } else {
            delta_r[i]
        })?;
        let r = s.ratio(ReducedTemp::new(t)?);
        sum += (r / dr).powi(2);
        used += 1;
    }
    if used == 0 {
        return Err(Error::Domain(format!(
            "no grid points survive the t_max = {} cutoff",
            opts.t_max
        )));
    }
    let snr = sum.sqrt();
    Ok(Detection {
        snr,
        threshold: opts.threshold,
        detectable: snr >= opts.threshold,
        points_used: used,
    })
}

/// One row of a budget curve.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct BudgetRow {
    pub t: f64,
    pub delta_t: f64,
    /// \[K\]
    pub delta_temp: f64,
    /// \[rad\]
    pub delta_theta_max: f64,
    /// Signal ratio at this temperature.
    pub r: f64,
    /// Per-point detection contribution `r/delta_r`.
    pub snr_contribution: f64,
}

/// Budget curve over a reduced-temperature window, clipped at
/// `opts.t_max`, with `n` evenly spaced evaluation points.
pub fn budget_curve(
    p: &FilmParams,
    s: &dyn Signal,
    delta_r: f64,
    window: (f64, f64),
    n: usize,
    opts: &BudgetOptions,
) -> Result<Vec<BudgetRow>> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "budget curve needs at least 2 points, got {n}"
        )));
    }
    let (lo, hi) = (window.0, window.1.min(opts.t_max));
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Domain(format!(
            "empty budget window after t_max clipping: ({lo}, {hi})"
        )));
    }
    (0..n)
        .map(|i| {
            let t = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let b = budget_at(p, t, delta_r)?;
            let r = s.ratio(ReducedTemp::new(t)?);
            Ok(BudgetRow {
                t,
                delta_t: b.delta_t,
                delta_temp: b.delta_temp,
                delta_theta_max: b.delta_theta,
                r,
                snr_contribution: r / delta_r,
            })
        })
        .collect()
}
