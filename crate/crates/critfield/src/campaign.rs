//! Campaign generation: a field ladder of synthetic transition curves,
//! reduced to critical-field points ready for fitting.
//!
//! For each field in the ladder one `R(T)` curve is generated (with its
//! own derived seed), the transition is extracted, and the point
//! `(t = T/t_ref, h = nominal field)` is emitted with an uncertainty that
//! combines the extraction temperature error, mapped through the local
//! slope of the generating critical curve, with the field-setting error.

use crate::error::{Error, Result};
use crate::fit::CriticalPoint;
use crate::model::{cavity_field, FilmParams, ReducedTemp, ValidityPolicy};
use crate::signal::Signal;
use crate::synth::{
    derive_seed, extract_transition_at, transition_curve, transition_midpoint, ApparatusParams,
    Transition, TransitionRecord,
};

/// Campaign controls beyond the physics inputs.
#[derive(Debug, Clone, Copy)]
pub struct CampaignOptions {
    /// Half-width of each curve's temperature window \[K\].
    pub pad: f64,
    /// Temperature grid step \[K\].
    pub step: f64,
    /// Crossing level as a fraction of the step height.
    pub fraction: f64,
}

impl Default for CampaignOptions {
    fn default() -> Self {
        Self {
            pad: 25e-3,
            step: 0.5e-3,
            fraction: 0.5,
        }
    }
}

/// One generated curve together with its extracted transition.
pub struct CampaignCurve {
    pub field: f64,
    pub records: Vec<TransitionRecord>,
    pub transition: Transition,
}

/// A full campaign: per-field curves and the reduced critical points.
pub struct Campaign {
    pub curves: Vec<CampaignCurve>,
    pub points: Vec<CriticalPoint>,
    /// Reference temperature the points are reduced by \[K\].
    pub t_ref: f64,
}

/// Evenly spaced field ladder spanning a reduced-temperature window:
/// the first field transits at `t_window.1`, the last at `t_window.0`.
pub fn field_ladder(
    p: &FilmParams,
    s: &dyn Signal,
    t_window: (f64, f64),
    n_fields: usize,
) -> Result<Vec<f64>> {
    if n_fields < 2 {
        return Err(Error::Domain(format!(
            "field ladder needs at least 2 fields, got {n_fields}"
        )));
    }
    if !(0.0 < t_window.0 && t_window.0 < t_window.1 && t_window.1 < 1.0) {
        return Err(Error::Domain(format!(
            "t window ({}, {}) must be increasing within (0, 1)",
            t_window.0, t_window.1
        )));
    }
    let h_hi = cavity_field(p, ReducedTemp::new(t_window.0)?, s, ValidityPolicy::Waive)?;
    let h_lo = cavity_field(p, ReducedTemp::new(t_window.1)?, s, ValidityPolicy::Waive)?;
    Ok((0..n_fields)
        .map(|i| h_lo + (h_hi - h_lo) * i as f64 / (n_fields - 1) as f64)
        .collect())
}

/// Run a campaign over `fields`, deriving one seed per curve from `seed`.
pub fn run_campaign(
    p: &FilmParams,
    s: &dyn Signal,
    a: &ApparatusParams,
    fields: &[f64],
    opts: &CampaignOptions,
    seed: u64,
) -> Result<Campaign> {
    if fields.is_empty() {
        return Err(Error::Domain(
            "campaign requires at least one field".to_string(),
        ));
    }
    if !(opts.step > 0.0 && opts.pad > opts.step) {
        return Err(Error::Domain(format!(
            "campaign grid needs 0 < step ({}) < pad ({})",
            opts.step, opts.pad
        )));
    }
    let mut curves = Vec::with_capacity(fields.len());
    let mut points = Vec::with_capacity(fields.len());
    for (idx, &field) in fields.iter().enumerate() {
        // The window is centered on the nominal-field midpoint; the
        // within-curve systematic shifts the true midpoint by less than a
        // millikelvin, well inside the pad.
        let t_mid = transition_midpoint(p, s, field)?;
        let n_steps = (2.0 * opts.pad / opts.step).round() as usize;
        let grid: Vec<f64> = (0..=n_steps)
            .map(|i| t_mid - opts.pad + i as f64 * opts.step)
            .collect();
        let records = transition_curve(p, s, a, field, &grid, derive_seed(seed, idx as u64))?;
        let (transition, point) = reduce_curve(p, s, a, field, &records, opts.fraction)?;
        points.push(point);
        curves.push(CampaignCurve {
            field,
            records,
            transition,
        });
    }
    Ok(Campaign {
        curves,
        points,
        t_ref: p.t_c,
    })
}

/// Reduce one transition curve (generated or measured) to a critical
/// point: extract the crossing at `fraction` of the step, reduce the
/// temperature by `T_c`, and map the temperature uncertainty through the
/// local slope of the critical curve, adding the field-setting error in
/// quadrature.
pub fn reduce_curve(
    p: &FilmParams,
    s: &dyn Signal,
    a: &ApparatusParams,
    field: f64,
    records: &[TransitionRecord],
    fraction: f64,
) -> Result<(Transition, CriticalPoint)> {
    let transition = extract_transition_at(records, fraction)?;
    let t_point = transition.temperature / p.t_c;
    if !(0.0 < t_point && t_point < 1.0) {
        return Err(Error::Extraction(format!(
            "extracted transition {} K falls outside (0, T_c)",
            transition.temperature
        )));
    }
    let slope_t = cavity_slope_per_kelvin(p, s, t_point)?;
    let sigma_h =
        ((slope_t * transition.uncertainty).powi(2) + (field * a.current_rel_err).powi(2)).sqrt();
    let point = CriticalPoint {
        t: t_point,
        h: field,
        sigma_h: if sigma_h > 0.0 { Some(sigma_h) } else { None },
    };
    Ok((transition, point))
}

/// |dH/dT| of the in-cavity critical curve at reduced temperature `t`,
/// by central differences (exact enough for uncertainty mapping and
/// valid for any signal strategy).
fn cavity_slope_per_kelvin(p: &FilmParams, s: &dyn Signal, t: f64) -> Result<f64> {
    let dt = 1e-6;
    let lo = (t - dt).max(0.0);
    let hi = (t + dt).min(1.0);
    let h_lo = cavity_field(p, ReducedTemp::new(lo)?, s, ValidityPolicy::Waive)?;
    let h_hi = cavity_field(p, ReducedTemp::new(hi)?, s, ValidityPolicy::Waive)?;
    Ok(((h_hi - h_lo) / (hi - lo) / p.t_c).abs())
}
