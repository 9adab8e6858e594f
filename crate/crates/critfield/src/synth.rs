//! Synthetic four-wire resistance transition curves and their reduction
//! back to critical points.
//!
//! A measurement run fixes the applied field and records `R(T)` while the
//! temperature drifts through the transition. The generator models the
//! transition as a logistic step whose midpoint sits at the temperature
//! where the (cavity or simple-film) critical field equals the applied
//! field, with the 10%-90% width, plateau levels and per-sample Gaussian
//! noise taken from [`ApparatusParams`]. The field-setting error of the
//! coil supply enters once per curve as a multiplicative offset, i.e. a
//! systematic within the sweep, while the recorded field stays at the
//! nominal setting.
//!
//! Everything is reproducible: the same seed yields bit-identical curves,
//! and campaign-level code derives per-curve seeds with [`derive_seed`] so
//! parallel generation order cannot change the output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{cavity_field, FilmParams, ReducedTemp, ValidityPolicy};
use crate::signal::Signal;

/// Logistic 10%-90% width in units of the logistic scale: `2 ln 9`.
const WIDTH_TO_SCALE: f64 = 4.394449154672439;

/// Read-out and field-supply characteristics of the measurement chain.
///
/// Resistances in milliohm, widths in millikelvin, coil constant in
/// gauss per milliampere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApparatusParams {
    /// Normal-state resistance just above the transition \[mOhm\].
    pub r_normal: f64,
    /// Residual resistance below the transition \[mOhm\].
    pub r_residual: f64,
    /// 10%-90% transition width \[mK\].
    pub width: f64,
    /// Per-sample Gaussian resistance noise \[mOhm\].
    pub noise_sigma: f64,
    /// Field produced per unit coil current \[G/mA\].
    pub coil_constant: f64,
    /// Relative error of the field setting (dimensionless).
    pub current_rel_err: f64,
}

impl ApparatusParams {
    pub fn new(
        r_normal: f64,
        r_residual: f64,
        width: f64,
        noise_sigma: f64,
        coil_constant: f64,
        current_rel_err: f64,
    ) -> Result<Self> {
        let all = [
            r_normal,
            r_residual,
            width,
            noise_sigma,
            coil_constant,
            current_rel_err,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(
                "apparatus parameters must all be finite".to_string(),
            ));
        }
        if r_residual < 0.0 || r_normal <= r_residual {
            return Err(Error::Domain(format!(
                "need r_normal > r_residual >= 0, got r_normal {r_normal}, r_residual {r_residual}"
            )));
        }
        if width <= 0.0 {
            return Err(Error::Domain(format!(
                "transition width must be positive, got {width}"
            )));
        }
        if noise_sigma < 0.0 {
            return Err(Error::Domain(format!(
                "noise_sigma must be non-negative, got {noise_sigma}"
            )));
        }
        if coil_constant <= 0.0 {
            return Err(Error::Domain(format!(
                "coil constant must be positive, got {coil_constant}"
            )));
        }
        if current_rel_err < 0.0 {
            return Err(Error::Domain(format!(
                "current_rel_err must be non-negative, got {current_rel_err}"
            )));
        }
        Ok(Self {
            r_normal,
            r_residual,
            width,
            noise_sigma,
            coil_constant,
            current_rel_err,
        })
    }

    /// Logistic scale parameter corresponding to the 10%-90% width \[K\].
    pub fn logistic_scale_kelvin(&self) -> f64 {
        self.width * 1e-3 / WIDTH_TO_SCALE
    }
}

/// One measurement sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionRecord {
    /// Sample temperature \[K\].
    pub temperature: f64,
    /// Recorded (nominal) applied field \[G\].
    pub field: f64,
    /// Measured resistance \[mOhm\].
    pub resistance: f64,
}

/// Deterministically derive an independent sub-seed from a base seed and a
/// stream index (splitmix64 over the combined words).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Temperature at which the in-cavity critical field equals `field` \[K\].
///
/// Solved by bisection on the reduced-temperature axis; the critical curve
/// decreases from its zero-temperature value to zero at `t = 1`, so a
/// solution exists for every `0 <= field <= H(0)`. `field = 0` maps to
/// `T_c` exactly.
pub fn transition_midpoint(p: &FilmParams, s: &dyn Signal, field: f64) -> Result<f64> {
    if !field.is_finite() || field < 0.0 {
        return Err(Error::Domain(format!(
            "field must be finite and non-negative, got {field}"
        )));
    }
    if field == 0.0 {
        return Ok(p.t_c);
    }
    let h0 = cavity_field(p, ReducedTemp::new(0.0)?, s, ValidityPolicy::Waive)?;
    if field > h0 {
        return Err(Error::NoTransition(format!(
            "field {field} G exceeds the zero-temperature critical field {h0:.6} G"
        )));
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let h = cavity_field(p, ReducedTemp::new(mid)?, s, ValidityPolicy::Waive)?;
        if h > field {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON {
            break;
        }
    }
    Ok(0.5 * (lo + hi) * p.t_c)
}

/// Generate one synthetic transition curve at fixed applied field.
///
/// `t_grid` holds the sample temperatures in kelvin, strictly increasing.
/// For each grid temperature the resistance is
/// `r_residual + (r_normal - r_residual) * sigmoid((T - T_mid)/w) + noise`,
/// where `T_mid` is the true transition midpoint at the actual field
/// (nominal field times the per-curve setting error) and `w` realizes the
/// configured 10%-90% width. Deterministic for a fixed seed.
pub fn transition_curve(
    p: &FilmParams,
    s: &dyn Signal,
    a: &ApparatusParams,
    field: f64,
    t_grid: &[f64],
    seed: u64,
) -> Result<Vec<TransitionRecord>> {
    if t_grid.is_empty() {
        return Err(Error::Domain(
            "temperature grid must be nonempty".to_string(),
        ));
    }
    if t_grid.iter().any(|t| !t.is_finite() || *t <= 0.0) || t_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::Domain(
            "temperature grid must be strictly increasing and positive".to_string(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");

    // Field-setting systematic: one multiplicative draw per curve.
    let eps: f64 = unit.sample(&mut rng) * a.current_rel_err;
    let actual_field = field * (1.0 + eps);
    let t_mid = transition_midpoint(p, s, actual_field.max(0.0))?;

    let w = a.logistic_scale_kelvin();
    let step = a.r_normal - a.r_residual;
    let records = t_grid
        .iter()
        .map(|&temp| {
            let x = (temp - t_mid) / w;
            let noise: f64 = unit.sample(&mut rng) * a.noise_sigma;
            TransitionRecord {
                temperature: temp,
                field,
                resistance: a.r_residual + step * logistic(x) + noise,
            }
        })
        .collect();
    Ok(records)
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Result of locating a transition in a measured curve.
#[derive(Debug, Clone, Copy)]
pub struct Transition {
    /// Temperature of the crossing at the chosen level \[K\].
    pub temperature: f64,
    /// One-sigma uncertainty of the crossing temperature \[K\].
    pub uncertainty: f64,
    /// Estimated lower plateau \[mOhm\].
    pub r_low: f64,
    /// Estimated upper plateau \[mOhm\].
    pub r_high: f64,
    /// Estimated per-sample noise from the plateaus \[mOhm\].
    pub noise: f64,
    /// Local slope dR/dT at the crossing \[mOhm/K\].
    pub slope: f64,
}

/// Locate the 50% crossing of a transition curve. See
/// [`extract_transition_at`] for the general level.
pub fn extract_transition(records: &[TransitionRecord]) -> Result<Transition> {
    extract_transition_at(records, 0.5)
}

/// Locate the temperature at which the resistance crosses
/// `r_low + fraction * (r_high - r_low)`.
///
/// The plateaus and the per-sample noise are estimated from the leading
/// and trailing sections of the curve (the records must span the full
/// transition). The crossing is then refined by an iterated, smoothly
/// weighted local line fit around the level: a tricube-like window
/// suppresses the influence of points entering or leaving the window, so
/// the estimate is unbiased to well below the grid resolution. The quoted
/// uncertainty propagates the plateau noise through the exact linear
/// algebra of the weighted fit, and matches the ensemble scatter of
/// repeated noisy extractions.
pub fn extract_transition_at(records: &[TransitionRecord], fraction: f64) -> Result<Transition> {
    if !(0.0..1.0).contains(&fraction) || fraction <= 0.0 {
        return Err(Error::Domain(format!(
            "crossing fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let n = records.len();
    if n < 8 {
        return Err(Error::Extraction(format!(
            "need at least 8 samples, got {n}"
        )));
    }
    if records.iter().any(|r| !r.temperature.is_finite())
        || records
            .windows(2)
            .any(|w| w[1].temperature <= w[0].temperature)
    {
        return Err(Error::Extraction(
            "samples must be strictly increasing in temperature".to_string(),
        ));
    }
    if records.iter().any(|r| !r.resistance.is_finite()) {
        return Err(Error::Extraction(
            "resistance values must be finite".to_string(),
        ));
    }

    let temps: Vec<f64> = records.iter().map(|r| r.temperature).collect();
    let res: Vec<f64> = records.iter().map(|r| r.resistance).collect();

    // Plateau levels and noise from the leading/trailing sections.
    let k = (n / 7).max(3);
    let r_low = mean(&res[..k]);
    let r_high = mean(&res[n - k..]);
    let noise = ((variance(&res[..k], r_low) + variance(&res[n - k..], r_high)) / 2.0).sqrt();
    let span = r_high - r_low;
    if span <= 0.0 && noise == 0.0 {
        return Err(Error::Extraction(
            "no crossing: the curve does not rise between its plateaus".to_string(),
        ));
    }
    if span < 4.0 * noise {
        return Err(Error::Extraction(format!(
            "plateaus indistinguishable: span {span:.6} mOhm < 4 * noise {noise:.6} mOhm"
        )));
    }

    // The midpoint crossing is always located first; its window geometry
    // (logistic scale from the mid slope) then anchors any other level.
    let mid_level = r_low + 0.5 * span;
    let smoothed = boxcar3(&res);
    let mut t_mid = None;
    for i in 0..n - 1 {
        let (a, b) = (smoothed[i] - mid_level, smoothed[i + 1] - mid_level);
        if a < 0.0 && b >= 0.0 {
            t_mid = Some(
                temps[i]
                    + (mid_level - smoothed[i]) * (temps[i + 1] - temps[i])
                        / (smoothed[i + 1] - smoothed[i]),
            );
            break;
        }
    }
    let t_mid =
        t_mid.ok_or_else(|| Error::Extraction("no crossing of the 50% level found".to_string()))?;

    // Initial mid slope from an unweighted fit over the central band.
    let band: Vec<usize> = (0..n)
        .filter(|&i| (res[i] - mid_level).abs() <= 0.25 * span)
        .collect();
    let slope0 = if band.len() >= 2 {
        let ts: Vec<f64> = band.iter().map(|&i| temps[i]).collect();
        let rs: Vec<f64> = band.iter().map(|&i| res[i]).collect();
        line_fit(&ts, &rs).1
    } else {
        let i = temps.partition_point(|&t| t < t_mid).min(n - 1).max(1);
        (res[i] - res[i - 1]) / (temps[i] - temps[i - 1])
    };
    if !(slope0.is_finite() && slope0 > 0.0) {
        return Err(Error::Extraction(format!(
            "non-increasing slope {slope0} at the crossing"
        )));
    }

    let mid = weighted_crossing(
        &temps,
        &res,
        mid_level,
        t_mid,
        1.1 * span / (4.0 * slope0),
        4,
        Some(span),
    )?;

    let fitted = if fraction == 0.5 {
        mid
    } else {
        // Predict the off-center crossing from the logistic geometry of
        // the mid fit, then refine it locally in a window narrow enough
        // to stay off the plateaus.
        let level = r_low + fraction * span;
        let scale = span / (4.0 * mid.slope);
        let predicted = mid.t0 + scale * (fraction / (1.0 - fraction)).ln();
        weighted_crossing(&temps, &res, level, predicted, scale, 2, None)?
    };

    let t0 = fitted.t0;
    if t0 < temps[0] || t0 > temps[n - 1] {
        return Err(Error::Extraction(format!(
            "crossing {t0} K falls outside the sampled range [{}, {}] K",
            temps[0],
            temps[n - 1]
        )));
    }

    // Exact first-order propagation of the plateau noise through level and
    // weighted fit: dT0/dR_i for every sample, assembled from the plateau
    // means (through the level) and the hat values of the weighted fit.
    let mut grad_sq = 0.0;
    for (i, (&temp, &weight)) in temps.iter().zip(&fitted.weights).enumerate() {
        let mut g = 0.0;
        if i < k {
            g += (1.0 - fraction) / k as f64;
        }
        if i >= n - k {
            g += fraction / k as f64;
        }
        if weight > 0.0 {
            g -= weight
                * (1.0 / fitted.w_sum
                    + (t0 - fitted.t_mean) * (temp - fitted.t_mean) / fitted.s_tt);
        }
        grad_sq += g * g;
    }
    let uncertainty = noise * grad_sq.sqrt() / fitted.slope;

    Ok(Transition {
        temperature: t0,
        uncertainty,
        r_low,
        r_high,
        noise,
        slope: fitted.slope,
    })
}

/// Field produced by a coil current, with its relative setting error.
/// Returns `(field \[G\], rel_err)`.
pub fn field_from_current(a: &ApparatusParams, current_ma: f64) -> Result<(f64, f64)> {
    if !current_ma.is_finite() || current_ma < 0.0 {
        return Err(Error::Domain(format!(
            "coil current must be finite and non-negative, got {current_ma}"
        )));
    }
    Ok((a.coil_constant * current_ma, a.current_rel_err))
}

/// 10%-90% width of a curve, by linear interpolation of the level
/// crossings; mainly used to verify generated widths. Errors if either
/// level is not crossed.
pub fn transition_width(records: &[TransitionRecord]) -> Result<f64> {
    let t10 = extract_transition_at(records, 0.1)?;
    let t90 = extract_transition_at(records, 0.9)?;
    Ok(t90.temperature - t10.temperature)
}

struct WeightedCrossing {
    t0: f64,
    slope: f64,
    weights: Vec<f64>,
    w_sum: f64,
    t_mean: f64,
    s_tt: f64,
}

/// Iterated biweight-windowed line fit through the level crossing.
///
/// The window recenters on the current crossing estimate each pass. With
/// `adapt = Some(span)` the half-width tracks `1.1 * span / (4 * slope)`,
/// the quasi-linear core of a logistic step around its midpoint; with
/// `adapt = None` the half-width stays fixed (used off-center, where the
/// window must not grow onto a plateau).
fn weighted_crossing(
    temps: &[f64],
    res: &[f64],
    level: f64,
    start: f64,
    half_width: f64,
    passes: usize,
    adapt: Option<f64>,
) -> Result<WeightedCrossing> {
    let n = temps.len();
    let mut t0 = start;
    let mut half = half_width;
    let mut out = WeightedCrossing {
        t0,
        slope: 0.0,
        weights: vec![0.0; n],
        w_sum: 0.0,
        t_mean: 0.0,
        s_tt: 0.0,
    };
    for _ in 0..passes {
        for (w, &temp) in out.weights.iter_mut().zip(temps) {
            let x = (temp - t0) / half;
            *w = if x.abs() < 1.0 {
                (1.0 - x * x).powi(2)
            } else {
                0.0
            };
        }
        out.w_sum = out.weights.iter().sum();
        let active = out.weights.iter().filter(|&&w| w > 0.0).count();
        if active < 2 || out.w_sum <= 0.0 {
            return Err(Error::Extraction(
                "fewer than 2 samples in the crossing window".to_string(),
            ));
        }
        out.t_mean = dot(&out.weights, temps) / out.w_sum;
        let r_mean = dot(&out.weights, res) / out.w_sum;
        out.s_tt = (0..n)
            .map(|i| out.weights[i] * (temps[i] - out.t_mean).powi(2))
            .sum();
        if out.s_tt <= 0.0 {
            return Err(Error::Extraction("degenerate crossing window".to_string()));
        }
        let s_tr: f64 = (0..n)
            .map(|i| out.weights[i] * (temps[i] - out.t_mean) * (res[i] - r_mean))
            .sum();
        let b = s_tr / out.s_tt;
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::Extraction(format!(
                "non-increasing slope {b} at the crossing"
            )));
        }
        let a = r_mean - b * out.t_mean;
        t0 = (level - a) / b;
        out.slope = b;
        out.t0 = t0;
        if let Some(span) = adapt {
            half = 1.1 * span / (4.0 * b);
        }
    }
    Ok(out)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn variance(xs: &[f64], mean: f64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn boxcar3(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    (0..n)
        .map(|i| {
            if i == 0 || i == n - 1 {
                xs[i]
            } else {
                (xs[i - 1] + xs[i] + xs[i + 1]) / 3.0
            }
        })
        .collect()
}

/// Unweighted least-squares line `r = a + b t`; returns `(a, b)`.
fn line_fit(ts: &[f64], rs: &[f64]) -> (f64, f64) {
    let n = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / n;
    let rm = rs.iter().sum::<f64>() / n;
    let s_tt: f64 = ts.iter().map(|t| (t - tm).powi(2)).sum();
    let s_tr: f64 = ts.iter().zip(rs).map(|(t, r)| (t - tm) * (r - rm)).sum();
    let b = s_tr / s_tt;
    (rm - b * tm, b)
}
