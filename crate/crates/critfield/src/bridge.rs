//! Four-element bridge of two simple films and two cavities on one chip.
//!
//! The on-chip comparison scheme wires two simple films (arms 1 and 3) and
//! two cavities (arms 2 and 4) into a resistive bridge driven by a probe
//! current. Since all four samples share the substrate they see the same
//! field and the same misalignment; the bridge output isolates their
//! *differential* behaviour. Fabrication spread means the bridge is not
//! compensated during the transition — it shows a peak even with no cavity
//! signal — but only a cavity-induced critical-field shift makes the peak
//! grow and move with the applied field, which is the observable this
//! module simulates.
//!
//! The reported imbalance is the voltage across the bridge diagonal per
//! unit excitation current, `(R1*R3 - R2*R4) / (R1 + R2 + R3 + R4)` in
//! milliohm, which is independent of the excitation amplitude. Read-out
//! noise rides on the measured products in the numerator; the series sum
//! in the denominator is the bridge's operating point, set by the true
//! impedances.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::FilmParams;
use crate::signal::Signal;
use crate::synth::{derive_seed, transition_midpoint, ApparatusParams};

/// One bridge arm: a film, its deviation-ratio strategy (the null
/// [`crate::signal::SingleFilm`] for simple-film arms) and the read-out
/// characteristics of its transition.
pub struct BridgeArm {
    pub film: FilmParams,
    pub signal: Box<dyn Signal>,
    pub apparatus: ApparatusParams,
}

/// Four arms and the probe excitation. Arms 1 and 3 (indices 0 and 2) are
/// conventionally the simple films, arms 2 and 4 the cavities.
pub struct BridgeSpec {
    pub arms: [BridgeArm; 4],
    /// Probe current \[uA\].
    pub excitation: f64,
}

impl BridgeSpec {
    pub fn new(arms: [BridgeArm; 4], excitation: f64) -> Result<Self> {
        if !(excitation.is_finite() && excitation > 0.0) {
            return Err(Error::Domain(format!(
                "excitation must be finite and positive, got {excitation}"
            )));
        }
        Ok(Self { arms, excitation })
    }
}

/// Transition geometry of one arm at a given field.
#[derive(Debug, Clone, Copy)]
struct ArmProfile {
    t_mid: f64,
    scale: f64,
    step: f64,
    r_residual: f64,
}

impl ArmProfile {
    fn build(arm: &BridgeArm, field: f64) -> Result<Self> {
        Ok(Self {
            t_mid: transition_midpoint(&arm.film, arm.signal.as_ref(), field)?,
            scale: arm.apparatus.logistic_scale_kelvin(),
            step: arm.apparatus.r_normal - arm.apparatus.r_residual,
            r_residual: arm.apparatus.r_residual,
        })
    }

    /// Noiseless resistance at `temperature` \[mOhm\].
    fn resistance(&self, temperature: f64) -> f64 {
        self.r_residual + self.step * self.risen(temperature)
    }

    /// Fraction of the step risen at `temperature`, in `(0, 1)`.
    fn risen(&self, temperature: f64) -> f64 {
        let x = (temperature - self.t_mid) / self.scale;
        1.0 / (1.0 + (-x).exp())
    }
}

/// One Gaussian noise draw for arm `idx` at `(temperature, field)`,
/// deterministic in `(seed, idx, temperature, field)` so traces can be
/// evaluated pointwise, in any order, or in parallel.
fn arm_noise(seed: u64, idx: u64, temperature: f64, field: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let key = derive_seed(
        derive_seed(derive_seed(seed, idx), temperature.to_bits()),
        field.to_bits(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    unit.sample(&mut rng) * sigma
}

/// Imbalance of measured (noisy) arm resistances over the current
/// division set by the true (noiseless) ones. The denominator is the
/// physical series sum — the read-out noise rides on the measured
/// differential products, not on the bridge's operating point.
fn imbalance(measured: &[f64; 4], profile_sum: f64) -> Result<f64> {
    let num = measured[0] * measured[2] - measured[1] * measured[3];
    if num == 0.0 {
        // exact null regardless of the denominator
        return Ok(0.0);
    }
    if profile_sum <= 0.0 {
        return Err(Error::Domain(format!(
            "degenerate bridge: arm resistance sum {profile_sum} mOhm"
        )));
    }
    Ok(num / profile_sum)
}

fn output_at(
    spec: &BridgeSpec,
    profiles: &[ArmProfile; 4],
    temperature: f64,
    field: f64,
    seed: u64,
) -> Result<f64> {
    let mut measured = [0.0; 4];
    let mut sum = 0.0;
    for i in 0..4 {
        let clean = profiles[i].resistance(temperature);
        sum += clean;
        measured[i] = clean
            + arm_noise(
                seed,
                i as u64,
                temperature,
                field,
                spec.arms[i].apparatus.noise_sigma,
            );
    }
    imbalance(&measured, sum)
}

/// Bridge imbalance at one `(temperature, field)` point, as a
/// voltage-equivalent resistance \[mOhm\]. Deterministic for a fixed seed;
/// exactly zero whenever the two arm products cancel, in particular for
/// four identical noiseless arms at any temperature and field.
pub fn bridge_output(spec: &BridgeSpec, temperature: f64, field: f64, seed: u64) -> Result<f64> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::Domain(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let profiles = arm_profiles(spec, field)?;
    output_at(spec, &profiles, temperature, field, seed)
}

fn arm_profiles(spec: &BridgeSpec, field: f64) -> Result<[ArmProfile; 4]> {
    Ok([
        ArmProfile::build(&spec.arms[0], field)?,
        ArmProfile::build(&spec.arms[1], field)?,
        ArmProfile::build(&spec.arms[2], field)?,
        ArmProfile::build(&spec.arms[3], field)?,
    ])
}

/// Peak-finding controls.
#[derive(Debug, Clone, Copy)]
pub struct PeakOptions {
    /// Boxcar window (grid points) applied to the imbalance trace before
    /// peak search; must be odd.
    pub smooth_window: usize,
    /// Peaks below `significance` times the smoothed noise level are
    /// flagged insignificant.
    pub significance: f64,
}

impl Default for PeakOptions {
    fn default() -> Self {
        Self {
            smooth_window: 9,
            significance: 3.0,
        }
    }
}

/// Peak of the bridge trace at one applied field.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct PeakPoint {
    /// Applied field \[G\].
    pub field: f64,
    /// Temperature of the largest smoothed |imbalance| \[K\].
    pub peak_temperature: f64,
    /// Signed smoothed imbalance at the peak \[mOhm\].
    pub peak_height: f64,
    /// One-sigma noise level of the smoothed trace at the peak \[mOhm\].
    pub noise_level: f64,
    pub significant: bool,
}

/// Fraction-risen band outside which an arm is considered on a plateau.
const ACTIVE_BAND: (f64, f64) = (0.02, 0.98);

/// Sweep the bridge over applied fields; for each field, scan the
/// temperature grid, smooth the imbalance trace with a boxcar and locate
/// the largest absolute excursion within the active region — the
/// temperatures where at least one arm is actually transiting (plateaus
/// carry no film/cavity comparison). Peaks not exceeding `significance`
/// times the propagated arm noise (reduced by the smoothing window) are
/// flagged insignificant. Per-field noise streams are derived from the
/// seed, so the sweep order is immaterial.
pub fn peak_trace(
    spec: &BridgeSpec,
    fields: &[f64],
    t_grid: &[f64],
    seed: u64,
    opts: &PeakOptions,
) -> Result<Vec<PeakPoint>> {
    if fields.is_empty() {
        return Err(Error::Domain(
            "peak trace requires at least one field".to_string(),
        ));
    }
    if t_grid.len() < opts.smooth_window.max(3) {
        return Err(Error::Domain(format!(
            "temperature grid of {} points is shorter than the smoothing window {}",
            t_grid.len(),
            opts.smooth_window
        )));
    }
    if opts.smooth_window == 0 || opts.smooth_window.is_multiple_of(2) {
        return Err(Error::Domain(format!(
            "smoothing window must be odd and positive, got {}",
            opts.smooth_window
        )));
    }

    let mut peaks = Vec::with_capacity(fields.len());
    for (fi, &field) in fields.iter().enumerate() {
        let field_seed = derive_seed(seed, fi as u64);
        let profiles = arm_profiles(spec, field)?;
        let trace: Vec<f64> = t_grid
            .iter()
            .map(|&temp| output_at(spec, &profiles, temp, field, field_seed))
            .collect::<Result<_>>()?;

        let w = opts.smooth_window;
        let half = w / 2;
        let active = |temp: f64| {
            profiles
                .iter()
                .any(|p| (ACTIVE_BAND.0..=ACTIVE_BAND.1).contains(&p.risen(temp)))
        };
        let mut best_idx = None;
        let mut best_val = 0.0_f64;
        for center in half..trace.len() - half {
            if !active(t_grid[center]) {
                continue;
            }
            let avg: f64 = trace[center - half..=center + half].iter().sum::<f64>() / w as f64;
            if best_idx.is_none() || avg.abs() > best_val.abs() {
                best_val = avg;
                best_idx = Some(center);
            }
        }
        let best_idx = best_idx.ok_or_else(|| {
            Error::Domain(format!(
                "no transition inside the scanned temperature window at field {field} G"
            ))
        })?;
        let peak_temperature = t_grid[best_idx];

        // Propagate the per-arm noise through the imbalance at the peak
        // (gradient of the fixed-denominator form), then reduce by the
        // boxcar.
        let r: Vec<f64> = profiles
            .iter()
            .map(|p| p.resistance(peak_temperature))
            .collect();
        let total: f64 = r.iter().sum();
        let grads = [r[2] / total, r[3] / total, r[0] / total, r[1] / total];
        let var: f64 = grads
            .iter()
            .zip(&spec.arms)
            .map(|(g, arm)| (g * arm.apparatus.noise_sigma).powi(2))
            .sum();
        let noise_level = (var / w as f64).sqrt();

        peaks.push(PeakPoint {
            field,
            peak_temperature,
            peak_height: best_val,
            noise_level,
            significant: best_val.abs() > opts.significance * noise_level,
        });
    }
    Ok(peaks)
}
