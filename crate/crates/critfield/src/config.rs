//! Run configuration: one JSON document drives every pipeline command.
//!
//! Field names carry their units. Sections beyond `film` are optional and
//! validated by the command that needs them.

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::budget::BudgetOptions;
use crate::error::{Error, Result};
use crate::fit::{FitOptions, SigmaMode};
use crate::model::FilmParams;
use crate::signal::SignalSpec;
use crate::synth::ApparatusParams;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilmConfig {
    pub t_c_k: f64,
    pub h_t0_g: f64,
    pub lambda0_nm: f64,
    pub xi0_nm: f64,
    pub thickness_nm: f64,
}

impl FilmConfig {
    pub fn to_params(&self) -> Result<FilmParams> {
        FilmParams::new(
            self.t_c_k,
            self.h_t0_g,
            self.lambda0_nm,
            self.xi0_nm,
            self.thickness_nm,
        )
    }

    pub fn from_params(p: &FilmParams) -> Self {
        Self {
            t_c_k: p.t_c,
            h_t0_g: p.h_t0,
            lambda0_nm: p.lambda0,
            xi0_nm: p.xi0,
            thickness_nm: p.thickness,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApparatusConfig {
    pub r_normal_mohm: f64,
    pub r_residual_mohm: f64,
    pub width_mk: f64,
    pub noise_sigma_mohm: f64,
    pub coil_constant_g_per_ma: f64,
    pub current_rel_err: f64,
}

impl ApparatusConfig {
    pub fn to_params(&self) -> Result<ApparatusParams> {
        ApparatusParams::new(
            self.r_normal_mohm,
            self.r_residual_mohm,
            self.width_mk,
            self.noise_sigma_mohm,
            self.coil_constant_g_per_ma,
            self.current_rel_err,
        )
    }
}

/// Grids for model tabulation and campaign generation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Reduced-temperature window tabulated by the `model` command.
    pub model_t: (f64, f64),
    pub model_points: usize,
    /// Reduced-temperature window the campaign field ladder spans.
    pub campaign_t: (f64, f64),
    /// Number of fields in the ladder.
    pub n_fields: usize,
    /// Half-width of each curve's temperature window around its
    /// transition \[mK\].
    pub curve_pad_mk: f64,
    /// Temperature grid step within a curve \[mK\].
    pub curve_step_mk: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            model_t: (0.9, 1.0),
            model_points: 201,
            campaign_t: (0.95, 0.995),
            n_fields: 20,
            curve_pad_mk: 25.0,
            curve_step_mk: 0.5,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        let ((m0, m1), (c0, c1)) = (self.model_t, self.campaign_t);
        if !(m0.is_finite()
            && m1.is_finite()
            && (0.0..=1.0).contains(&m0)
            && (0.0..=1.0).contains(&m1)
            && m0 < m1)
        {
            return Err(Error::Config(format!(
                "model_t window ({m0}, {m1}) must be increasing within [0, 1]"
            )));
        }
        if !(c0.is_finite() && c1.is_finite() && 0.0 < c0 && c1 < 1.0 && c0 < c1) {
            return Err(Error::Config(format!(
                "campaign_t window ({c0}, {c1}) must be increasing within (0, 1)"
            )));
        }
        if self.model_points < 2 {
            return Err(Error::Config("model_points must be at least 2".to_string()));
        }
        if self.n_fields < 2 {
            return Err(Error::Config("n_fields must be at least 2".to_string()));
        }
        if !(self.curve_pad_mk > 0.0
            && self.curve_step_mk > 0.0
            && self.curve_step_mk < self.curve_pad_mk)
        {
            return Err(Error::Config(format!(
                "curve grid needs 0 < step ({}) < pad ({})",
                self.curve_step_mk, self.curve_pad_mk
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Detection threshold on the aggregated signal-to-noise ratio.
    pub detection_snr: f64,
    /// Reduced-temperature validity cutoff for budgets and detection.
    pub t_max: f64,
    /// Evaluate the field model even where validity conditions fail.
    pub waive_validity: bool,
    /// Transition crossing level as a fraction of the step height.
    pub transition_fraction: f64,
    /// Confidence level of fit bands.
    pub band_level: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            detection_snr: 5.0,
            t_max: 0.995,
            waive_validity: false,
            transition_fraction: 0.5,
            band_level: 0.95,
        }
    }
}

impl Thresholds {
    pub fn budget_options(&self) -> BudgetOptions {
        BudgetOptions {
            t_max: self.t_max,
            threshold: self.detection_snr,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// Initial parameter guess; the film section is used when absent.
    pub init: Option<FilmConfig>,
    /// Parameter names held fixed: `amplitude`, `t_c`, `correction`.
    pub fixed: Vec<String>,
    pub sigma_mode: SigmaMode,
    /// Iteration budget override.
    pub max_iterations: Option<usize>,
}

impl FitConfig {
    pub fn to_options(&self) -> FitOptions {
        let defaults = FitOptions::default();
        FitOptions {
            fixed: self.fixed.iter().cloned().collect::<BTreeSet<_>>(),
            sigma_mode: self.sigma_mode,
            max_iterations: self.max_iterations.unwrap_or(defaults.max_iterations),
            ..defaults
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetConfig {
    /// Relative field sensitivity the budget is evaluated for.
    pub delta_r: f64,
    /// Reduced-temperature window of the budget curve.
    pub window: (f64, f64),
    pub points: usize,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self {
            delta_r: 3e-3,
            window: (0.9, 0.995),
            points: 50,
        }
    }
}

/// One bridge arm in configuration form.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmConfig {
    pub film: FilmConfig,
    pub signal: SignalSpec,
    pub apparatus: ApparatusConfig,
}

/// Template expansion for a standard two-films/two-cavities bridge with
/// per-arm fabrication spread.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BridgeTemplateConfig {
    /// Relative spread of the normal-state resistance across arms.
    pub r_normal_rel: f64,
    /// Critical-temperature spread across arms \[mK\].
    pub t_c_mk: f64,
}

impl Default for BridgeTemplateConfig {
    fn default() -> Self {
        Self {
            r_normal_rel: 0.01,
            t_c_mk: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BridgeConfig {
    /// Explicit four arms; when absent, arms are expanded from the film,
    /// signal and apparatus sections with `template` imperfections
    /// (arms 1 and 3 simple films, arms 2 and 4 cavities).
    pub arms: Option<Vec<ArmConfig>>,
    pub template: BridgeTemplateConfig,
    /// Probe current \[uA\].
    pub excitation_ua: f64,
    /// Applied fields to sweep \[G\].
    pub fields_g: Vec<f64>,
    /// Temperature pad around the outermost transition midpoints \[mK\].
    pub t_pad_mk: f64,
    /// Temperature grid step \[mK\].
    pub t_step_mk: f64,
    pub smooth_window: usize,
    pub significance: f64,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        Self {
            arms: None,
            template: BridgeTemplateConfig::default(),
            excitation_ua: 10.0,
            fields_g: Vec::new(),
            t_pad_mk: 30.0,
            t_step_mk: 0.5,
            smooth_window: 9,
            significance: 3.0,
        }
    }
}

/// Complete run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub film: FilmConfig,
    #[serde(default)]
    pub signal: SignalSpec,
    #[serde(default)]
    pub apparatus: Option<ApparatusConfig>,
    #[serde(default)]
    pub grids: GridConfig,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub budget: BudgetConfig,
    #[serde(default)]
    pub bridge: Option<BridgeConfig>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("invalid config JSON: {e}")))?;
        cfg.grids.validate()?;
        if !(0.0 < cfg.thresholds.t_max && cfg.thresholds.t_max <= 1.0) {
            return Err(Error::Config(format!(
                "t_max must lie in (0, 1], got {}",
                cfg.thresholds.t_max
            )));
        }
        if !(0.0 < cfg.thresholds.transition_fraction && cfg.thresholds.transition_fraction < 1.0) {
            return Err(Error::Config(format!(
                "transition_fraction must lie in (0, 1), got {}",
                cfg.thresholds.transition_fraction
            )));
        }
        if !(0.0 < cfg.thresholds.band_level && cfg.thresholds.band_level < 1.0) {
            return Err(Error::Config(format!(
                "band_level must lie in (0, 1), got {}",
                cfg.thresholds.band_level
            )));
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "film": {"t_c_k": 1.2932, "h_t0_g": 99.0, "lambda0_nm": 104.3,
                 "xi0_nm": 60.0, "thickness_nm": 300.0}
    }"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.signal.kind, "single_film");
        assert_eq!(cfg.grids.n_fields, 20);
        assert_eq!(cfg.thresholds.detection_snr, 5.0);
        assert_eq!(cfg.thresholds.t_max, 0.995);
        assert!(cfg.seed.is_none());
        cfg.film.to_params().unwrap();
    }

    #[test]
    fn rejects_unknown_fields_and_bad_windows() {
        let bad = r#"{"film": {"t_c_k": 1.0, "h_t0_g": 99.0, "lambda0_nm": 104.3,
                      "xi0_nm": 60.0, "thickness_nm": 300.0}, "films": 3}"#;
        assert!(RunConfig::from_json(bad).is_err());

        let bad = MINIMAL.replace(
            "}\n    }",
            "},\n \"grids\": {\"campaign_t\": [0.99, 0.95]} }",
        );
        assert!(RunConfig::from_json(&bad).is_err());
    }

    #[test]
    fn roundtrips_through_serde() {
        let cfg = RunConfig::from_json(MINIMAL).unwrap();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(back.film.t_c_k, cfg.film.t_c_k);
        assert_eq!(back.grids.curve_step_mk, cfg.grids.curve_step_mk);
    }
}
