//! Deviation-ratio strategies `r(t)` and their runtime registry.
//!
//! The expected cavity signal is a relative critical-field shift
//! `r(t) = (H_film - H_cavity)/H_cavity` whose functional form depends on
//! the cavity stack (mirror material, reflectivity model, mode content).
//! Each form is one [`Signal`] implementation; concrete curves are
//! selected by name at runtime through the [`SignalRegistry`], either
//! inline from configuration or from a two-column table file.
//!
//! Built-in strategies:
//!
//! | name              | r(t)                                   |
//! |-------------------|----------------------------------------|
//! | `single_film`     | 0 (no cavity, null reference)          |
//! | `power_law`       | `amplitude * (1 - t)^exponent`         |
//! | `tabulated_ratio` | linear interpolation of `(t, r)` pairs |
//!
//! Positive `r` means the cavity lowers the critical field. Models whose
//! `r` goes negative are accepted with a warning rather than rejected,
//! so that exploratory curves (for example alternative zero-frequency
//! mode treatments) can still be loaded.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ReducedTemp;

/// A deviation-ratio model `r(t)`.
///
/// Implementations must be pure: the same `t` always yields the same
/// ratio, so strategies are freely shareable across threads.
pub trait Signal: Send + Sync {
    /// Registry name of this strategy.
    fn kind(&self) -> &'static str;

    /// Deviation ratio at reduced temperature `t`.
    fn ratio(&self, t: ReducedTemp) -> f64;
}

impl fmt::Debug for dyn Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signal({})", self.kind())
    }
}

/// Null strategy: a simple film outside any cavity, `r(t) = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SingleFilm;

impl Signal for SingleFilm {
    fn kind(&self) -> &'static str {
        "single_film"
    }

    fn ratio(&self, _t: ReducedTemp) -> f64 {
        0.0
    }
}

/// Parametric strategy `r(t) = amplitude * (1 - t)^exponent`.
///
/// With `exponent > 0` the deviation vanishes at the transition and grows
/// away from it, the qualitative shape of computed cavity curves; with
/// `exponent = 0` the ratio is constant.
#[derive(Debug, Clone, Copy)]
pub struct PowerLaw {
    amplitude: f64,
    exponent: f64,
}

impl PowerLaw {
    pub fn new(amplitude: f64, exponent: f64) -> Result<Self> {
        if !amplitude.is_finite() || !exponent.is_finite() {
            return Err(Error::Signal(format!(
                "power_law parameters must be finite, got amplitude {amplitude}, exponent {exponent}"
            )));
        }
        if exponent < 0.0 {
            return Err(Error::Signal(format!(
                "power_law exponent must be non-negative (r would diverge at t = 1), got {exponent}"
            )));
        }
        Ok(Self {
            amplitude,
            exponent,
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }
}

impl Signal for PowerLaw {
    fn kind(&self) -> &'static str {
        "power_law"
    }

    fn ratio(&self, t: ReducedTemp) -> f64 {
        if self.exponent == 0.0 {
            return self.amplitude;
        }
        self.amplitude * (1.0 - t.value()).powf(self.exponent)
    }
}

/// Tabulated strategy: linear interpolation of `(t, r)` pairs.
///
/// Knots must be strictly increasing in `t`, each within `[0, 1)`.
/// Outside the tabulated span the ratio is clamped to the end values.
#[derive(Debug, Clone)]
pub struct TabulatedRatio {
    ts: Vec<f64>,
    rs: Vec<f64>,
}

impl TabulatedRatio {
    pub fn new(table: &[(f64, f64)]) -> Result<Self> {
        if table.len() < 2 {
            return Err(Error::Signal(format!(
                "tabulated_ratio needs at least 2 knots, got {}",
                table.len()
            )));
        }
        let mut ts = Vec::with_capacity(table.len());
        let mut rs = Vec::with_capacity(table.len());
        for &(t, r) in table {
            if !t.is_finite() || !(0.0..1.0).contains(&t) {
                return Err(Error::Signal(format!(
                    "table t values must lie in [0, 1), got {t}"
                )));
            }
            if !r.is_finite() {
                return Err(Error::Signal(format!(
                    "table r value at t = {t} is not finite"
                )));
            }
            if let Some(&prev) = ts.last() {
                if t <= prev {
                    return Err(Error::Signal(format!(
                        "table t values must be strictly increasing ({prev} then {t})"
                    )));
                }
            }
            ts.push(t);
            rs.push(r);
        }
        Ok(Self { ts, rs })
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ts.iter().copied().zip(self.rs.iter().copied())
    }
}

impl Signal for TabulatedRatio {
    fn kind(&self) -> &'static str {
        "tabulated_ratio"
    }

    fn ratio(&self, t: ReducedTemp) -> f64 {
        let t = t.value();
        let n = self.ts.len();
        if t <= self.ts[0] {
            return self.rs[0];
        }
        if t >= self.ts[n - 1] {
            return self.rs[n - 1];
        }
        let i = self.ts.partition_point(|&x| x <= t);
        let (t0, t1) = (self.ts[i - 1], self.ts[i]);
        let (r0, r1) = (self.rs[i - 1], self.rs[i]);
        r0 + (r1 - r0) * (t - t0) / (t1 - t0)
    }
}

/// Parse a two-column `(t, r)` table: one pair per line, separated by
/// whitespace or a comma, `.` as decimal point, `#` starting a comment.
pub fn parse_ratio_table(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut table = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if cols.len() != 2 {
            return Err(Error::Parse(format!(
                "line {}: expected two columns (t, r), got {}",
                lineno + 1,
                cols.len()
            )));
        }
        let t: f64 = cols[0].parse().map_err(|e| {
            Error::Parse(format!(
                "line {}: bad t value {:?}: {e}",
                lineno + 1,
                cols[0]
            ))
        })?;
        let r: f64 = cols[1].parse().map_err(|e| {
            Error::Parse(format!(
                "line {}: bad r value {:?}: {e}",
                lineno + 1,
                cols[1]
            ))
        })?;
        table.push((t, r));
    }
    if table.is_empty() {
        return Err(Error::Parse(
            "ratio table contains no data rows".to_string(),
        ));
    }
    Ok(table)
}

/// Load a `(t, r)` table file, see [`parse_ratio_table`] for the format.
pub fn load_ratio_table(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    parse_ratio_table(&text)
}

/// Declarative description of a signal strategy, as it appears in
/// configuration files: a `kind` naming the strategy plus whichever
/// parameters that strategy consumes.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SignalSpec {
    pub kind: String,
    /// `power_law` amplitude.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    /// `power_law` exponent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    /// Inline `(t, r)` pairs for `tabulated_ratio`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<(f64, f64)>>,
    /// Path to a table file for `tabulated_ratio` (alternative to `table`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<std::path::PathBuf>,
}

impl SignalSpec {
    pub fn single_film() -> Self {
        Self {
            kind: "single_film".to_string(),
            amplitude: None,
            exponent: None,
            table: None,
            file: None,
        }
    }

    pub fn power_law(amplitude: f64, exponent: f64) -> Self {
        Self {
            kind: "power_law".to_string(),
            amplitude: Some(amplitude),
            exponent: Some(exponent),
            table: None,
            file: None,
        }
    }
}

impl Default for SignalSpec {
    fn default() -> Self {
        Self::single_film()
    }
}

/// A built strategy together with non-fatal findings from construction.
pub struct BuiltSignal {
    pub signal: Box<dyn Signal>,
    pub warnings: Vec<String>,
}

type Builder = fn(&SignalSpec) -> Result<BuiltSignal>;

/// Name-keyed registry of signal strategies.
///
/// [`SignalRegistry::builtin`] registers the three stock strategies;
/// additional builders can be registered under new names, after which
/// they are selectable from configuration like any stock one.
pub struct SignalRegistry {
    builders: BTreeMap<String, Builder>,
}

impl SignalRegistry {
    pub fn empty() -> Self {
        Self {
            builders: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register("single_film", build_single_film);
        reg.register("power_law", build_power_law);
        reg.register("tabulated_ratio", build_tabulated);
        reg
    }

    pub fn register(&mut self, kind: &str, builder: Builder) {
        self.builders.insert(kind.to_string(), builder);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.builders.keys().map(String::as_str)
    }

    /// Build the strategy named by `spec.kind`.
    pub fn build(&self, spec: &SignalSpec) -> Result<BuiltSignal> {
        match self.builders.get(&spec.kind) {
            Some(builder) => builder(spec),
            None => Err(Error::Signal(format!(
                "unknown signal kind {:?}; registered kinds: {}",
                spec.kind,
                self.names().collect::<Vec<_>>().join(", ")
            ))),
        }
    }
}

impl Default for SignalRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

fn build_single_film(_spec: &SignalSpec) -> Result<BuiltSignal> {
    Ok(BuiltSignal {
        signal: Box::new(SingleFilm),
        warnings: Vec::new(),
    })
}

fn build_power_law(spec: &SignalSpec) -> Result<BuiltSignal> {
    let amplitude = spec
        .amplitude
        .ok_or_else(|| Error::Signal("power_law requires an amplitude".to_string()))?;
    let exponent = spec
        .exponent
        .ok_or_else(|| Error::Signal("power_law requires an exponent".to_string()))?;
    let law = PowerLaw::new(amplitude, exponent)?;
    let mut warnings = Vec::new();
    if amplitude < 0.0 {
        warnings.push(format!(
            "power_law amplitude {amplitude} < 0: r(t) raises the in-cavity critical field, \
             contrary to the suppression sign convention"
        ));
    }
    Ok(BuiltSignal {
        signal: Box::new(law),
        warnings,
    })
}

fn build_tabulated(spec: &SignalSpec) -> Result<BuiltSignal> {
    let table = match (&spec.table, &spec.file) {
        (Some(_), Some(_)) => {
            return Err(Error::Signal(
                "tabulated_ratio accepts either an inline table or a file, not both".to_string(),
            ))
        }
        (Some(t), None) => t.clone(),
        (None, Some(path)) => load_ratio_table(path)?,
        (None, None) => {
            return Err(Error::Signal(
                "tabulated_ratio requires an inline table or a file".to_string(),
            ))
        }
    };
    let tab = TabulatedRatio::new(&table)?;
    let mut warnings = Vec::new();
    if let Some((t, r)) = tab.knots().find(|&(_, r)| r < 0.0) {
        warnings.push(format!(
            "table has r({t}) = {r} < 0: negative deviation ratios violate the \
             suppression sign convention and are used as given"
        ));
    }
    Ok(BuiltSignal {
        signal: Box::new(tab),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rt(t: f64) -> ReducedTemp {
        ReducedTemp::new(t).unwrap()
    }

    #[test]
    fn single_film_is_identically_zero() {
        for i in 0..=10 {
            assert_eq!(SingleFilm.ratio(rt(i as f64 / 10.0)), 0.0);
        }
    }

    #[test]
    fn power_law_values() {
        let s = PowerLaw::new(0.1, 1.0).unwrap();
        assert_relative_eq!(s.ratio(rt(0.95)), 5e-3, max_relative = 1e-12);
        assert_relative_eq!(s.ratio(rt(0.9)), 1e-2, max_relative = 1e-12);
        assert_eq!(s.ratio(rt(1.0)), 0.0);

        let c = PowerLaw::new(5e-3, 0.0).unwrap();
        assert_eq!(c.ratio(rt(1.0)), 5e-3);
        assert!(PowerLaw::new(0.1, -1.0).is_err());
        assert!(PowerLaw::new(f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn tabulated_interpolation_and_clamping() {
        let s = TabulatedRatio::new(&[(0.9, 0.01), (0.95, 0.005), (0.99, 0.001)]).unwrap();
        assert_relative_eq!(s.ratio(rt(0.925)), 0.0075, max_relative = 1e-12);
        assert_eq!(s.ratio(rt(0.5)), 0.01);
        assert_eq!(s.ratio(rt(0.995)), 0.001);
        assert_relative_eq!(s.ratio(rt(0.95)), 0.005, max_relative = 1e-15);
    }

    #[test]
    fn tabulated_rejects_bad_tables() {
        assert!(TabulatedRatio::new(&[(0.9, 0.01)]).is_err());
        assert!(TabulatedRatio::new(&[(0.9, 0.01), (0.9, 0.02)]).is_err());
        assert!(TabulatedRatio::new(&[(0.95, 0.01), (0.9, 0.02)]).is_err());
        assert!(TabulatedRatio::new(&[(0.9, 0.01), (1.0, 0.02)]).is_err());
        assert!(TabulatedRatio::new(&[(0.9, f64::NAN), (0.95, 0.02)]).is_err());
    }

    #[test]
    fn table_parser_accepts_comments_and_separators() {
        let text =
            "# deviation ratio table\n0.90 0.010\n0.95,0.005  # mixed separators\n\n0.99\t0.001\n";
        let table = parse_ratio_table(text).unwrap();
        assert_eq!(table.len(), 3);
        assert_eq!(table[1], (0.95, 0.005));

        assert!(parse_ratio_table("# only comments\n").is_err());
        assert!(parse_ratio_table("0.9 0.1 0.2\n").is_err());
        assert!(parse_ratio_table("0.9 abc\n").is_err());
    }

    #[test]
    fn registry_builds_by_name() {
        let reg = SignalRegistry::builtin();
        let names: Vec<_> = reg.names().collect();
        assert_eq!(names, vec!["power_law", "single_film", "tabulated_ratio"]);

        let built = reg.build(&SignalSpec::power_law(0.1, 1.0)).unwrap();
        assert_eq!(built.signal.kind(), "power_law");
        assert!(built.warnings.is_empty());

        let spec = SignalSpec {
            kind: "tabulated_ratio".to_string(),
            table: Some(vec![(0.9, -0.01), (0.95, 0.005)]),
            ..SignalSpec::single_film()
        };
        let built = reg.build(&spec).unwrap();
        assert_eq!(built.warnings.len(), 1, "negative r should warn, not fail");

        assert!(reg
            .build(&SignalSpec {
                kind: "exact_reflectivity".to_string(),
                ..SignalSpec::single_film()
            })
            .is_err());
    }

    #[test]
    fn registry_loads_table_files() {
        let path =
            std::env::temp_dir().join(format!("critfield_signal_table_{}.txt", std::process::id()));
        std::fs::write(&path, "# r(t) knots\n0.90 0.010\n0.95 0.005\n").unwrap();
        let spec = SignalSpec {
            kind: "tabulated_ratio".to_string(),
            file: Some(path.clone()),
            ..SignalSpec::single_film()
        };
        let built = SignalRegistry::builtin().build(&spec).unwrap();
        assert_relative_eq!(built.signal.ratio(rt(0.925)), 0.0075, max_relative = 1e-12);
        std::fs::remove_file(&path).ok();

        // both table and file is ambiguous
        let both = SignalSpec {
            table: Some(vec![(0.9, 0.01), (0.95, 0.005)]),
            ..spec
        };
        assert!(SignalRegistry::builtin().build(&both).is_err());
        // a missing file is an I/O-level error
        let gone = SignalSpec {
            kind: "tabulated_ratio".to_string(),
            file: Some(std::path::PathBuf::from("/nonexistent/ratio.txt")),
            ..SignalSpec::single_film()
        };
        assert!(SignalRegistry::builtin().build(&gone).is_err());
    }

    #[test]
    fn registry_accepts_custom_strategies() {
        fn build_quadratic(_spec: &SignalSpec) -> Result<BuiltSignal> {
            struct Quadratic;
            impl Signal for Quadratic {
                fn kind(&self) -> &'static str {
                    "quadratic"
                }
                fn ratio(&self, t: ReducedTemp) -> f64 {
                    (1.0 - t.value()).powi(2)
                }
            }
            Ok(BuiltSignal {
                signal: Box::new(Quadratic),
                warnings: Vec::new(),
            })
        }

        let mut reg = SignalRegistry::builtin();
        reg.register("quadratic", build_quadratic);
        let built = reg
            .build(&SignalSpec {
                kind: "quadratic".to_string(),
                ..SignalSpec::single_film()
            })
            .unwrap();
        assert_relative_eq!(built.signal.ratio(rt(0.9)), 0.01, max_relative = 1e-12);
    }
}
