pub mod bridge;
pub mod budget;
pub mod campaign;
pub mod detect;
pub mod fit;
pub mod model;

use critfield::signal::{BuiltSignal, SignalRegistry, SignalSpec};

use crate::CliError;

/// Build a signal strategy from its spec, forwarding construction
/// warnings to stderr. A missing table file is a configuration error
/// (the config invariant is that referenced files exist).
pub fn build_signal(spec: &SignalSpec) -> Result<BuiltSignal, CliError> {
    if let Some(path) = &spec.file {
        if !path.exists() {
            return Err(CliError::Usage(format!(
                "signal table file {} does not exist",
                path.display()
            )));
        }
    }
    let built = SignalRegistry::builtin().build(spec)?;
    for w in &built.warnings {
        eprintln!("critfield: warning: {w}");
    }
    Ok(built)
}

/// Evenly spaced inclusive grid.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}
