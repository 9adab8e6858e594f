//! `critfield fit` — fit a points file and emit parameters, covariance,
//! residuals and confidence bands.

use std::path::Path;

use critfield::fit::{confidence_band, fit_critical_field, CriticalPoint, FitOptions};

use crate::output::{fmt, provenance_json, write_json, Csv};
use crate::{CliError, Ctx};

/// Parse a `t,h_G[,sigma_h_G]` CSV. `#` lines are comments; the header
/// row is mandatory; a zero or absent sigma column means "unweighted".
pub fn read_points(path: &Path) -> Result<Vec<CriticalPoint>, CliError> {
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "points file {} does not exist",
            path.display()
        )));
    }
    let text = std::fs::read_to_string(path)?;
    let mut header_seen = false;
    let mut points = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if !(line.starts_with("t,h_G") || line.starts_with("t,h_g")) {
                return Err(CliError::Usage(format!(
                    "line {}: expected header `t,h_G[,sigma_h_G]`, got {line:?}",
                    lineno + 1
                )));
            }
            header_seen = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 2 && cols.len() != 3 {
            return Err(CliError::Usage(format!(
                "line {}: expected 2 or 3 columns, got {}",
                lineno + 1,
                cols.len()
            )));
        }
        let parse = |s: &str, what: &str| -> Result<f64, CliError> {
            s.parse::<f64>().map_err(|e| {
                CliError::Usage(format!("line {}: bad {what} value {s:?}: {e}", lineno + 1))
            })
        };
        let t = parse(cols[0], "t")?;
        let h = parse(cols[1], "h_G")?;
        let sigma = if cols.len() == 3 {
            let s = parse(cols[2], "sigma_h_G")?;
            if s > 0.0 {
                Some(s)
            } else {
                None
            }
        } else {
            None
        };
        points.push(CriticalPoint::new(t, h, sigma).map_err(|e| CliError::Usage(e.to_string()))?);
    }
    if points.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: no data rows found",
            path.display()
        )));
    }
    Ok(points)
}

pub fn run(ctx: &Ctx, points_path: &Path) -> Result<u8, CliError> {
    let points = read_points(points_path)?;
    let film = ctx.config.film.to_params()?;
    let init = match &ctx.config.fit.init {
        Some(cfg) => cfg.to_params()?,
        None => film,
    };
    // The points were reduced with the film section's T_c; the fit may
    // start elsewhere, but the reference stays with the data.
    let opts = FitOptions {
        t_ref: Some(film.t_c),
        ..ctx.config.fit.to_options()
    };
    let fr = fit_critical_field(&points, &init, &opts)?;

    let level = ctx.config.thresholds.band_level;
    let mut band_rows: Vec<(f64, [String; 5])> = Vec::with_capacity(points.len());
    for p in &points {
        let band = confidence_band(&fr, p.t, level)?;
        let axis = (1.0 - p.t).sqrt();
        band_rows.push((
            axis,
            [
                fmt(axis),
                fmt(p.h),
                fmt(band.center),
                fmt(band.low),
                fmt(band.high),
            ],
        ));
    }
    // ascending on the sqrt(1 - t) presentation axis
    band_rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut csv = Csv::new(
        ctx,
        &[format!("band_level={level}")],
        "sqrt_1mt,h_G,h_model_G,band_low_G,band_high_G",
    );
    for (_, row) in &band_rows {
        csv.row(row.as_slice());
    }
    csv.write(&ctx.out_dir.join("band.csv"))?;

    let covariance: Vec<f64> = fr.covariance.iter().flatten().copied().collect();
    write_json(
        &ctx.out_dir.join("fit.json"),
        &serde_json::json!({
            "provenance": provenance_json(ctx),
            "converged": fr.converged,
            "iterations": fr.iterations,
            "chi2": fr.chi2,
            "dof": fr.dof,
            "uniform_weights": fr.uniform_weights,
            "t_ref_K": fr.t_ref,
            "params": {
                "amplitude_G": fr.amplitude,
                "t_c_K": fr.t_c,
                "correction": fr.correction,
            },
            "sigma": {
                "amplitude_G": fr.sigma[0],
                "t_c_K": fr.sigma[1],
                "correction": fr.sigma[2],
            },
            "covariance_row_major": covariance,
            "derived": {
                "lambda0_nm": fr.lambda0,
                "lambda0_sigma_nm": fr.lambda0_sigma,
                "xi0_nm": fr.xi0,
                "xi0_sigma_nm": fr.xi0_sigma,
                "h_t0_G_input": init.h_t0,
                "thickness_nm_input": init.thickness,
            },
            "residuals": fr
                .residuals
                .iter()
                .map(|(t, r)| serde_json::json!({ "t": t, "rel_residual": r }))
                .collect::<Vec<_>>(),
        }),
    )?;

    if !fr.converged {
        eprintln!("critfield: warning: fit did not converge within the iteration budget");
        return Ok(2);
    }
    Ok(0)
}
