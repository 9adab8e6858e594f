//! `critfield detect` — detectability verdict for the configured signal.

use std::path::Path;

use critfield::budget::detectability;
use critfield::model::ReducedTemp;

use crate::commands::{build_signal, fit::read_points, linspace};
use crate::output::{provenance_json, write_json};
use crate::{CliError, Ctx};

pub fn run(ctx: &Ctx, points_path: Option<&Path>) -> Result<u8, CliError> {
    let signal = build_signal(&ctx.config.signal)?.signal;
    let opts = ctx.config.thresholds.budget_options();

    let (t_grid, delta_r, mode) = match points_path {
        Some(path) => {
            // Per-point sensitivities from the measured uncertainties.
            let points = read_points(path)?;
            let mut ts = Vec::with_capacity(points.len());
            let mut dr = Vec::with_capacity(points.len());
            for p in &points {
                let sigma = p.sigma_h.ok_or_else(|| {
                    CliError::Usage(format!(
                        "{}: detect needs a positive sigma_h_G column for per-point sensitivities",
                        path.display()
                    ))
                })?;
                ts.push(p.t);
                dr.push(sigma / p.h);
            }
            (ts, dr, "per_point")
        }
        None => {
            // Uniform sensitivity on the budget window.
            let b = &ctx.config.budget;
            let grid = linspace(b.window.0, b.window.1.min(opts.t_max), b.points);
            (grid, vec![b.delta_r], "uniform")
        }
    };

    let det = detectability(&delta_r, &t_grid, signal.as_ref(), &opts)?;

    let per_point: Vec<serde_json::Value> = t_grid
        .iter()
        .enumerate()
        .filter(|(_, &t)| t <= opts.t_max)
        .map(|(i, &t)| {
            let dr = if delta_r.len() == 1 {
                delta_r[0]
            } else {
                delta_r[i]
            };
            let r = signal.ratio(ReducedTemp::new(t).expect("validated grid"));
            serde_json::json!({ "t": t, "r": r, "delta_r": dr, "contribution": r / dr })
        })
        .collect();

    write_json(
        &ctx.out_dir.join("detect.json"),
        &serde_json::json!({
            "provenance": provenance_json(ctx),
            "mode": mode,
            "signal_kind": signal.kind(),
            "snr": det.snr,
            "threshold": det.threshold,
            "detectable": det.detectable,
            "points_used": det.points_used,
            "per_point": per_point,
        }),
    )?;

    println!(
        "{}: snr {:.3} vs threshold {} over {} points",
        if det.detectable {
            "DETECTABLE"
        } else {
            "NOT DETECTABLE"
        },
        det.snr,
        det.threshold,
        det.points_used,
    );
    Ok(0)
}
