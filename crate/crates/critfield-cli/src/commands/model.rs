//! `critfield model` — tabulate the field model and its validity report.

use critfield::model::{
    cavity_field, critical_field_parallel, validity_check, ReducedTemp, ValidityPolicy,
};

use crate::commands::{build_signal, linspace};
use crate::output::{fmt, provenance_json, write_json, Csv};
use crate::{CliError, Ctx};

pub fn run(ctx: &Ctx) -> Result<u8, CliError> {
    let film = ctx.config.film.to_params()?;
    let signal = build_signal(&ctx.config.signal)?.signal;
    let (t_lo, t_hi) = ctx.config.grids.model_t;
    let grid = linspace(t_lo, t_hi, ctx.config.grids.model_points);
    let waive = ctx.config.thresholds.waive_validity;

    // Validity over the grid: worst margin per condition.
    let mut worst: Vec<serde_json::Value> = Vec::new();
    let mut all_pass = true;
    for (ci, name) in [(0usize, "thin_film"), (1usize, "nucleation_coefficient")] {
        let mut worst_margin = f64::INFINITY;
        let mut at = serde_json::Value::Null;
        for &t in grid.iter().filter(|&&t| t < 1.0) {
            let report = validity_check(&film, ReducedTemp::new(t)?);
            let c = &report.conditions[ci];
            if c.margin < worst_margin {
                worst_margin = c.margin;
                at = serde_json::json!({
                    "name": c.name, "t": t, "value": c.value,
                    "bound": c.bound, "margin": c.margin, "pass": c.pass,
                });
            }
            all_pass &= c.pass;
        }
        worst.push(serde_json::json!({ "condition": name, "worst": at }));
    }
    if !all_pass && !waive {
        return Err(CliError::Numerical(format!(
            "validity conditions fail on the model grid (worst margins: {}); \
             set thresholds.waive_validity to evaluate anyway",
            serde_json::to_string(&worst).unwrap_or_default()
        )));
    }

    let mut csv = Csv::new(ctx, &[], "t,sqrt_1mt,h_film_G,h_cavity_G,r");
    for &t in &grid {
        let rt = ReducedTemp::new(t)?;
        let h_film = critical_field_parallel(&film, rt, ValidityPolicy::Waive)?;
        let h_cavity = cavity_field(&film, rt, signal.as_ref(), ValidityPolicy::Waive)?;
        let r = signal.ratio(rt);
        csv.row(&[
            fmt(t),
            fmt((1.0 - t).sqrt()),
            fmt(h_film),
            fmt(h_cavity),
            fmt(r),
        ]);
    }
    csv.write(&ctx.out_dir.join("model.csv"))?;

    write_json(
        &ctx.out_dir.join("validity.json"),
        &serde_json::json!({
            "provenance": provenance_json(ctx),
            "pass": all_pass,
            "waived": !all_pass && waive,
            "grid_points": grid.len(),
            "t_window": [t_lo, t_hi],
            "conditions": worst,
        }),
    )?;

    if !all_pass {
        eprintln!(
            "critfield: warning: validity conditions violated on the grid; evaluated under waiver"
        );
        return Ok(2);
    }
    Ok(0)
}
