//! `critfield budget` — sensitivity requirement curves and worst cases.

use critfield::budget::budget_curve;

use crate::commands::build_signal;
use crate::output::{fmt, provenance_json, write_json, Csv};
use crate::{CliError, Ctx};

pub fn run(ctx: &Ctx) -> Result<u8, CliError> {
    let film = ctx.config.film.to_params()?;
    let signal = build_signal(&ctx.config.signal)?.signal;
    let b = &ctx.config.budget;
    let opts = ctx.config.thresholds.budget_options();

    let rows = budget_curve(&film, signal.as_ref(), b.delta_r, b.window, b.points, &opts)?;

    let mut csv = Csv::new(
        ctx,
        &[format!("delta_r={}", fmt(b.delta_r))],
        "t,delta_t,delta_T_K,delta_theta_max_rad,r,snr_contribution",
    );
    for row in &rows {
        csv.row(&[
            fmt(row.t),
            fmt(row.delta_t),
            fmt(row.delta_temp),
            fmt(row.delta_theta_max),
            fmt(row.r),
            fmt(row.snr_contribution),
        ]);
    }
    csv.write(&ctx.out_dir.join("budget.csv"))?;

    // Requirements tighten toward t -> 1: the worst case over the window
    // is the minimum of each tolerance.
    let worst = rows
        .iter()
        .min_by(|a, b| a.delta_t.partial_cmp(&b.delta_t).unwrap())
        .expect("nonempty budget curve");
    write_json(
        &ctx.out_dir.join("budget.json"),
        &serde_json::json!({
            "provenance": provenance_json(ctx),
            "delta_r": b.delta_r,
            "window": [rows.first().unwrap().t, rows.last().unwrap().t],
            "points": rows.len(),
            "worst_case": {
                "t": worst.t,
                "delta_t": worst.delta_t,
                "delta_T_K": worst.delta_temp,
                "delta_theta_max_rad": worst.delta_theta_max,
            },
        }),
    )?;
    Ok(0)
}
