//! `critfield campaign` — generate the synthetic measurement campaign,
//! or reduce already-measured transition curves to critical points.

use std::path::{Path, PathBuf};

use critfield::campaign::{field_ladder, reduce_curve, run_campaign, CampaignOptions};
use critfield::synth::{Transition, TransitionRecord};

use crate::commands::build_signal;
use crate::output::{fmt, provenance_json, write_json, Csv};
use crate::{CliError, Ctx};

pub fn run(ctx: &Ctx, curve_files: &[PathBuf]) -> Result<u8, CliError> {
    if curve_files.is_empty() {
        generate(ctx)
    } else {
        ingest(ctx, curve_files)
    }
}

fn apparatus(ctx: &Ctx) -> Result<critfield::ApparatusParams, CliError> {
    Ok(ctx
        .config
        .apparatus
        .as_ref()
        .ok_or_else(|| CliError::Usage("campaign requires an `apparatus` section".to_string()))?
        .to_params()?)
}

fn generate(ctx: &Ctx) -> Result<u8, CliError> {
    let film = ctx.config.film.to_params()?;
    let signal = build_signal(&ctx.config.signal)?.signal;
    let apparatus = apparatus(ctx)?;
    let seed = ctx.require_seed()?;
    let grids = &ctx.config.grids;

    let fields = field_ladder(&film, signal.as_ref(), grids.campaign_t, grids.n_fields)?;
    let opts = CampaignOptions {
        pad: grids.curve_pad_mk * 1e-3,
        step: grids.curve_step_mk * 1e-3,
        fraction: ctx.config.thresholds.transition_fraction,
    };
    let campaign = run_campaign(&film, signal.as_ref(), &apparatus, &fields, &opts, seed)?;

    for (idx, curve) in campaign.curves.iter().enumerate() {
        let mut csv = Csv::new(
            ctx,
            &[format!("field_G={}", fmt(curve.field))],
            "temperature_K,field_G,resistance_mOhm",
        );
        for rec in &curve.records {
            csv.row(&[fmt(rec.temperature), fmt(rec.field), fmt(rec.resistance)]);
        }
        csv.write(
            &ctx.out_dir
                .join("curves")
                .join(format!("curve_{idx:03}.csv")),
        )?;
    }

    let transitions: Vec<(f64, Transition)> = campaign
        .curves
        .iter()
        .map(|c| (c.field, c.transition))
        .collect();
    write_points(ctx, campaign.t_ref, &campaign.points)?;
    write_summary(ctx, campaign.t_ref, &transitions, "generate", &[])?;
    Ok(0)
}

fn ingest(ctx: &Ctx, curve_files: &[PathBuf]) -> Result<u8, CliError> {
    let film = ctx.config.film.to_params()?;
    let signal = build_signal(&ctx.config.signal)?.signal;
    let apparatus = apparatus(ctx)?;
    let fraction = ctx.config.thresholds.transition_fraction;

    let mut points = Vec::with_capacity(curve_files.len());
    let mut transitions = Vec::with_capacity(curve_files.len());
    for path in curve_files {
        let (field, records) = read_curve(path)?;
        let (transition, point) = reduce_curve(
            &film,
            signal.as_ref(),
            &apparatus,
            field,
            &records,
            fraction,
        )?;
        transitions.push((field, transition));
        points.push(point);
    }
    let sources: Vec<String> = curve_files
        .iter()
        .map(|p| p.display().to_string())
        .collect();
    write_points(ctx, film.t_c, &points)?;
    write_summary(ctx, film.t_c, &transitions, "ingest", &sources)?;
    Ok(0)
}

/// Parse a `temperature_K,field_G,resistance_mOhm` curve CSV; the field
/// column must be constant within one file.
fn read_curve(path: &Path) -> Result<(f64, Vec<TransitionRecord>), CliError> {
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "curve file {} does not exist",
            path.display()
        )));
    }
    let text = std::fs::read_to_string(path)?;
    let mut header_seen = false;
    let mut records: Vec<TransitionRecord> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line != "temperature_K,field_G,resistance_mOhm" {
                return Err(CliError::Usage(format!(
                    "{}: line {}: expected header `temperature_K,field_G,resistance_mOhm`, got {line:?}",
                    path.display(),
                    lineno + 1
                )));
            }
            header_seen = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 3 {
            return Err(CliError::Usage(format!(
                "{}: line {}: expected 3 columns, got {}",
                path.display(),
                lineno + 1,
                cols.len()
            )));
        }
        let parse = |s: &str, what: &str| -> Result<f64, CliError> {
            s.parse::<f64>().map_err(|e| {
                CliError::Usage(format!(
                    "{}: line {}: bad {what} value {s:?}: {e}",
                    path.display(),
                    lineno + 1
                ))
            })
        };
        let rec = TransitionRecord {
            temperature: parse(cols[0], "temperature_K")?,
            field: parse(cols[1], "field_G")?,
            resistance: parse(cols[2], "resistance_mOhm")?,
        };
        if let Some(first) = records.first() {
            if rec.field != first.field {
                return Err(CliError::Usage(format!(
                    "{}: the field column must be constant within one curve ({} vs {})",
                    path.display(),
                    first.field,
                    rec.field
                )));
            }
        }
        records.push(rec);
    }
    let field = records
        .first()
        .ok_or_else(|| CliError::Usage(format!("{}: no data rows found", path.display())))?
        .field;
    Ok((field, records))
}

fn write_points(
    ctx: &Ctx,
    t_ref: f64,
    points: &[critfield::fit::CriticalPoint],
) -> Result<(), CliError> {
    let mut csv = Csv::new(ctx, &[format!("t_ref_K={}", fmt(t_ref))], "t,h_G,sigma_h_G");
    for p in points {
        csv.row(&[fmt(p.t), fmt(p.h), fmt(p.sigma_h.unwrap_or(0.0))]);
    }
    csv.write(&ctx.out_dir.join("points.csv"))?;
    Ok(())
}

fn write_summary(
    ctx: &Ctx,
    t_ref: f64,
    transitions: &[(f64, Transition)],
    mode: &str,
    sources: &[String],
) -> Result<(), CliError> {
    let per_field: Vec<serde_json::Value> = transitions
        .iter()
        .map(|(field, tr)| {
            serde_json::json!({
                "field_G": field,
                "transition_K": tr.temperature,
                "uncertainty_K": tr.uncertainty,
                "r_low_mOhm": tr.r_low,
                "r_high_mOhm": tr.r_high,
                "noise_mOhm": tr.noise,
                "slope_mOhm_per_K": tr.slope,
            })
        })
        .collect();
    write_json(
        &ctx.out_dir.join("campaign.json"),
        &serde_json::json!({
            "provenance": provenance_json(ctx),
            "mode": mode,
            "sources": sources,
            "t_ref_K": t_ref,
            "n_fields": transitions.len(),
            "transitions": per_field,
        }),
    )?;
    Ok(())
}
