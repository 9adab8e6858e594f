//! `critfield bridge` — four-element film/cavity bridge sweep.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use critfield::bridge::{peak_trace, BridgeArm, BridgeSpec, PeakOptions};
use critfield::config::BridgeConfig;
use critfield::signal::SingleFilm;
use critfield::synth::{derive_seed, transition_midpoint};

use crate::commands::build_signal;
use crate::output::{fmt, provenance_json, write_json, Csv};
use crate::{CliError, Ctx};

/// Stream tag separating arm-imperfection draws from measurement noise.
const IMPERFECTION_STREAM: u64 = 0xA41;

fn into_four(mut arms: Vec<BridgeArm>) -> [BridgeArm; 4] {
    let d = arms.pop().expect("four arms");
    let c = arms.pop().expect("four arms");
    let b = arms.pop().expect("four arms");
    let a = arms.pop().expect("four arms");
    [a, b, c, d]
}

fn build_arms(ctx: &Ctx, cfg: &BridgeConfig, seed: u64) -> Result<[BridgeArm; 4], CliError> {
    if let Some(arm_cfgs) = &cfg.arms {
        if arm_cfgs.len() != 4 {
            return Err(CliError::Usage(format!(
                "bridge.arms must list exactly 4 arms, got {}",
                arm_cfgs.len()
            )));
        }
        let mut arms = Vec::with_capacity(4);
        for ac in arm_cfgs {
            arms.push(BridgeArm {
                film: ac.film.to_params()?,
                signal: build_signal(&ac.signal)?.signal,
                apparatus: ac.apparatus.to_params()?,
            });
        }
        return Ok(into_four(arms));
    }

    // Template expansion: arms 1 and 3 simple films, arms 2 and 4 the
    // configured cavity signal, with seeded fabrication spread.
    let film = ctx.config.film.to_params()?;
    let apparatus = ctx
        .config
        .apparatus
        .as_ref()
        .ok_or_else(|| {
            CliError::Usage("bridge template expansion needs an `apparatus` section".to_string())
        })?
        .to_params()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, IMPERFECTION_STREAM));
    let mut arms = Vec::with_capacity(4);
    for i in 0..4 {
        let r_jitter: f64 = rng.random_range(-1.0..1.0);
        let tc_jitter: f64 = rng.random_range(-1.0..1.0);
        let mut film_i = film;
        film_i.t_c += tc_jitter * cfg.template.t_c_mk * 1e-3;
        let mut app_i = apparatus;
        app_i.r_normal *= 1.0 + r_jitter * cfg.template.r_normal_rel;
        arms.push(BridgeArm {
            film: film_i,
            signal: if i % 2 == 0 {
                Box::new(SingleFilm)
            } else {
                build_signal(&ctx.config.signal)?.signal
            },
            apparatus: app_i,
        });
    }
    Ok(into_four(arms))
}

pub fn run(ctx: &Ctx) -> Result<u8, CliError> {
    let cfg = ctx
        .config
        .bridge
        .clone()
        .ok_or_else(|| CliError::Usage("bridge requires a `bridge` section".to_string()))?;
    if cfg.fields_g.is_empty() {
        return Err(CliError::Usage(
            "bridge.fields_g must list at least one field".to_string(),
        ));
    }
    let seed = ctx.require_seed()?;
    let arms = build_arms(ctx, &cfg, seed)?;
    let spec = BridgeSpec::new(arms, cfg.excitation_ua)?;

    // One common temperature grid spanning every arm's transition at
    // every field, padded by t_pad_mk.
    let mut t_lo = f64::INFINITY;
    let mut t_hi = f64::NEG_INFINITY;
    for &field in &cfg.fields_g {
        for arm in &spec.arms {
            let t_mid = transition_midpoint(&arm.film, arm.signal.as_ref(), field)?;
            t_lo = t_lo.min(t_mid);
            t_hi = t_hi.max(t_mid);
        }
    }
    let pad = cfg.t_pad_mk * 1e-3;
    let step = cfg.t_step_mk * 1e-3;
    if !(step > 0.0 && pad > step) {
        return Err(CliError::Usage(format!(
            "bridge grid needs 0 < t_step_mk ({}) < t_pad_mk ({})",
            cfg.t_step_mk, cfg.t_pad_mk
        )));
    }
    let n_steps = ((t_hi - t_lo + 2.0 * pad) / step).ceil() as usize;
    let t_grid: Vec<f64> = (0..=n_steps)
        .map(|i| t_lo - pad + i as f64 * step)
        .collect();

    let opts = PeakOptions {
        smooth_window: cfg.smooth_window,
        significance: cfg.significance,
    };
    let peaks = peak_trace(&spec, &cfg.fields_g, &t_grid, seed, &opts)?;

    let mut csv = Csv::new(ctx, &[], "field_G,peak_T_K,peak_height_mOhm,significant");
    for p in &peaks {
        csv.row(&[
            fmt(p.field),
            fmt(p.peak_temperature),
            fmt(p.peak_height),
            p.significant.to_string(),
        ]);
    }
    csv.write(&ctx.out_dir.join("bridge_trace.csv"))?;

    let arm_summaries: Vec<serde_json::Value> = spec
        .arms
        .iter()
        .map(|arm| {
            serde_json::json!({
                "t_c_K": arm.film.t_c,
                "signal_kind": arm.signal.kind(),
                "r_normal_mOhm": arm.apparatus.r_normal,
                "noise_sigma_mOhm": arm.apparatus.noise_sigma,
            })
        })
        .collect();
    write_json(
        &ctx.out_dir.join("bridge.json"),
        &serde_json::json!({
            "provenance": provenance_json(ctx),
            "excitation_uA": spec.excitation,
            "arms": arm_summaries,
            "t_grid": { "lo_K": t_grid[0], "hi_K": t_grid[t_grid.len() - 1], "step_mK": cfg.t_step_mk },
            "smooth_window": cfg.smooth_window,
            "significance": cfg.significance,
            "peaks": peaks,
        }),
    )?;
    Ok(0)
}
