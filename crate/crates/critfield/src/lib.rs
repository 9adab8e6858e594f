//! Analysis chain for parallel critical-field measurements on thin
//! superconducting films and film-in-cavity comparison experiments.
//!
//! The crate covers the full desk-side pipeline of such an experiment:
//!
//! * [`model`] — closed-form physics: the near-`T_c` parallel critical
//!   field of a thin film with its nucleation correction, validity
//!   margins, the parallel/perpendicular anisotropy ratio and the
//!   linearized misalignment error, and the in-cavity field derived from
//!   a deviation-ratio signal.
//! * [`signal`] — the deviation-ratio strategies `r(t)` behind a common
//!   trait, selected by name at runtime through a registry (null
//!   single-film, parametric power law, tabulated curves from files).
//! * [`synth`] — seeded synthetic `R(T)` transition curves with apparatus
//!   noise, and the reduction of measured curves back to transition
//!   temperatures with calibrated uncertainties.
//! * [`campaign`] — field ladders of synthetic curves reduced to
//!   fit-ready critical points with propagated uncertainties.
//! * [`fit`] — weighted Levenberg-Marquardt fit of critical-field points,
//!   parameter covariance, relative residuals and linearized confidence
//!   bands.
//! * [`budget`] — temperature and alignment sensitivity requirements
//!   implied by a target relative field sensitivity, and the quadrature
//!   signal-to-noise detection verdict.
//! * [`bridge`] — the four-element film/cavity bridge and the evolution
//!   of its imbalance peak with applied field.
//! * [`config`] — the JSON run configuration shared by the CLI commands.
//!
//! Everything is pure and deterministic: randomness enters only through
//! explicit seeds, and repeated runs are bit-identical.

pub mod bridge;
pub mod budget;
pub mod campaign;
pub mod config;
pub mod error;
pub mod fit;
pub mod model;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
pub use model::{
    cavity_field, critical_field_parallel, misalignment_shift, perp_parallel_ratio,
    single_film_law, validity_check, Alignment, FilmParams, ReducedTemp, ValidityPolicy,
};
pub use signal::{Signal, SignalRegistry, SignalSpec};
pub use synth::{extract_transition, transition_curve, ApparatusParams, TransitionRecord};

#[cfg(test)]
mod proptests {
    use crate::fit::{fit_critical_field, model_field, CriticalPoint, FitOptions};
    use crate::model::*;
    use crate::signal::{PowerLaw, Signal};
    use proptest::prelude::*;

    fn arb_film() -> impl Strategy<Value = FilmParams> {
        (
            0.5f64..8.0,  // t_c
            10f64..900.0, // h_t0
            30f64..300.0, // lambda0
            30f64..400.0, // xi0
            0.01f64..1.0, // thickness as a fraction of sqrt(5)*lambda0
        )
            .prop_map(|(t_c, h_t0, lambda0, xi0, frac)| {
                let thickness = (frac * 5f64.sqrt() * lambda0 * 0.99).max(0.5);
                FilmParams::new(t_c, h_t0, lambda0, xi0, thickness).unwrap()
            })
    }

    proptest! {
        // Strict monotone decrease of the parallel field and exact zero at t = 1.
        #[test]
        fn critical_field_strictly_decreasing(p in arb_film()) {
            let mut last = f64::INFINITY;
            for i in 0..=500 {
                let t = ReducedTemp::new(i as f64 / 500.0).unwrap();
                let h = critical_field_parallel(&p, t, ValidityPolicy::Waive).unwrap();
                prop_assert!(h < last);
                last = h;
            }
            prop_assert_eq!(last, 0.0);
        }

        // Cavity inversion ratio identity: H_film/H_cavity - 1 == r.
        #[test]
        fn cavity_inversion_identity(p in arb_film(), amp in 1e-4f64..0.2, t in 0.05f64..0.99) {
            let s = PowerLaw::new(amp, 1.0).unwrap();
            let rt = ReducedTemp::new(t).unwrap();
            let hf = critical_field_parallel(&p, rt, ValidityPolicy::Waive).unwrap();
            let hc = cavity_field(&p, rt, &s, ValidityPolicy::Waive).unwrap();
            let r = s.ratio(rt);
            prop_assert!(((hf / hc - 1.0) - r).abs() <= 1e-12 * (1.0 + r));
        }

        // Misalignment shift is exactly linear in delta_theta.
        #[test]
        fn misalignment_linearity(p in arb_film(), t in 0.0f64..0.99, dt in 1e-7f64..1e-3) {
            let rt = ReducedTemp::new(t).unwrap();
            let one = misalignment_shift(&p, rt, &Alignment::new(0.0, dt).unwrap()).unwrap();
            let five = misalignment_shift(&p, rt, &Alignment::new(0.0, 5.0 * dt).unwrap()).unwrap();
            prop_assert!((five - 5.0 * one).abs() <= 1e-12 * five.abs());
        }

        // Fitting noiseless model points recovers the generating parameters.
        #[test]
        fn fit_recovers_noiseless_truth(p in arb_film(), perturb in 0.95f64..1.05) {
            let theta = [p.amplitude(), p.t_c, p.nucleation_coefficient()];
            let points: Vec<CriticalPoint> = (0..12)
                .map(|i| {
                    let t = 0.9 + 0.09 * i as f64 / 11.0;
                    CriticalPoint { t, h: model_field(&theta, p.t_c, t), sigma_h: None }
                })
                .collect();
            let init = FilmParams::new(
                p.t_c * (1.0 + (perturb - 1.0) * 0.01),
                p.h_t0,
                p.lambda0 * perturb,
                p.xi0,
                p.thickness,
            ).unwrap();
            let opts = FitOptions { t_ref: Some(p.t_c), ..FitOptions::default() };
            let fr = fit_critical_field(&points, &init, &opts).unwrap();
            prop_assert!(fr.converged);
            prop_assert!((fr.amplitude / p.amplitude() - 1.0).abs() < 1e-6);
            prop_assert!((fr.t_c / p.t_c - 1.0).abs() < 1e-6);
        }
    }
}
