//! Every rigorous bound that reports itself valid must sit below the exact
//! transmission.

mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tunnelbound::bounds::*;
use tunnelbound::free::{ChiFunction, FreeFunction, LogProfile, LogTerm};
use tunnelbound::potential::DispersionProfile;
use tunnelbound::scattering::{solve_scattering, DEFAULT_ACCURACY};

const TOL: f64 = 1e-6;

fn random_profile(rng: &mut ChaCha8Rng, d: &DispersionProfile) -> LogProfile {
    let (km, kp) = d.asymptotic_wavenumbers();
    let c = d.potential.center();
    LogProfile::interpolating(km, kp, c + rng.gen_range(-0.5..0.5), rng.gen_range(0.2..2.0)).with_term(LogTerm::Bump {
        amplitude: rng.gen_range(-1.0..1.0),
        center: c + rng.gen_range(-1.0..1.0),
        width: rng.gen_range(0.3..2.0),
    })
}

fn random_unit(rng: &mut ChaCha8Rng, d: &DispersionProfile) -> LogProfile {
    LogProfile::bump(1.0, rng.gen_range(-0.8..0.8), d.potential.center() + rng.gen_range(-1.0..1.0), rng.gen_range(0.3..2.0))
}

/// The sampled free-function choices at one energy.
fn sampled_reports(d: &DispersionProfile, rng: &mut ChaCha8Rng) -> Vec<tunnelbound::Result<BoundReport>> {
    let k = d.k_minus_inf().min(d.k_plus_inf());
    let mut out: Vec<_> = BoundVariant::ALL
        .iter()
        .filter(|v| v.is_rigorous())
        .map(|&v| evaluate_default(d, v, None))
        .collect();
    for _ in 0..2 {
        let h = FreeFunction::Smooth(random_profile(rng, d));
        out.push(bound_theorem1(d, &h));
        out.push(bound_weak(d, &h));
    }
    for choice in ImprovedChoice::all_forms(&random_profile(rng, d), &random_unit(rng, d)) {
        out.push(bound_improved(d, &choice));
    }
    let delta = rng.gen_range(0.2 * k..k);
    out.push(bound_case(d, 4, &CaseParams { delta: Some(delta), ..CaseParams::default() }));
    out.push(bound_wkb_like(d, delta));
    out.push(bound_improved5(d, &FreeFunction::MaxKDelta { delta }, &ChiFunction::Kappa));
    out.push(bound_improved5(
        d,
        &FreeFunction::Smooth(random_profile(rng, d)),
        &ChiFunction::LogDerivative(random_unit(rng, d)),
    ));
    out.push(bound_case(d, 2, &CaseParams { h_interp_scale: Some(rng.gen_range(0.1..3.0)), ..CaseParams::default() }));
    out.push(bound_schwarzian(d, &SchwarzianForm::General(FreeFunction::Smooth(random_unit(rng, d)))));
    out
}

#[test]
fn rigorous_bounds_never_exceed_exact_transmission() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0usize;
    let mut failures = Vec::new();
    for (name, p) in suite() {
        let lo = p.v_minus_inf.max(p.v_plus_inf);
        for e in energies(0.05, 4.0, 30) {
            let d = profile(&p, lo + e);
            let t = solve_scattering(&d, DEFAULT_ACCURACY).unwrap().transmission;
            for r in sampled_reports(&d, &mut rng) {
                let r = r.unwrap_or_else(|err| panic!("{name} E={}: {err}", lo + e));
                assert!(r.bound >= 0.0 && r.bound <= 1.0 || r.bound.is_nan());
                if r.is_rigorous && r.valid {
                    checked += 1;
                    if r.bound > t + TOL {
                        failures.push(format!("{name} E={:.4} {}: bound {} > T {} ({})", lo + e, r.variant, r.bound, t, r.choice));
                    }
                }
            }
        }
    }
    println!("{checked} valid rigorous evaluations");
    assert!(failures.is_empty(), "{} violations:\n{}", failures.len(), failures.join("\n"));
    assert!(checked >= 900, "only {checked} valid rigorous evaluations");
}

#[test]
fn estimates_are_not_flagged_rigorous() {
    let p = suite().remove(0).1;
    let d = profile(&p, 0.5);
    for v in [BoundVariant::WkbEstimate, BoundVariant::WkbExponential] {
        assert!(!evaluate_default(&d, v, None).unwrap().is_rigorous);
    }
}
