#![allow(dead_code)]

use tunnelbound::potential::{DispersionProfile, PotentialSpec};

pub fn sech2_direct(t: f64) -> f64 {
    1.0 / t.cosh().powi(2)
}

/// Closed-form transmission through `V = v0` on `|x| < a` (width `2a`).
pub fn square_barrier_t(v0: f64, a: f64, e: f64) -> f64 {
    let l = 2.0 * a;
    let ratio = if e < v0 {
        let kappa = (v0 - e).sqrt();
        (kappa * l).sinh() / kappa
    } else if e > v0 {
        let q = (e - v0).sqrt();
        (q * l).sin() / q
    } else {
        l
    };
    1.0 / (1.0 + v0 * v0 * ratio * ratio / (4.0 * e))
}

/// Closed-form transmission through `V = v0 sech²(x/a)`, `v0 > 0`.
pub fn sech2_barrier_t(v0: f64, a: f64, e: f64) -> f64 {
    let s = (std::f64::consts::PI * e.sqrt() * a).sinh().powi(2);
    let disc = v0 * a * a - 0.25;
    let c = if disc >= 0.0 {
        (std::f64::consts::PI * disc.sqrt()).cosh().powi(2)
    } else {
        (std::f64::consts::PI * (-disc).sqrt()).cos().powi(2)
    };
    s / (s + c)
}

/// Step transmission `4 k₋ k₊ / (k₋ + k₊)²`.
pub fn step_t(left: f64, right: f64, e: f64) -> f64 {
    let (km, kp) = ((e - left).sqrt(), (e - right).sqrt());
    4.0 * km * kp / (km + kp).powi(2)
}

pub fn profile(p: &PotentialSpec, e: f64) -> DispersionProfile {
    DispersionProfile::new(p.clone(), e).unwrap()
}

/// The four potentials of the dominance suite.
pub fn suite() -> Vec<(&'static str, PotentialSpec)> {
    vec![
        ("square", PotentialSpec::square_barrier(1.0, 1.0).unwrap()),
        ("sech2", PotentialSpec::sech2_bump(2.0, 1.0).unwrap()),
        ("gaussian", PotentialSpec::gaussian_bump(1.5, 0.7).unwrap()),
        ("step", PotentialSpec::step(0.0, -3.0).unwrap()),
    ]
}

/// Every built-in kind, including a tabulated asymmetric bump.
pub fn builtins() -> Vec<(&'static str, PotentialSpec)> {
    let x: Vec<f64> = (0..41).map(|i| -2.0 + 0.1 * i as f64).collect();
    let v: Vec<f64> = x.iter().map(|&x| (1.0 - x * x / 4.0).powi(2) * (1.0 + 0.3 * x)).collect();
    let mut all = suite();
    all.push(("zero", PotentialSpec::zero()));
    all.push(("well", PotentialSpec::sech2_bump(-1.0, 0.8).unwrap()));
    all.push(("tabulated", PotentialSpec::tabulated(x, v).unwrap()));
    all
}

/// `n` energies spread log-uniformly over `(lo, hi)`.
pub fn energies(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf((i as f64 + 0.5) / n as f64)).collect()
}
