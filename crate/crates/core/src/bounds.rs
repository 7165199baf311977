//! Rigorous lower bounds `T ≥ sech²θ` and the two WKB estimates.
//!
//! Every variant reduces to an integral `θ` of a non-negative integrand over
//! the real line. The integrand is made to equal its asymptotic value outside
//! a finite window (the hull of the potential support and the windows of the
//! free functions), so the integral is taken over that window after a
//! divergence check far outside it. Jumps of the free functions are handled
//! exactly: a jump of a positive function `f` at `p` contributes
//! `½|ln(f(p⁺)/f(p⁻))|`, and a jump of `χ` contributes
//! `|Δχ| / (2 max H(p±))`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::free::{ChiFunction, FreeFunction, LogProfile};
use crate::miller_good::schwarzian_from_jet;
use crate::potential::{partition_regions, DispersionProfile, RegionPartition};
use crate::quadrature::{find_root_bisect, integrate_adaptive, IntegrationTask, DEFAULT_ABS_TOL, DEFAULT_REL_TOL};

/// Far-field integrand threshold below which an integral counts as
/// convergent.
pub const TAIL_THRESHOLD: f64 = 1e-12;

/// Samples used to locate kinks of `|·|` integrands and undeclared jumps.
const KINK_SAMPLES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVariant {
    Thm1,
    Weak,
    Case1,
    Case2,
    Case3,
    Case4,
    Case5,
    Improved1,
    Improved2,
    Improved3,
    Improved4,
    Improved5,
    WkbLike,
    Delty,
    SchwarzianGeneral,
    SchwarzianAllowed,
    WkbEstimate,
    WkbExponential,
}

impl BoundVariant {
    pub const ALL: [BoundVariant; 18] = [
        BoundVariant::Thm1,
        BoundVariant::Weak,
        BoundVariant::Case1,
        BoundVariant::Case2,
        BoundVariant::Case3,
        BoundVariant::Case4,
        BoundVariant::Case5,
        BoundVariant::Improved1,
        BoundVariant::Improved2,
        BoundVariant::Improved3,
        BoundVariant::Improved4,
        BoundVariant::Improved5,
        BoundVariant::WkbLike,
        BoundVariant::Delty,
        BoundVariant::SchwarzianGeneral,
        BoundVariant::SchwarzianAllowed,
        BoundVariant::WkbEstimate,
        BoundVariant::WkbExponential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundVariant::Thm1 => "thm1",
            BoundVariant::Weak => "weak",
            BoundVariant::Case1 => "case1",
            BoundVariant::Case2 => "case2",
            BoundVariant::Case3 => "case3",
            BoundVariant::Case4 => "case4",
            BoundVariant::Case5 => "case5",
            BoundVariant::Improved1 => "improved1",
            BoundVariant::Improved2 => "improved2",
            BoundVariant::Improved3 => "improved3",
            BoundVariant::Improved4 => "improved4",
            BoundVariant::Improved5 => "improved5",
            BoundVariant::WkbLike => "wkb_like",
            BoundVariant::Delty => "delty",
            BoundVariant::SchwarzianGeneral => "schwarzian_general",
            BoundVariant::SchwarzianAllowed => "schwarzian_allowed",
            BoundVariant::WkbEstimate => "wkb_estimate",
            BoundVariant::WkbExponential => "wkb_exponential",
        }
    }

    /// False only for the two WKB estimates.
    pub fn is_rigorous(self) -> bool {
        !matches!(self, BoundVariant::WkbEstimate | BoundVariant::WkbExponential)
    }

    /// Variants whose `θ` depends on a cutoff `Δ`.
    pub fn uses_delta(self) -> bool {
        matches!(self, BoundVariant::Case4 | BoundVariant::WkbLike | BoundVariant::Improved5)
    }
}

impl fmt::Display for BoundVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundVariant::ALL
            .iter()
            .copied()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown bound variant `{s}`")))
    }
}

/// `sech²θ`, stable for large `|θ|`.
pub fn sech2(theta: f64) -> f64 {
    let e = (-2.0 * theta.abs()).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

/// `ln sech²θ`, finite for every finite `θ`.
pub fn ln_sech2(theta: f64) -> f64 {
    let t = theta.abs();
    4f64.ln() - 2.0 * t - 2.0 * (-2.0 * t).exp().ln_1p()
}

/// One evaluated bound (or estimate).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub variant: BoundVariant,
    /// The argument of `sech²`; `+∞` when the integral diverges.
    pub theta: f64,
    pub bound: f64,
    /// `ln(bound)`, useful once `bound` underflows.
    pub ln_bound: f64,
    /// All preconditions hold and the integral converged.
    pub valid: bool,
    pub violated_assumptions: Vec<String>,
    pub is_rigorous: bool,
    /// Human-readable description of the free functions and parameters.
    pub choice: String,
    pub delta: Option<f64>,
}

impl BoundReport {
    fn new(variant: BoundVariant, theta: f64, mut violated: Vec<String>, choice: String) -> Self {
        if !theta.is_finite() && !violated.iter().any(|v| v.contains("diverges")) {
            violated.push("integral diverges".into());
        }
        let (bound, ln_bound) = if theta.is_finite() {
            (sech2(theta), ln_sech2(theta))
        } else {
            (0.0, f64::NEG_INFINITY)
        };
        BoundReport {
            variant,
            theta,
            bound,
            ln_bound,
            valid: violated.is_empty(),
            violated_assumptions: violated,
            is_rigorous: variant.is_rigorous(),
            choice,
            delta: None,
        }
    }

    fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    /// A rigorous, valid report whose bound exceeds `t_exact + tol`.
    pub fn violates(&self, t_exact: f64, tol: f64) -> bool {
        self.is_rigorous && self.valid && self.bound > t_exact + tol
    }
}

/// Finite `θ` or a divergent integral.
enum Theta {
    Finite(f64),
    Divergent,
}

impl Theta {
    fn value(&self) -> f64 {
        match self {
            Theta::Finite(v) => *v,
            Theta::Divergent => f64::INFINITY,
        }
    }
}

/// Integration window: the potential support widened to cover the windows
/// of the free functions.
fn window(d: &DispersionProfile, extra: &[Option<(f64, f64)>]) -> (f64, f64) {
    let (mut lo, mut hi) = d.support();
    for (a, b) in extra.iter().flatten() {
        lo = lo.min(*a);
        hi = hi.max(*b);
    }
    (lo, hi)
}

/// Zeros of `g` on `[a, b]` located by sampling and bisection, ignoring
/// values inside a noise band.
fn sign_changes(g: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Vec<f64> {
    let n = KINK_SAMPLES;
    let xs: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let scale = vals.iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs()));
    let band = 1e-13 * scale;
    let mut out = Vec::new();
    let mut prev: Option<(f64, bool)> = None;
    for (&x, &v) in xs.iter().zip(&vals) {
        if !v.is_finite() || v.abs() <= band {
            continue;
        }
        let neg = v < 0.0;
        if let Some((px, pneg)) = prev {
            if pneg != neg {
                if let Ok(r) = find_root_bisect(g, px, x, 1e-13 * (1.0 + x.abs())) {
                    out.push(r);
                }
            }
        }
        prev = Some((x, neg));
    }
    out
}

/// `∫ f` over the window with breakpoints, endpoint smoothing and a
/// far-field divergence check.
fn theta_integral(f: &dyn Fn(f64) -> f64, (a, b): (f64, f64), breakpoints: Vec<f64>) -> Result<Theta> {
    let w = b - a;
    for far in [a - 1e3 * w, b + 1e3 * w] {
        let v = f(far);
        if !(v.is_finite() && v.abs() < TAIL_THRESHOLD) {
            return Ok(Theta::Divergent);
        }
    }
    let task = IntegrationTask::new(f, a, b)
        .breakpoints(breakpoints)
        .tolerances(DEFAULT_REL_TOL, DEFAULT_ABS_TOL)
        .endpoint_smoothing(true);
    let q = integrate_adaptive(&task)?;
    if !q.value.is_finite() {
        return Err(Error::NonFinite("bound integrand".into()));
    }
    Ok(Theta::Finite(q.value))
}

/// Checks a positive free function on a sample grid.
fn check_positive(f: &FreeFunction, d: &DispersionProfile, (a, b): (f64, f64)) -> Result<()> {
    let n = 1024;
    for i in 0..=n {
        let x = a + (b - a) * i as f64 / n as f64;
        let v = f.value(d, x);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::NonPositive { x, value: v });
        }
    }
    Ok(())
}

/// Sum of `½|ln(f(p⁺)/f(p⁻))|` over the jump points of `f`.
fn log_jump_terms(f: &FreeFunction, d: &DispersionProfile) -> f64 {
    f.jump_points(d)
        .into_iter()
        .map(|p| {
            let (l, r) = f.limits(d, p);
            0.5 * (r / l).ln().abs()
        })
        .sum()
}

/// Sum of `|Δχ| / (2 max H(p±))` over the jump points of `χ`.
fn chi_jump_terms(chi: &ChiFunction, big_h: &FreeFunction, d: &DispersionProfile) -> f64 {
    chi.jump_points(d)
        .into_iter()
        .map(|p| {
            let (cl, cr) = chi.limits(d, p);
            let (hl, hr) = big_h.limits(d, p);
            (cr - cl).abs() / (2.0 * hl.max(hr))
        })
        .sum()
}

/// Base breakpoints: jumps and knots of the potential.
fn potential_breaks(d: &DispersionProfile) -> Vec<f64> {
    let mut b = d.potential.segment_points();
    b.extend(d.potential.discontinuities());
    b
}

fn free_breaks(f: &FreeFunction, d: &DispersionProfile) -> Result<Vec<f64>> {
    let mut b = f.jump_points(d);
    b.extend(f.kink_points(d)?);
    Ok(b)
}

fn asymmetric(d: &DispersionProfile) -> Option<String> {
    let (km, kp) = d.asymptotic_wavenumbers();
    (km != kp).then(|| format!("asymptotic wavenumbers differ ({km} vs {kp})"))
}

/// The basic bound: `θ = ∫ √(h'² + (k² − h²)²) / (2h) dx`.
pub fn bound_theorem1(d: &DispersionProfile, h: &FreeFunction) -> Result<BoundReport> {
    let win = window(d, &[h.window()]);
    check_positive(h, d, win)?;
    let f = |x: f64| {
        let [v, dv, _] = h.eval(d, x);
        let q = d.k2(x);
        dv.hypot(q - v * v) / (2.0 * v)
    };
    let mut bp = potential_breaks(d);
    bp.extend(free_breaks(h, d)?);
    let theta = theta_integral(&f, win, bp)?.value() + log_jump_terms(h, d);
    Ok(BoundReport::new(BoundVariant::Thm1, theta, Vec::new(), h.describe()))
}

/// Triangle-inequality form: `θ = ½ ∫ (|h'/h| + |k² − h²|/h) dx`.
pub fn bound_weak(d: &DispersionProfile, h: &FreeFunction) -> Result<BoundReport> {
    let win = window(d, &[h.window()]);
    check_positive(h, d, win)?;
    let theta = weak_theta(d, h, win)?;
    Ok(BoundReport::new(BoundVariant::Weak, theta, Vec::new(), h.describe()))
}

fn weak_theta(d: &DispersionProfile, h: &FreeFunction, win: (f64, f64)) -> Result<f64> {
    let f = |x: f64| {
        let [v, dv, _] = h.eval(d, x);
        0.5 * ((dv / v).abs() + (d.k2(x) - v * v).abs() / v)
    };
    let mut bp = potential_breaks(d);
    bp.extend(free_breaks(h, d)?);
    bp.extend(sign_changes(&|x| d.k2(x) - h.value(d, x).powi(2), win.0, win.1));
    bp.extend(sign_changes(&|x| h.eval(d, x)[1], win.0, win.1));
    Ok(theta_integral(&f, win, bp)?.value() + log_jump_terms(h, d))
}

/// Parameters of the special cases. Unset fields take their defaults:
/// `Δ = min k±∞`, interpolation scale = the core half-width of the
/// potential.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CaseParams {
    pub delta: Option<f64>,
    pub h_interp_scale: Option<f64>,
    pub h_ext: Option<f64>,
}

fn single_hump_check(part: &RegionPartition, out: &mut Vec<String>) {
    if !part.single_hump {
        out.push("k² does not have a single minimum".into());
    }
}

/// The five special cases of the triangle-inequality form.
pub fn bound_case(d: &DispersionProfile, case_id: u8, params: &CaseParams) -> Result<BoundReport> {
    let (km, kp) = d.asymptotic_wavenumbers();
    match case_id {
        1 => {
            let mut violated = Vec::new();
            if let Some(v) = asymmetric(d) {
                violated.push(v);
            }
            let k = km;
            let f = |x: f64| (k * k - d.k2(x)).abs() / (2.0 * k);
            let mut bp = potential_breaks(d);
            let (a, b) = d.support();
            bp.extend(sign_changes(&|x| k * k - d.k2(x), a, b));
            let theta = theta_integral(&f, d.support(), bp)?.value();
            Ok(BoundReport::new(BoundVariant::Case1, theta, violated, format!("h = {k}")))
        }
        2 => {
            let scale = params.h_interp_scale.unwrap_or_else(|| d.potential.core_half_width());
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::InvalidParameter(format!("interpolation scale must be positive, got {scale}")));
            }
            let h = FreeFunction::Smooth(LogProfile::interpolating(km, kp, d.potential.center(), scale));
            let win = window(d, &[h.window()]);
            let f = |x: f64| {
                let v = h.value(d, x);
                0.5 * (d.k2(x) - v * v).abs() / v
            };
            let mut bp = potential_breaks(d);
            bp.extend(sign_changes(&|x| d.k2(x) - h.value(d, x).powi(2), win.0, win.1));
            let theta = 0.5 * (kp / km).ln().abs() + theta_integral(&f, win, bp)?.value();
            Ok(BoundReport::new(BoundVariant::Case2, theta, Vec::new(), h.describe()))
        }
        3 => {
            let h_ext = params
                .h_ext
                .ok_or_else(|| Error::InvalidParameter("case 3 needs h_ext".into()))?;
            if !(h_ext > 0.0 && h_ext.is_finite()) {
                return Err(Error::InvalidParameter(format!("h_ext must be positive, got {h_ext}")));
            }
            let mut violated = Vec::new();
            if h_ext < km.max(kp) && h_ext > km.min(kp) {
                violated.push(format!("h_ext = {h_ext} is not an extremum between {km} and {kp}"));
            }
            let c = d.potential.center();
            let w = d.potential.core_half_width();
            let h = FreeFunction::Plateau { left: km, inner: h_ext, right: kp, start: c - w, end: c + w };
            let win = window(d, &[h.window()]);
            let f = |x: f64| {
                let v = h.value(d, x);
                0.5 * (d.k2(x) - v * v).abs() / v
            };
            let mut bp = potential_breaks(d);
            bp.extend(h.jump_points(d));
            bp.extend(sign_changes(&|x| d.k2(x) - h.value(d, x).powi(2), win.0, win.1));
            let theta = 0.5 * (kp * km / (h_ext * h_ext)).ln().abs() + theta_integral(&f, win, bp)?.value();
            Ok(BoundReport::new(BoundVariant::Case3, theta, violated, h.describe()))
        }
        4 => {
            let delta = params.delta.unwrap_or(km.min(kp));
            let part = partition_regions(d, delta)?;
            let mut violated = Vec::new();
            single_hump_check(&part, &mut violated);
            let d2 = delta * delta;
            if part.k2_min > d2 * (1.0 + 1e-12) {
                violated.push(format!("Δ² = {d2} is below k_min² = {}", part.k2_min));
            }
            if d2 > km.min(kp).powi(2) * (1.0 + 1e-12) {
                violated.push(format!("Δ = {delta} exceeds min k±∞ = {}", km.min(kp)));
            }
            let f = |x: f64| (d2 - d.k2(x)).max(0.0) / (2.0 * delta);
            let mut bp = potential_breaks(d);
            bp.extend(part.delta_crossings.iter().copied());
            let theta = 0.5 * (kp * km / d2).ln() + theta_integral(&f, d.support(), bp)?.value();
            Ok(BoundReport::new(BoundVariant::Case4, theta, violated, format!("H = max(k, {delta})")).with_delta(delta))
        }
        5 => {
            let part = partition_regions(d, km.min(kp))?;
            let mut violated = Vec::new();
            single_hump_check(&part, &mut violated);
            let kmin2 = part.k2_min;
            if !(kmin2 > 0.0) {
                violated.push(format!("k_min² = {kmin2} is not positive"));
            }
            if kmin2 >= km.min(kp).powi(2) {
                violated.push("k_min² is not below k±∞²".into());
            }
            let theta = if kmin2 > 0.0 { 0.5 * (kp * km / kmin2).ln() } else { f64::INFINITY };
            Ok(BoundReport::new(BoundVariant::Case5, theta, violated, format!("k_min² = {kmin2}")))
        }
        _ => Err(Error::InvalidParameter(format!("case must be 1 to 5, got {case_id}"))),
    }
}

/// The free functions of one of the four equivalent improved forms.
#[derive(Debug, Clone)]
pub enum ImprovedChoice {
    /// `h > 0`, `j = X' > 0`.
    Form1 { h: FreeFunction, j: FreeFunction },
    /// `h > 0`, `J = X'^{-1/2} > 0`.
    Form2 { h: FreeFunction, big_j: FreeFunction },
    /// `H = h/J² > 0`, `J > 0`.
    Form3 { big_h: FreeFunction, big_j: FreeFunction },
    /// `H > 0`, `χ = J'/J`.
    Form4 { big_h: FreeFunction, chi: ChiFunction },
}

impl ImprovedChoice {
    /// The same underlying choice expressed in all four forms, via
    /// `h = H·J²`, `j = J⁻²`, `χ = (ln J)'`.
    pub fn all_forms(big_h: &LogProfile, big_j: &LogProfile) -> [ImprovedChoice; 4] {
        let h = big_h.mul(&big_j.powf(2.0));
        let j = big_j.powf(-2.0);
        [
            ImprovedChoice::Form1 { h: FreeFunction::Smooth(h.clone()), j: FreeFunction::Smooth(j) },
            ImprovedChoice::Form2 { h: FreeFunction::Smooth(h), big_j: FreeFunction::Smooth(big_j.clone()) },
            ImprovedChoice::Form3 {
                big_h: FreeFunction::Smooth(big_h.clone()),
                big_j: FreeFunction::Smooth(big_j.clone()),
            },
            ImprovedChoice::Form4 {
                big_h: FreeFunction::Smooth(big_h.clone()),
                chi: ChiFunction::LogDerivative(big_j.clone()),
            },
        ]
    }

    pub fn variant(&self) -> BoundVariant {
        match self {
            ImprovedChoice::Form1 { .. } => BoundVariant::Improved1,
            ImprovedChoice::Form2 { .. } => BoundVariant::Improved2,
            ImprovedChoice::Form3 { .. } => BoundVariant::Improved3,
            ImprovedChoice::Form4 { .. } => BoundVariant::Improved4,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ImprovedChoice::Form1 { h, j } => format!("h = {}; j = {}", h.describe(), j.describe()),
            ImprovedChoice::Form2 { h, big_j } => format!("h = {}; J = {}", h.describe(), big_j.describe()),
            ImprovedChoice::Form3 { big_h, big_j } => format!("H = {}; J = {}", big_h.describe(), big_j.describe()),
            ImprovedChoice::Form4 { big_h, chi } => format!("H = {}; chi = {}", big_h.describe(), chi.describe()),
        }
    }
}

fn require_c2(name: &str, f: &FreeFunction, out: &mut Vec<String>) {
    if !f.is_c2() {
        out.push(format!("{name} = {} is not twice differentiable", f.describe()));
    }
}

/// Improved bounds 1 to 4, each evaluated exactly as displayed.
pub fn bound_improved(d: &DispersionProfile, choice: &ImprovedChoice) -> Result<BoundReport> {
    let mut violated = Vec::new();
    let variant = choice.variant();
    let mut bp = potential_breaks(d);
    let (theta, jumps) = match choice {
        ImprovedChoice::Form1 { h, j } => {
            require_c2("j", j, &mut violated);
            let win = window(d, &[h.window(), j.window()]);
            check_positive(h, d, win)?;
            check_positive(j, d, win)?;
            bp.extend(free_breaks(h, d)?);
            let f = |x: f64| {
                let [hv, hd, _] = h.eval(d, x);
                let [jv, jd, jdd] = j.eval(d, x);
                let g = jd / jv;
                let inner = (d.k2(x) - 0.5 * jdd / jv + 0.75 * g * g) / jv - jv * hv * hv;
                hd.hypot(inner) / (2.0 * hv)
            };
            (theta_integral(&f, win, bp)?, log_jump_terms(h, d))
        }
        ImprovedChoice::Form2 { h, big_j } => {
            require_c2("J", big_j, &mut violated);
            let win = window(d, &[h.window(), big_j.window()]);
            check_positive(h, d, win)?;
            check_positive(big_j, d, win)?;
            bp.extend(free_breaks(h, d)?);
            let f = |x: f64| {
                let [hv, hd, _] = h.eval(d, x);
                let [jv, _, jdd] = big_j.eval(d, x);
                let j2 = jv * jv;
                let inner = j2 * (d.k2(x) + jdd / jv) - hv * hv / j2;
                hd.hypot(inner) / (2.0 * hv)
            };
            (theta_integral(&f, win, bp)?, log_jump_terms(h, d))
        }
        ImprovedChoice::Form3 { big_h, big_j } => {
            require_c2("J", big_j, &mut violated);
            let win = window(d, &[big_h.window(), big_j.window()]);
            check_positive(big_h, d, win)?;
            check_positive(big_j, d, win)?;
            bp.extend(free_breaks(big_h, d)?);
            let f = |x: f64| {
                let [hv, hd, _] = big_h.eval(d, x);
                let [jv, jd, jdd] = big_j.eval(d, x);
                let a = hd + 2.0 * hv * jd / jv;
                let b = d.k2(x) + jdd / jv - hv * hv;
                a.hypot(b) / (2.0 * hv)
            };
            (theta_integral(&f, win, bp)?, log_jump_terms(big_h, d))
        }
        ImprovedChoice::Form4 { big_h, chi } => {
            let win = window(d, &[big_h.window(), chi.window()]);
            check_positive(big_h, d, win)?;
            check_undeclared_jumps(chi, d, win)?;
            bp.extend(free_breaks(big_h, d)?);
            bp.extend(chi.jump_points(d));
            bp.extend(chi.kink_points(d)?);
            let f = |x: f64| {
                let [hv, hd, _] = big_h.eval(d, x);
                let [c, cd] = chi.eval(d, x);
                let a = hd + 2.0 * hv * c;
                let b = d.k2(x) + c * c + cd - hv * hv;
                a.hypot(b) / (2.0 * hv)
            };
            (theta_integral(&f, win, bp)?, log_jump_terms(big_h, d) + chi_jump_terms(chi, big_h, d))
        }
    };
    let theta = theta.value() + jumps;
    Ok(BoundReport::new(variant, theta, violated, choice.describe()))
}

/// Rejects a user-supplied `χ` that jumps somewhere it has not declared.
fn check_undeclared_jumps(chi: &ChiFunction, d: &DispersionProfile, (a, b): (f64, f64)) -> Result<()> {
    let ChiFunction::Custom { jumps, .. } = chi else {
        return Ok(());
    };
    let n = KINK_SAMPLES;
    let xs: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| chi.value(d, x)).collect();
    let mut diffs: Vec<f64> = vals.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let mut sorted = diffs.clone();
    sorted.sort_by(|p, q| p.total_cmp(q));
    let typical = sorted[sorted.len() / 2].max(1e-300);
    for (i, diff) in diffs.iter_mut().enumerate() {
        if *diff <= 50.0 * typical || *diff < 1e-9 {
            continue;
        }
        // shrink the cell; a genuine jump keeps its size
        let (mut lo, mut hi) = (xs[i], xs[i + 1]);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let (vl, vm, vh) = (chi.value(d, lo), chi.value(d, mid), chi.value(d, hi));
            if (vm - vl).abs() >= (vh - vm).abs() {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-12 * (1.0 + lo.abs()) {
                break;
            }
        }
        let size = (chi.value(d, hi) - chi.value(d, lo)).abs();
        let tol = 1e-9 * (1.0 + lo.abs());
        if size > 0.5 * *diff && !jumps.iter().any(|p| (p - lo).abs() < 1e-6 + tol) {
            return Err(Error::UndeclaredDiscontinuity(0.5 * (lo + hi)));
        }
    }
    Ok(())
}

/// Improved bound 5: `θ = ∫ (|H'/(2H) + χ| + |k² + χ² + χ' − H²| / (2H)) dx`
/// plus the jump terms of `H` and `χ`.
pub fn bound_improved5(d: &DispersionProfile, big_h: &FreeFunction, chi: &ChiFunction) -> Result<BoundReport> {
    let win = window(d, &[big_h.window(), chi.window()]);
    check_positive(big_h, d, win)?;
    check_undeclared_jumps(chi, d, win)?;
    let f = |x: f64| {
        let [hv, hd, _] = big_h.eval(d, x);
        let [c, cd] = chi.eval(d, x);
        (hd / (2.0 * hv) + c).abs() + (d.k2(x) + c * c + cd - hv * hv).abs() / (2.0 * hv)
    };
    let mut bp = potential_breaks(d);
    bp.extend(free_breaks(big_h, d)?);
    bp.extend(chi.jump_points(d));
    bp.extend(chi.kink_points(d)?);
    if !matches!(big_h, FreeFunction::MaxKDelta { .. }) || !matches!(chi, ChiFunction::Zero | ChiFunction::Kappa) {
        bp.extend(sign_changes(
            &|x| {
                let [hv, hd, _] = big_h.eval(d, x);
                hd / (2.0 * hv) + chi.value(d, x)
            },
            win.0,
            win.1,
        ));
        bp.extend(sign_changes(
            &|x| {
                let hv = big_h.value(d, x);
                let [c, cd] = chi.eval(d, x);
                d.k2(x) + c * c + cd - hv * hv
            },
            win.0,
            win.1,
        ));
    }
    let theta = theta_integral(&f, win, bp)?.value() + log_jump_terms(big_h, d) + chi_jump_terms(chi, big_h, d);
    let choice = format!("H = {}; chi = {}", big_h.describe(), chi.describe());
    let mut report = BoundReport::new(BoundVariant::Improved5, theta, Vec::new(), choice);
    if let FreeFunction::MaxKDelta { delta } = big_h {
        report = report.with_delta(*delta);
    }
    Ok(report)
}

/// `∫ κ dx` over the forbidden intervals.
fn forbidden_action(d: &DispersionProfile, part: &RegionPartition) -> Result<f64> {
    let mut total = 0.0;
    let kappa = |x: f64| d.kappa(x);
    for &(a, b) in &part.forbidden_intervals {
        if b <= a {
            continue;
        }
        let bp: Vec<f64> = potential_breaks(d).into_iter().filter(|p| *p > a && *p < b).collect();
        let task = IntegrationTask::new(&kappa, a, b).breakpoints(bp).endpoint_smoothing(true);
        total += integrate_adaptive(&task)?.value;
    }
    Ok(total)
}

fn wkb_like_preconditions(d: &DispersionProfile, part: &RegionPartition, delta: f64) -> Vec<String> {
    let mut violated = Vec::new();
    if let Some(v) = asymmetric(d) {
        violated.push(v);
    }
    single_hump_check(part, &mut violated);
    let k = d.k_minus_inf().min(d.k_plus_inf());
    if delta > k * (1.0 + 1e-12) {
        violated.push(format!("Δ = {delta} exceeds k∞ = {k}"));
    }
    violated
}

/// The WKB-like bound: `θ = ∫κ + ln(k∞/Δ) + κ_max/Δ + ΔL/2 +
/// (1/2Δ) ∫_{0≤k²<Δ²} (Δ² − k²)`.
pub fn bound_wkb_like(d: &DispersionProfile, delta: f64) -> Result<BoundReport> {
    let part = partition_regions(d, delta)?;
    let violated = wkb_like_preconditions(d, &part, delta);
    let k = d.k_minus_inf();
    let d2 = delta * delta;
    let action = forbidden_action(d, &part)?;
    let shallow = |x: f64| {
        let q = d.k2(x);
        if q >= 0.0 && q < d2 {
            (d2 - q) / (2.0 * delta)
        } else {
            0.0
        }
    };
    let mut bp = potential_breaks(d);
    bp.extend(part.turning_points.iter().copied());
    bp.extend(part.delta_crossings.iter().copied());
    let allowed = theta_integral(&shallow, d.support(), bp)?.value();
    let theta = action + (k / delta).ln() + part.kappa_max / delta + delta * part.forbidden_width / 2.0 + allowed;
    Ok(BoundReport::new(BoundVariant::WkbLike, theta, violated, format!("Δ = {delta}")).with_delta(delta))
}

/// The `Δ → k∞` specialisation: `θ = ∫κ + κ_max/k∞ + k∞L/2 +
/// ∫_{k²≥0} |k∞² − k²| / (2k∞)`.
pub fn bound_delty(d: &DispersionProfile) -> Result<BoundReport> {
    let k = d.k_minus_inf();
    let part = partition_regions(d, k)?;
    let violated = wkb_like_preconditions(d, &part, k);
    let action = forbidden_action(d, &part)?;
    let allowed_f = |x: f64| {
        let q = d.k2(x);
        if q >= 0.0 {
            (k * k - q).abs() / (2.0 * k)
        } else {
            0.0
        }
    };
    let mut bp = potential_breaks(d);
    bp.extend(part.turning_points.iter().copied());
    bp.extend(part.delta_crossings.iter().copied());
    let allowed = theta_integral(&allowed_f, d.support(), bp)?.value();
    let theta = action + part.kappa_max / k + k * part.forbidden_width / 2.0 + allowed;
    Ok(BoundReport::new(BoundVariant::Delty, theta, violated, format!("Δ = k∞ = {k}")).with_delta(k))
}

/// The two Schwarzian bounds.
#[derive(Debug, Clone)]
pub enum SchwarzianForm {
    /// `θ = ½ ∫ |J²(k² + J''/J)/k∞ − k∞/J²| dx` for a user `J → 1`.
    General(FreeFunction),
    /// `J = √(k∞/k)`: `θ = ½ ∫ |(1/√k)(1/√k)''| dx`.
    AllowedRegion,
}

pub fn bound_schwarzian(d: &DispersionProfile, form: &SchwarzianForm) -> Result<BoundReport> {
    let mut violated = Vec::new();
    if let Some(v) = asymmetric(d) {
        violated.push(v);
    }
    let k = d.k_minus_inf();
    match form {
        SchwarzianForm::General(big_j) => {
            require_c2("J", big_j, &mut violated);
            let win = window(d, &[big_j.window()]);
            check_positive(big_j, d, win)?;
            let g = |x: f64| {
                let [jv, _, jdd] = big_j.eval(d, x);
                let j2 = jv * jv;
                j2 * (d.k2(x) + jdd / jv) / k - k / j2
            };
            let f = |x: f64| 0.5 * g(x).abs();
            let mut bp = potential_breaks(d);
            bp.extend(sign_changes(&g, win.0, win.1));
            let theta = theta_integral(&f, win, bp)?.value();
            Ok(BoundReport::new(BoundVariant::SchwarzianGeneral, theta, violated, format!("J = {}", big_j.describe())))
        }
        SchwarzianForm::AllowedRegion => {
            let part = partition_regions(d, k)?;
            if !(part.k2_min > 0.0) {
                violated.push("classically forbidden region present".into());
            }
            if !d.potential.discontinuities().is_empty() {
                violated.push("potential is discontinuous".into());
            }
            if !violated.is_empty() {
                return Ok(BoundReport::new(
                    BoundVariant::SchwarzianAllowed,
                    f64::INFINITY,
                    violated,
                    "J = sqrt(k_inf/k)".into(),
                ));
            }
            let s = |x: f64| {
                let [q, dq, ddq] = d.k2_jet(x);
                let kv = q.sqrt();
                let k1 = dq / (2.0 * kv);
                let k2 = ddq / (2.0 * kv) - dq * dq / (4.0 * kv * kv * kv);
                schwarzian_from_jet([kv, k1, k2]).map(|v| v / kv).unwrap_or(f64::NAN)
            };
            let f = |x: f64| 0.5 * s(x).abs();
            let (a, b) = d.support();
            let mut bp = potential_breaks(d);
            bp.extend(sign_changes(&s, a, b));
            let theta = theta_integral(&f, (a, b), bp)?.value();
            Ok(BoundReport::new(BoundVariant::SchwarzianAllowed, theta, violated, "J = sqrt(k_inf/k)".into()))
        }
    }
}

/// Which WKB estimate to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WkbForm {
    /// `sech²(∫κ + ln 2)`
    Sech2,
    /// `exp(−2∫κ)`
    Exponential,
}

/// The standard WKB estimates. Not bounds: `is_rigorous` is false.
pub fn wkb_estimate(d: &DispersionProfile, form: WkbForm) -> Result<BoundReport> {
    let part = partition_regions(d, d.k_minus_inf().min(d.k_plus_inf()))?;
    let action = forbidden_action(d, &part)?;
    Ok(match form {
        WkbForm::Sech2 => BoundReport::new(BoundVariant::WkbEstimate, action + 2f64.ln(), Vec::new(), "∫κ + ln 2".into()),
        WkbForm::Exponential => {
            let mut r = BoundReport::new(BoundVariant::WkbExponential, action, Vec::new(), "exp(-2∫κ)".into());
            r.bound = (-2.0 * action).exp();
            r.ln_bound = -2.0 * action;
            r
        }
    })
}

/// Evaluates `variant` with its default free-function choice: `h = k∞`
/// (or the monotone interpolation when the asymptotes differ), `Δ` as given
/// or `min k±∞`, `χ = κ` for the improved bound 5, and `J ≡ 1`.
pub fn evaluate_default(d: &DispersionProfile, variant: BoundVariant, delta: Option<f64>) -> Result<BoundReport> {
    let (km, kp) = d.asymptotic_wavenumbers();
    let k = km.min(kp);
    let delta = delta.unwrap_or(k);
    let h = if km == kp {
        FreeFunction::constant(km)
    } else {
        FreeFunction::Smooth(LogProfile::interpolating(km, kp, d.potential.center(), d.potential.core_half_width()))
    };
    let one = FreeFunction::constant(1.0);
    match variant {
        BoundVariant::Thm1 => bound_theorem1(d, &h),
        BoundVariant::Weak => bound_weak(d, &h),
        BoundVariant::Case1 => bound_case(d, 1, &CaseParams::default()),
        BoundVariant::Case2 => bound_case(d, 2, &CaseParams::default()),
        BoundVariant::Case3 => {
            let part = partition_regions(d, k)?;
            let h_ext = part.k2_min.max(0.0).sqrt().min(k);
            let h_ext = if h_ext > 0.0 { h_ext } else { k };
            bound_case(d, 3, &CaseParams { h_ext: Some(h_ext), ..CaseParams::default() })
        }
        BoundVariant::Case4 => bound_case(d, 4, &CaseParams { delta: Some(delta), ..CaseParams::default() }),
        BoundVariant::Case5 => bound_case(d, 5, &CaseParams::default()),
        BoundVariant::Improved1 => bound_improved(d, &ImprovedChoice::Form1 { h, j: one }),
        BoundVariant::Improved2 => bound_improved(d, &ImprovedChoice::Form2 { h, big_j: one }),
        BoundVariant::Improved3 => bound_improved(d, &ImprovedChoice::Form3 { big_h: h, big_j: one }),
        BoundVariant::Improved4 => bound_improved(d, &ImprovedChoice::Form4 { big_h: h, chi: ChiFunction::Zero }),
        BoundVariant::Improved5 => bound_improved5(d, &FreeFunction::MaxKDelta { delta }, &ChiFunction::Kappa),
        BoundVariant::WkbLike => bound_wkb_like(d, delta),
        BoundVariant::Delty => bound_delty(d),
        BoundVariant::SchwarzianGeneral => bound_schwarzian(d, &SchwarzianForm::General(one)),
        BoundVariant::SchwarzianAllowed => bound_schwarzian(d, &SchwarzianForm::AllowedRegion),
        BoundVariant::WkbEstimate => wkb_estimate(d, WkbForm::Sech2),
        BoundVariant::WkbExponential => wkb_estimate(d, WkbForm::Exponential),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;

    fn square(e: f64) -> DispersionProfile {
        DispersionProfile::new(PotentialSpec::square_barrier(1.0, 1.0).unwrap(), e).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn shallow_forbidden_region_converges() {
        // a barrier top only just above E puts integrable κ' singularities
        // at turning points that must be located to the last bit
        let p = PotentialSpec::gaussian_bump(0.553_747_986_805_181_6, 0.3).unwrap();
        let d = DispersionProfile::new(p, 0.499_793_803_482_656_7).unwrap();
        let r = evaluate_default(&d, BoundVariant::Improved5, None).unwrap();
        assert!(r.valid && r.theta.is_finite());
    }

    #[test]
    fn sech2_is_stable() {
        assert_eq!(sech2(0.0), 1.0);
        assert!(close(sech2(1.0), 1.0 / 1f64.cosh().powi(2), 1e-16));
        assert!(sech2(400.0) > 0.0 || ln_sech2(400.0).is_finite());
        assert!(close(ln_sech2(400.0), 4f64.ln() - 800.0, 1e-12));
        assert!(sech2(2.0) < sech2(1.9));
    }

    #[test]
    fn variant_names_round_trip() {
        for v in BoundVariant::ALL {
            assert_eq!(v.name().parse::<BoundVariant>().unwrap(), v);
        }
        assert!("nope".parse::<BoundVariant>().is_err());
    }

    #[test]
    fn theorem1_examples() {
        let zero = DispersionProfile::new(PotentialSpec::zero(), 1.0).unwrap();
        let r = bound_theorem1(&zero, &FreeFunction::constant(1.0)).unwrap();
        assert_eq!(r.theta, 0.0);
        assert_eq!(r.bound, 1.0);

        let d = square(0.5);
        let r = bound_theorem1(&d, &FreeFunction::constant(0.5f64.sqrt())).unwrap();
        assert!(close(r.theta, 2f64.sqrt(), 1e-12));
        assert!(close(r.bound, 0.210_772, 1e-6));

        let d = square(2.0);
        let r = bound_theorem1(&d, &FreeFunction::constant(2f64.sqrt())).unwrap();
        assert!(close(r.bound, 1.0 / (0.5f64.sqrt()).cosh().powi(2), 1e-12));
    }

    #[test]
    fn divergent_choice_is_flagged() {
        let d = square(0.5);
        let r = bound_theorem1(&d, &FreeFunction::constant(1.0)).unwrap();
        assert!(!r.valid);
        assert_eq!(r.bound, 0.0);
        assert!(r.theta.is_infinite());
    }

    #[test]
    fn weak_on_step_saturates() {
        let d = DispersionProfile::new(PotentialSpec::step(0.0, -3.0).unwrap(), 1.0).unwrap();
        let r = bound_weak(&d, &FreeFunction::MaxKDelta { delta: 1.0 }).unwrap();
        assert!(close(r.theta, 0.5 * 2f64.ln(), 1e-14));
        assert!(close(r.bound, 8.0 / 9.0, 1e-12));
    }

    #[test]
    fn case_examples() {
        let d = square(0.5);
        let k = 0.5f64.sqrt();
        let c1 = bound_case(&d, 1, &CaseParams::default()).unwrap();
        assert!(close(c1.bound, 0.210_772, 1e-6));
        let c4 = bound_case(&d, 4, &CaseParams { delta: Some(k), ..Default::default() }).unwrap();
        assert!(close(c4.theta, 2f64.sqrt(), 1e-10), "{}", c4.theta);
        assert!(c4.valid, "{:?}", c4.violated_assumptions);

        let bump = DispersionProfile::new(PotentialSpec::sech2_bump(0.3, 1.0).unwrap(), 0.5).unwrap();
        let c5 = bound_case(&bump, 5, &CaseParams::default()).unwrap();
        assert!(c5.valid, "{:?}", c5.violated_assumptions);
        assert!(close(c5.theta, 0.5 * (0.5f64 / 0.2).ln(), 1e-9));
        assert!(close(c5.bound, 40.0 / 49.0, 1e-12));
    }

    #[test]
    fn wkb_like_and_estimates_on_square_barrier() {
        let d = square(0.5);
        let k = 0.5f64.sqrt();
        let r = bound_wkb_like(&d, k).unwrap();
        assert!(r.valid, "{:?}", r.violated_assumptions);
        assert!(close(r.theta, 3.121_321, 1e-6));
        assert!(close(r.bound, 0.007_749, 1e-6));
        let delty = bound_delty(&d).unwrap();
        assert!(close(delty.theta, r.theta, 1e-12));
        let i5 = bound_improved5(&d, &FreeFunction::MaxKDelta { delta: k }, &ChiFunction::Kappa).unwrap();
        assert!(close(i5.theta, 3.121_321, 1e-6));
        let w = wkb_estimate(&d, WkbForm::Sech2).unwrap();
        assert!(close(w.bound, sech2(2f64.sqrt() + 2f64.ln()), 1e-12));
        assert!(close(w.bound, 0.057_397, 1e-6));
        assert!(!w.is_rigorous);
        let w = wkb_estimate(&d, WkbForm::Exponential).unwrap();
        assert!(close(w.bound, 0.059_106, 1e-6));
        let zero = DispersionProfile::new(PotentialSpec::zero(), 1.0).unwrap();
        assert!(close(wkb_estimate(&zero, WkbForm::Sech2).unwrap().bound, 0.64, 1e-15));
        assert_eq!(bound_wkb_like(&zero, 1.0).unwrap().bound, 1.0);
    }

    #[test]
    fn schwarzian_allowed_refuses_forbidden_region() {
        let r = bound_schwarzian(&square(0.5), &SchwarzianForm::AllowedRegion).unwrap();
        assert!(!r.valid);
        let well = DispersionProfile::new(PotentialSpec::sech2_bump(-1.0, 1.0).unwrap(), 1.0).unwrap();
        let r = bound_schwarzian(&well, &SchwarzianForm::AllowedRegion).unwrap();
        assert!(r.valid, "{:?}", r.violated_assumptions);
        assert!(r.theta > 0.0 && r.theta.is_finite());
    }

    #[test]
    fn undeclared_jump_is_rejected() {
        use crate::free::ClosureFunction;
        use std::sync::Arc;
        let d = DispersionProfile::new(PotentialSpec::sech2_bump(1.0, 1.0).unwrap(), 2.0).unwrap();
        let f = ClosureFunction { f: |x: f64| if x > 0.3 && x < 1.0 { 0.2 } else { 0.0 }, asymptotes: (0.0, 0.0), support: (-2.0, 2.0) };
        let chi = ChiFunction::Custom { f: Arc::new(f), jumps: vec![1.0] };
        let err = bound_improved5(&d, &FreeFunction::constant(2f64.sqrt()), &chi).unwrap_err();
        assert!(matches!(err, Error::UndeclaredDiscontinuity(p) if (p - 0.3).abs() < 1e-6));
    }
}
