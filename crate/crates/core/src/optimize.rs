//! Derivative-free tightening of the bounds.
//!
//! Maximising `sech²θ` is the same as minimising `θ`. The cutoff `Δ` is
//! searched by golden section with an endpoint guard; low-dimensional
//! parametric free-function families are searched by a box-constrained
//! Nelder-Mead simplex with seeded random restarts. In both cases the
//! returned point is never worse than the default parameter or any box
//! corner that was evaluated.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::{
    bound_case, bound_improved, bound_improved5, bound_theorem1, bound_wkb_like, BoundReport, BoundVariant,
    CaseParams, ImprovedChoice,
};
use crate::error::{Error, Result};
use crate::free::{ChiFunction, FreeFunction, LogProfile, LogTerm};
use crate::potential::{partition_regions, DispersionProfile};
use crate::quadrature::golden_section_min;

/// Relative tolerance of the scalar `Δ` search.
pub const DELTA_REL_TOL: f64 = 1e-6;

/// Default evaluation budget of the simplex search.
pub const DEFAULT_BUDGET: usize = 500;

fn objective(r: &BoundReport) -> f64 {
    if r.valid && r.theta.is_finite() {
        r.theta
    } else {
        f64::INFINITY
    }
}

fn delta_report(d: &DispersionProfile, variant: BoundVariant, delta: f64) -> Result<BoundReport> {
    match variant {
        BoundVariant::Case4 => bound_case(d, 4, &CaseParams { delta: Some(delta), ..CaseParams::default() }),
        BoundVariant::WkbLike => bound_wkb_like(d, delta),
        BoundVariant::Improved5 => bound_improved5(d, &FreeFunction::MaxKDelta { delta }, &ChiFunction::Kappa),
        other => Err(Error::InvalidParameter(format!("{other} has no Δ parameter"))),
    }
}

/// The sub-bracket of `[lo, hi]` on which `variant` is valid.
fn feasible_bracket(d: &DispersionProfile, variant: BoundVariant, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let k = d.k_minus_inf().min(d.k_plus_inf());
    let (mut a, b) = (lo.max(f64::MIN_POSITIVE), hi.min(k));
    if variant == BoundVariant::Case4 {
        let part = partition_regions(d, k)?;
        if part.k2_min > 0.0 {
            a = a.max(part.k2_min.sqrt());
        }
    }
    if a > b {
        return Err(Error::EmptyBracket(format!(
            "[{lo}, {hi}] has no valid Δ for {variant} (feasible range ends at {b})"
        )));
    }
    Ok((a, b))
}

/// Maximises the bound of `variant ∈ {case4, wkb_like, improved5}` over
/// `Δ ∈ bracket`. Returns `Δ*` and its report. When the objective is flat
/// across the bracket the midpoint is returned.
pub fn optimize_delta(d: &DispersionProfile, variant: BoundVariant, bracket: (f64, f64)) -> Result<(f64, BoundReport)> {
    if !variant.uses_delta() {
        return Err(Error::InvalidParameter(format!("{variant} has no Δ parameter")));
    }
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
        return Err(Error::EmptyBracket(format!("[{lo}, {hi}]")));
    }
    let (a, b) = feasible_bracket(d, variant, lo, hi)?;
    let theta = |delta: f64| delta_report(d, variant, delta).map(|r| objective(&r)).unwrap_or(f64::INFINITY);

    let mut candidates = vec![a, b, 0.5 * (a + b)];
    if b > a {
        let (x, _) = golden_section_min(theta, a, b, DELTA_REL_TOL * b);
        candidates.push(x);
    }
    let values: Vec<f64> = candidates.iter().map(|&x| theta(x)).collect();
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(Error::NoFeasiblePoint);
    }
    let worst = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let star = if worst - best <= 1e-14 * (1.0 + best.abs()) {
        candidates[2]
    } else {
        // first minimiser, so an endpoint optimum is reported exactly
        candidates[values.iter().position(|&v| v == best).unwrap_or(0)]
    };
    Ok((star, delta_report(d, variant, star)?))
}

/// Low-dimensional parametric families of free functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// The basic bound with `h = c` on the core of the potential and `k±∞`
    /// outside. Parameter: `c`.
    PlateauH,
    /// The basic bound with a tanh interpolation from `k−∞` to `k+∞`.
    /// Parameters: `center`, `width`.
    InterpolatingH,
    /// The basic bound with `h = k∞ · exp(a · exp(−((x − x0)/w)²))`.
    /// Parameters: `a`, `w`.
    BumpH,
    /// Improved form 3 with `H = k∞ · exp(a_H b(x))`, `J = exp(a_J b(x))`,
    /// `b = exp(−((x − x0)/w)²)`. Parameters: `a_H`, `a_J`, `w`.
    BumpHJ,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::PlateauH, Family::InterpolatingH, Family::BumpH, Family::BumpHJ];

    pub fn name(self) -> &'static str {
        match self {
            Family::PlateauH => "plateau_h",
            Family::InterpolatingH => "interpolating_h",
            Family::BumpH => "bump_h",
            Family::BumpHJ => "bump_hj",
        }
    }

    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            Family::PlateauH => &["c"],
            Family::InterpolatingH => &["center", "width"],
            Family::BumpH => &["a", "w"],
            Family::BumpHJ => &["a_H", "a_J", "w"],
        }
    }

    pub fn variant(self) -> BoundVariant {
        match self {
            Family::BumpHJ => BoundVariant::Improved3,
            _ => BoundVariant::Thm1,
        }
    }

    /// The parameter that reproduces the default choice `h = k∞` (or the
    /// default interpolation).
    pub fn default_point(self, d: &DispersionProfile) -> Vec<f64> {
        let w = d.potential.core_half_width();
        match self {
            Family::PlateauH => vec![d.k_minus_inf().min(d.k_plus_inf())],
            Family::InterpolatingH => vec![d.potential.center(), w],
            Family::BumpH => vec![0.0, w],
            Family::BumpHJ => vec![0.0, 0.0, w],
        }
    }

    pub fn default_box(self, d: &DispersionProfile) -> Vec<(f64, f64)> {
        let w = d.potential.core_half_width();
        let c = d.potential.center();
        let k = d.k_minus_inf().max(d.k_plus_inf());
        match self {
            Family::PlateauH => vec![(0.05 * k, 3.0 * k)],
            Family::InterpolatingH => vec![(c - 2.0 * w, c + 2.0 * w), (0.05 * w, 4.0 * w)],
            Family::BumpH => vec![(-3.0, 3.0), (0.1 * w, 4.0 * w)],
            Family::BumpHJ => vec![(-3.0, 3.0), (-2.0, 2.0), (0.1 * w, 4.0 * w)],
        }
    }

    /// Evaluates the family at `p`.
    pub fn evaluate(self, d: &DispersionProfile, p: &[f64]) -> Result<BoundReport> {
        let names = self.parameter_names();
        if p.len() != names.len() || p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{} expects finite {:?}", self.name(), names)));
        }
        let (km, kp) = d.asymptotic_wavenumbers();
        let x0 = d.potential.center();
        match self {
            Family::PlateauH => {
                if !(p[0] > 0.0) {
                    return Err(Error::NonPositive { x: x0, value: p[0] });
                }
                let w = d.potential.core_half_width();
                let h = FreeFunction::Plateau { left: km, inner: p[0], right: kp, start: x0 - w, end: x0 + w };
                bound_theorem1(d, &h)
            }
            Family::InterpolatingH => {
                if !(p[1] > 0.0) {
                    return Err(Error::InvalidParameter(format!("width must be positive, got {}", p[1])));
                }
                bound_theorem1(d, &FreeFunction::Smooth(LogProfile::interpolating(km, kp, p[0], p[1])))
            }
            Family::BumpH => {
                if !(p[1] > 0.0) {
                    return Err(Error::InvalidParameter(format!("w must be positive, got {}", p[1])));
                }
                let h = LogProfile::interpolating(km, kp, x0, d.potential.core_half_width())
                    .with_term(LogTerm::Bump { amplitude: p[0], center: x0, width: p[1] });
                bound_theorem1(d, &FreeFunction::Smooth(h))
            }
            Family::BumpHJ => {
                if !(p[2] > 0.0) {
                    return Err(Error::InvalidParameter(format!("w must be positive, got {}", p[2])));
                }
                let big_h = LogProfile::interpolating(km, kp, x0, d.potential.core_half_width())
                    .with_term(LogTerm::Bump { amplitude: p[0], center: x0, width: p[2] });
                let big_j = LogProfile::bump(1.0, p[1], x0, p[2]);
                bound_improved(
                    d,
                    &ImprovedChoice::Form3 { big_h: FreeFunction::Smooth(big_h), big_j: FreeFunction::Smooth(big_j) },
                )
            }
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown family `{s}`")))
    }
}

/// Outcome of a free-function search.
#[derive(Debug, Clone, Serialize)]
pub struct FreeFunctionOptimum {
    pub family: Family,
    pub parameter_names: Vec<String>,
    pub params: Vec<f64>,
    pub report: BoundReport,
    /// Report at the default parameter clamped into the box.
    pub default_report: Option<BoundReport>,
    pub evaluations: usize,
}

struct Search<'a> {
    f: &'a dyn Fn(&[f64]) -> f64,
    lower: &'a [f64],
    upper: &'a [f64],
    budget: usize,
    used: usize,
    best: Option<(Vec<f64>, f64)>,
}

impl Search<'_> {
    fn clamp(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(self.lower.iter().zip(self.upper))
            .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
            .collect()
    }

    fn eval(&mut self, p: &[f64]) -> f64 {
        let p = self.clamp(p);
        self.used += 1;
        let v = (self.f)(&p);
        let better = match &self.best {
            None => true,
            Some((_, b)) => v < *b,
        };
        if better {
            self.best = Some((p, v));
        }
        v
    }

    fn exhausted(&self) -> bool {
        self.used >= self.budget
    }

    /// One Nelder-Mead run from `start`, projected onto the box.
    fn nelder_mead(&mut self, start: &[f64]) {
        let free: Vec<usize> = (0..start.len()).filter(|&i| self.upper[i] > self.lower[i]).collect();
        if free.is_empty() {
            return;
        }
        let mut simplex: Vec<Vec<f64>> = vec![self.clamp(start)];
        for &i in &free {
            let mut p = simplex[0].clone();
            let step = 0.1 * (self.upper[i] - self.lower[i]);
            p[i] = if p[i] + step <= self.upper[i] { p[i] + step } else { p[i] - step };
            simplex.push(p);
        }
        let mut values: Vec<f64> = Vec::with_capacity(simplex.len());
        for p in simplex.clone() {
            if self.exhausted() {
                return;
            }
            values.push(self.eval(&p));
        }
        let n = free.len();
        while !self.exhausted() {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();
            let spread = values[n] - values[0];
            let diameter = simplex
                .iter()
                .map(|p| {
                    free.iter()
                        .map(|&i| ((p[i] - simplex[0][i]) / (self.upper[i] - self.lower[i])).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if (spread.is_finite() && spread <= 1e-12 * (1.0 + values[0].abs())) || diameter < 1e-9 {
                return;
            }
            let centroid: Vec<f64> = (0..start.len())
                .map(|i| simplex[..n].iter().map(|p| p[i]).sum::<f64>() / n as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect()
            };
            let reflected = self.clamp(&along(1.0));
            let fr = self.eval(&reflected);
            if fr < values[0] {
                if self.exhausted() {
                    return;
                }
                let expanded = self.clamp(&along(2.0));
                let fe = self.eval(&expanded);
                if fe < fr {
                    simplex[n] = expanded;
                    values[n] = fe;
                } else {
                    simplex[n] = reflected;
                    values[n] = fr;
                }
            } else if fr < values[n - 1] {
                simplex[n] = reflected;
                values[n] = fr;
            } else {
                if self.exhausted() {
                    return;
                }
                let t = if fr < values[n] { 0.5 } else { -0.5 };
                let contracted = self.clamp(&along(t));
                let fc = self.eval(&contracted);
                if fc < values[n].min(fr) {
                    simplex[n] = contracted;
                    values[n] = fc;
                } else {
                    for k in 1..=n {
                        if self.exhausted() {
                            return;
                        }
                        let p: Vec<f64> = simplex[0].iter().zip(&simplex[k]).map(|(b, x)| b + 0.5 * (x - b)).collect();
                        values[k] = self.eval(&p);
                        simplex[k] = p;
                    }
                }
            }
        }
    }
}

/// Searches `family` over the box `bounds` with at most `budget` bound
/// evaluations. Deterministic for a given `seed`.
pub fn optimize_free_function(
    d: &DispersionProfile,
    family: Family,
    bounds: &[(f64, f64)],
    budget: usize,
    seed: u64,
) -> Result<FreeFunctionOptimum> {
    let names = family.parameter_names();
    if bounds.len() != names.len() {
        return Err(Error::InvalidParameter(format!(
            "{} needs {} parameter ranges, got {}",
            family.name(),
            names.len(),
            bounds.len()
        )));
    }
    if bounds.iter().any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
        return Err(Error::EmptyBracket(format!("{bounds:?}")));
    }
    let lower: Vec<f64> = bounds.iter().map(|b| b.0).collect();
    let upper: Vec<f64> = bounds.iter().map(|b| b.1).collect();
    let f = |p: &[f64]| family.evaluate(d, p).map(|r| objective(&r)).unwrap_or(f64::INFINITY);
    let mut search = Search { f: &f, lower: &lower, upper: &upper, budget: budget.max(1), used: 0, best: None };

    let default = search.clamp(&family.default_point(d));
    search.eval(&default);
    let n = names.len();
    for mask in 0..(1usize << n) {
        let corner: Vec<f64> = (0..n).map(|i| if mask >> i & 1 == 1 { upper[i] } else { lower[i] }).collect();
        search.eval(&corner);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start = default.clone();
    while !search.exhausted() {
        let before = search.used;
        search.nelder_mead(&start);
        if search.used == before {
            break;
        }
        start = (0..n).map(|i| if upper[i] > lower[i] { rng.gen_range(lower[i]..=upper[i]) } else { lower[i] }).collect();
    }

    let (params, value) = search.best.clone().ok_or(Error::NoFeasiblePoint)?;
    if !value.is_finite() {
        return Err(Error::NoFeasiblePoint);
    }
    let report = family.evaluate(d, &params)?;
    let default_report = family.evaluate(d, &default).ok();
    Ok(FreeFunctionOptimum {
        family,
        parameter_names: names.iter().map(|s| s.to_string()).collect(),
        params,
        report,
        default_report,
        evaluations: search.used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;

    fn square(e: f64) -> DispersionProfile {
        DispersionProfile::new(PotentialSpec::square_barrier(1.0, 1.0).unwrap(), e).unwrap()
    }

    #[test]
    fn wkb_like_optimum_is_at_the_upper_edge() {
        let d = square(0.5);
        let k = 0.5f64.sqrt();
        let (star, r) = optimize_delta(&d, BoundVariant::WkbLike, (0.01, k)).unwrap();
        assert_eq!(star, k);
        assert!((r.bound - 0.007_749).abs() < 1e-6);
    }

    #[test]
    fn flat_objective_returns_midpoint() {
        let d = DispersionProfile::new(PotentialSpec::zero(), 1.0).unwrap();
        let (star, r) = optimize_delta(&d, BoundVariant::Improved5, (0.2, 0.6)).unwrap();
        assert!((star - 0.4).abs() < 1e-15);
        assert_eq!(r.bound, 1.0);
    }

    #[test]
    fn case4_golden_section_beats_endpoints() {
        let d = DispersionProfile::new(PotentialSpec::sech2_bump(0.3, 1.0).unwrap(), 0.5).unwrap();
        let (lo, hi) = (0.2f64.sqrt(), 0.5f64.sqrt());
        let (_, r) = optimize_delta(&d, BoundVariant::Case4, (lo, hi)).unwrap();
        let end = |x: f64| bound_case(&d, 4, &CaseParams { delta: Some(x), ..Default::default() }).unwrap().bound;
        assert!(r.bound >= end(lo).max(end(hi)) - 1e-9);
    }

    #[test]
    fn empty_bracket() {
        let d = square(0.5);
        assert!(matches!(optimize_delta(&d, BoundVariant::WkbLike, (0.8, 0.9)), Err(Error::EmptyBracket(_))));
        assert!(optimize_delta(&d, BoundVariant::Thm1, (0.1, 0.2)).is_err());
    }

    #[test]
    fn plateau_search_matches_scan() {
        let d = square(2.0);
        let opt = optimize_free_function(&d, Family::PlateauH, &[(0.5, 3.0)], DEFAULT_BUDGET, 7).unwrap();
        // closed form: θ(c) = |ln(c/k∞)| + |1 − c²|/c
        let k = 2f64.sqrt();
        let scan = (0..1000)
            .map(|i| 0.5 + 2.5 * i as f64 / 999.0)
            .map(|c: f64| (c / k).ln().abs() + (1.0 - c * c).abs() / c)
            .fold(f64::INFINITY, f64::min);
        assert!(opt.report.theta <= scan + 1e-9);
        assert!((opt.params[0] - 1.0).abs() < 1e-4);
        assert!(opt.report.bound > opt.default_report.unwrap().bound);
    }

    #[test]
    fn zero_width_box_is_a_single_evaluation() {
        let d = square(2.0);
        let opt = optimize_free_function(&d, Family::PlateauH, &[(1.2, 1.2)], DEFAULT_BUDGET, 1).unwrap();
        assert_eq!(opt.params, vec![1.2]);
        assert_eq!(opt.report, Family::PlateauH.evaluate(&d, &[1.2]).unwrap());
    }

    #[test]
    fn deterministic_for_a_seed() {
        let d = DispersionProfile::new(PotentialSpec::gaussian_bump(0.8, 1.0).unwrap(), 1.0).unwrap();
        let b = Family::BumpH.default_box(&d);
        let a1 = optimize_free_function(&d, Family::BumpH, &b, 120, 42).unwrap();
        let a2 = optimize_free_function(&d, Family::BumpH, &b, 120, 42).unwrap();
        assert_eq!(a1.params, a2.params);
        assert_eq!(a1.report, a2.report);
        assert!(a1.report.bound >= a1.default_report.unwrap().bound - 1e-12);
    }
}
