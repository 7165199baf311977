//! Adaptive Gauss-Kronrod quadrature over finite intervals with mandatory
//! breakpoints, and bracketed bisection.
//!
//! Every integral in the bound family is reduced to the support window of the
//! problem before it reaches this module, so only finite intervals are handled
//! here. Kinks of the integrand (turning points, `Δ`-crossings, jumps of the
//! potential) are passed in as breakpoints; the engine splits there first and
//! only then refines adaptively by bisecting the sub-interval with the largest
//! error estimate.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const DEFAULT_ABS_TOL: f64 = 1e-13;
pub const MAX_DEPTH: u32 = 60;
const MAX_INTERVALS: usize = 20_000;

// 15-point Kronrod abscissae and weights, with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// A definite integral of `integrand` over `[a, b]`.
pub struct IntegrationTask<'f> {
    integrand: &'f dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: Vec<f64>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Apply the substitution `x = a + (b - a)(3u² - 2u³)` on every
    /// breakpoint-delimited piece. This turns integrable `1/√` endpoint
    /// singularities (for example `κ'` at a turning point) into smooth
    /// integrands.
    pub endpoint_smoothing: bool,
}

impl<'f> IntegrationTask<'f> {
    pub fn new(integrand: &'f dyn Fn(f64) -> f64, a: f64, b: f64) -> Self {
        IntegrationTask {
            integrand,
            a,
            b,
            breakpoints: Vec::new(),
            rel_tol: DEFAULT_REL_TOL,
            abs_tol: DEFAULT_ABS_TOL,
            endpoint_smoothing: false,
        }
    }

    /// Interior points where the integrand may have kinks or jumps. Points
    /// outside the open interval and duplicates are dropped.
    pub fn breakpoints(mut self, points: impl IntoIterator<Item = f64>) -> Self {
        self.breakpoints.extend(points);
        self
    }

    pub fn tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn endpoint_smoothing(mut self, on: bool) -> Self {
        self.endpoint_smoothing = on;
        self
    }

    fn pieces(&self) -> Vec<(f64, f64)> {
        let mut pts: Vec<f64> = self
            .breakpoints
            .iter()
            .copied()
            .filter(|p| p.is_finite() && *p > self.a && *p < self.b)
            .collect();
        pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * (1.0 + y.abs()));
        let mut edges = Vec::with_capacity(pts.len() + 2);
        edges.push(self.a);
        edges.extend(pts);
        edges.push(self.b);
        edges.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// Result of a converged integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
    depth: u32,
    // index of the breakpoint piece this segment belongs to
    piece: usize,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One application of the Kronrod rule on `[lo, hi]`, returning the value and
/// a QUADPACK-style error estimate.
fn gauss_kronrod(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

/// A single 15-point Kronrod application on `[lo, hi]`: `(value, error)`.
pub fn gauss_kronrod_15(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    gauss_kronrod(f, lo, hi)
}

/// Integrates the task adaptively. On failure the error carries the best
/// available estimate.
pub fn integrate_adaptive(task: &IntegrationTask<'_>) -> Result<Quadrature> {
    if !(task.a.is_finite() && task.b.is_finite()) || task.a >= task.b {
        return Err(Error::InvalidInterval { a: task.a, b: task.b });
    }
    let pieces = task.pieces();
    let f = task.integrand;
    let smooth = task.endpoint_smoothing;

    // On piece k the integrand is evaluated in the local variable u ∈ [0, 1]
    // when smoothing is on, and in x directly otherwise.
    let eval = |piece: usize, lo: f64, hi: f64| -> (f64, f64) {
        let (pa, pb) = pieces[piece];
        if smooth {
            let w = pb - pa;
            let g = |u: f64| {
                let x = pa + w * u * u * (3.0 - 2.0 * u);
                let jac = 6.0 * w * u * (1.0 - u);
                if jac == 0.0 {
                    0.0
                } else {
                    f(x) * jac
                }
            };
            gauss_kronrod(&g, lo, hi)
        } else {
            gauss_kronrod(f, lo, hi)
        }
    };

    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for (k, &(pa, pb)) in pieces.iter().enumerate() {
        let (lo, hi) = if smooth { (0.0, 1.0) } else { (pa, pb) };
        let (v, e) = eval(k, lo, hi);
        total += v;
        total_err += e;
        heap.push(Segment { lo, hi, value: v, error: e, depth: 0, piece: k });
    }

    let mut frozen: Vec<Segment> = Vec::new();
    let mut count = heap.len();
    loop {
        let tol = task.abs_tol.max(task.rel_tol * total.abs());
        if total_err <= tol {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.lo + worst.hi);
        if worst.depth >= MAX_DEPTH || count >= MAX_INTERVALS || mid <= worst.lo || mid >= worst.hi {
            frozen.push(worst);
            continue;
        }
        let (v1, e1) = eval(worst.piece, worst.lo, mid);
        let (v2, e2) = eval(worst.piece, mid, worst.hi);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        count += 1;
        let depth = worst.depth + 1;
        heap.push(Segment { lo: worst.lo, hi: mid, value: v1, error: e1, depth, piece: worst.piece });
        heap.push(Segment { lo: mid, hi: worst.hi, value: v2, error: e2, depth, piece: worst.piece });
    }

    // re-sum to shed drift from the running updates
    let value: f64 = heap.iter().chain(frozen.iter()).map(|s| s.value).sum();
    let error: f64 = heap.iter().chain(frozen.iter()).map(|s| s.error).sum();
    if error <= task.abs_tol.max(task.rel_tol * value.abs()) {
        Ok(Quadrature { value, error, intervals: count })
    } else {
        Err(Error::Convergence { value, error })
    }
}

/// Shorthand for integrating with default tolerances.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, breakpoints: &[f64]) -> Result<f64> {
    let task = IntegrationTask::new(f, a, b).breakpoints(breakpoints.iter().copied());
    integrate_adaptive(&task).map(|q| q.value)
}

/// Bisection on a sign-changing bracket. The returned point always lies in
/// the initial bracket.
pub fn find_root_bisect(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if !(f_lo.signum() * f_hi.signum() < 0.0) {
        return Err(Error::NoSignChange { lo, hi });
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section minimisation of a scalar function on `[lo, hi]`. Returns
/// `(x_min, f_min)`; the result is only guaranteed to be a local minimum.
pub fn golden_section_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, x_tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if (b - a).abs() <= x_tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial() {
        let f = |x: f64| x * x;
        let v = integrate(&f, 0.0, 1.0, &[]).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn sech_squared_over_wide_window() {
        let f = |x: f64| 1.0 / x.cosh().powi(2);
        let v = integrate(&f, -20.0, 20.0, &[]).unwrap();
        assert!((v - 2.0 * 20f64.tanh()).abs() < 1e-10);
        assert!((v - 2.0).abs() < 1e-10);
    }

    #[test]
    fn kink_at_breakpoint_is_exact() {
        let f = |x: f64| x.abs();
        let q = integrate_adaptive(&IntegrationTask::new(&f, -1.0, 1.0).breakpoints([0.0])).unwrap();
        assert!((q.value - 1.0).abs() < 1e-15);
        assert_eq!(q.intervals, 2);
    }

    #[test]
    fn endpoint_sqrt_singularity() {
        // ∫₀¹ 1/√x dx = 2
        let f = |x: f64| 1.0 / x.sqrt();
        let task = IntegrationTask::new(&f, 0.0, 1.0).endpoint_smoothing(true);
        let q = integrate_adaptive(&task).unwrap();
        assert!((q.value - 2.0).abs() < 1e-10, "{}", q.value);
    }

    #[test]
    fn reversed_interval_rejected() {
        let f = |x: f64| x;
        assert!(matches!(
            integrate(&f, 1.0, 0.0, &[]),
            Err(Error::InvalidInterval { .. })
        ));
    }

    #[test]
    fn nonconvergence_reports_best_estimate() {
        let f = |x: f64| 1.0 / x;
        let err = integrate(&f, 0.0, 1.0, &[]).unwrap_err();
        assert!(matches!(err, Error::Convergence { .. }));
    }

    #[test]
    fn roots() {
        let r = find_root_bisect(|x| x * x - 2.0, 1.0, 2.0, 1e-12).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-11);
        let r = find_root_bisect(|x: f64| 1.0 / x.cosh().powi(2) - 0.5, 0.0, 2.0, 1e-12).unwrap();
        assert!((r - 2f64.sqrt().acosh()).abs() < 1e-11);
        assert!((r - 0.881_373_6).abs() < 1e-7);
        let r = find_root_bisect(|x| x, -1.0, 1.0, 1e-12).unwrap();
        assert!(r.abs() < 1e-12);
        assert!(matches!(
            find_root_bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn golden_section_on_parabola() {
        let (x, fx) = golden_section_min(|x| (x - 0.3).powi(2) + 1.0, 0.0, 1.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn linearity(alpha in -3.0f64..3.0, beta in -3.0f64..3.0, w in 0.5f64..4.0) {
                let f = move |x: f64| (w * x).sin();
                let g = |x: f64| (-x * x).exp();
                let h = move |x: f64| alpha * f(x) + beta * g(x);
                let lhs = integrate(&h, -2.0, 3.0, &[]).unwrap();
                let rhs = alpha * integrate(&f, -2.0, 3.0, &[]).unwrap()
                    + beta * integrate(&g, -2.0, 3.0, &[]).unwrap();
                prop_assert!((lhs - rhs).abs() < 1e-9);
            }

            #[test]
            fn splitting(c in -1.9f64..2.9) {
                let f = |x: f64| (x.sin() + 1.5) * (-0.1 * x * x).exp();
                let whole = integrate(&f, -2.0, 3.0, &[]).unwrap();
                let split = integrate(&f, -2.0, c, &[]).unwrap() + integrate(&f, c, 3.0, &[]).unwrap();
                prop_assert!((whole - split).abs() < 1e-9);
            }

            #[test]
            fn root_stays_in_bracket(lo in -5.0f64..-0.1, hi in 0.1f64..5.0, shift in -0.09f64..0.09) {
                let r = find_root_bisect(|x| x - shift, lo, hi, 1e-12).unwrap();
                prop_assert!(r >= lo && r <= hi);
            }
        }
    }
}
