//! Trial functions for the bound family.
//!
//! The positive functions `h`, `H`, `j`, `J` are [`FreeFunction`]s and the
//! real function `χ` is a [`ChiFunction`]. Smooth parametric choices are
//! carried as [`LogProfile`]s, `exp(g(x))` with `g` a sum of tanh steps and
//! Gaussian bumps; that representation is closed under the conversions the
//! bounds need (`h = H·J²`, `j = J⁻²`, `χ = (ln J)'`) and has exact
//! derivatives to third order.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::potential::DispersionProfile;

/// Tail threshold for the support of a log profile: outside its window `g`
/// deviates from its asymptotes by less than this.
pub const PROFILE_TAIL_EPSILON: f64 = 1e-15;

/// One additive term of `g(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogTerm {
    /// `amplitude · (1 + tanh((x − center)/width)) / 2`
    Step { amplitude: f64, center: f64, width: f64 },
    /// `amplitude · exp(−((x − center)/width)²)`
    Bump { amplitude: f64, center: f64, width: f64 },
}

impl LogTerm {
    /// `[g, g', g'', g''']` contribution.
    fn jet(&self, x: f64) -> [f64; 4] {
        match *self {
            LogTerm::Step { amplitude: a, center, width: w } => {
                let t = ((x - center) / w).tanh();
                let s = 1.0 - t * t;
                [
                    0.5 * a * (1.0 + t),
                    0.5 * a * s / w,
                    -a * t * s / (w * w),
                    0.5 * a * s * (6.0 * t * t - 2.0) / (w * w * w),
                ]
            }
            LogTerm::Bump { amplitude: a, center, width: w } => {
                let z = (x - center) / w;
                let e = a * (-z * z).exp();
                [
                    e,
                    -2.0 * z * e / w,
                    (4.0 * z * z - 2.0) * e / (w * w),
                    (12.0 * z - 8.0 * z * z * z) * e / (w * w * w),
                ]
            }
        }
    }

    fn window(&self) -> (f64, f64) {
        let (a, c, w, r) = match *self {
            LogTerm::Step { amplitude, center, width } => {
                (amplitude, center, width, 0.5 * (amplitude.abs() / PROFILE_TAIL_EPSILON).max(1.0).ln())
            }
            LogTerm::Bump { amplitude, center, width } => {
                (amplitude, center, width, (amplitude.abs() / PROFILE_TAIL_EPSILON).max(1.0).ln().sqrt())
            }
        };
        if a == 0.0 {
            return (c, c);
        }
        (c - w * r.max(1.0) * 1.01, c + w * r.max(1.0) * 1.01)
    }

    fn scaled(&self, p: f64) -> LogTerm {
        match *self {
            LogTerm::Step { amplitude, center, width } => LogTerm::Step { amplitude: amplitude * p, center, width },
            LogTerm::Bump { amplitude, center, width } => LogTerm::Bump { amplitude: amplitude * p, center, width },
        }
    }
}

/// `exp(offset + Σ terms)`: strictly positive by construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogProfile {
    pub offset: f64,
    pub terms: Vec<LogTerm>,
}

impl LogProfile {
    pub fn constant(c: f64) -> Self {
        LogProfile { offset: c.ln(), terms: Vec::new() }
    }

    /// Smooth monotone interpolation from `left` to `right` centred at
    /// `center` over the length scale `width`.
    pub fn interpolating(left: f64, right: f64, center: f64, width: f64) -> Self {
        LogProfile {
            offset: left.ln(),
            terms: vec![LogTerm::Step { amplitude: (right / left).ln(), center, width }],
        }
    }

    /// `base · exp(amplitude · exp(−((x − center)/width)²))`; unit
    /// asymptotics when `base = 1`.
    pub fn bump(base: f64, amplitude: f64, center: f64, width: f64) -> Self {
        LogProfile { offset: base.ln(), terms: vec![LogTerm::Bump { amplitude, center, width }] }
    }

    pub fn with_term(mut self, term: LogTerm) -> Self {
        self.terms.push(term);
        self
    }

    /// Pointwise product.
    pub fn mul(&self, other: &LogProfile) -> LogProfile {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().copied());
        LogProfile { offset: self.offset + other.offset, terms }
    }

    /// Pointwise power `f^p`.
    pub fn powf(&self, p: f64) -> LogProfile {
        LogProfile { offset: self.offset * p, terms: self.terms.iter().map(|t| t.scaled(p)).collect() }
    }

    /// `[g, g', g'', g''']` for `g = ln f`.
    pub fn log_jet(&self, x: f64) -> [f64; 4] {
        let mut g = [self.offset, 0.0, 0.0, 0.0];
        for t in &self.terms {
            let d = t.jet(x);
            for k in 0..4 {
                g[k] += d[k];
            }
        }
        g
    }

    /// `[f, f', f'', f''']`.
    pub fn jet(&self, x: f64) -> [f64; 4] {
        let [g0, g1, g2, g3] = self.log_jet(x);
        let v = g0.exp();
        [v, v * g1, v * (g2 + g1 * g1), v * (g3 + 3.0 * g1 * g2 + g1 * g1 * g1)]
    }

    pub fn value(&self, x: f64) -> f64 {
        self.log_jet(x)[0].exp()
    }

    pub fn asymptotes(&self) -> (f64, f64) {
        let right: f64 = self
            .terms
            .iter()
            .map(|t| match t {
                LogTerm::Step { amplitude, .. } => *amplitude,
                LogTerm::Bump { .. } => 0.0,
            })
            .sum();
        (self.offset.exp(), (self.offset + right).exp())
    }

    /// Window outside which the profile equals its asymptotes to within
    /// [`PROFILE_TAIL_EPSILON`] in relative terms; `None` for constants.
    pub fn window(&self) -> Option<(f64, f64)> {
        self.terms
            .iter()
            .filter(|t| !matches!(t, LogTerm::Step { amplitude, .. } | LogTerm::Bump { amplitude, .. } if *amplitude == 0.0))
            .map(|t| t.window())
            .reduce(|a, b| (a.0.min(b.0), a.1.max(b.1)))
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| match t {
            LogTerm::Step { amplitude, .. } | LogTerm::Bump { amplitude, .. } => *amplitude == 0.0,
        })
    }
}

/// A user-supplied smooth function. Derivatives default to central
/// differences with step `(support width) · 1e−5`.
pub trait SmoothFunction: Send + Sync {
    fn value(&self, x: f64) -> f64;
    fn asymptotes(&self) -> (f64, f64);
    fn support(&self) -> (f64, f64);

    /// `[f, f', f'', f''']`.
    fn jet(&self, x: f64) -> [f64; 4] {
        let (a, b) = self.support();
        let h = ((b - a) * 1e-5).max(1e-8);
        let f = |t: f64| self.value(t);
        let (fm2, fm1, f0, fp1, fp2) = (f(x - 2.0 * h), f(x - h), f(x), f(x + h), f(x + 2.0 * h));
        [
            f0,
            (fp1 - fm1) / (2.0 * h),
            (fp1 - 2.0 * f0 + fm1) / (h * h),
            (fp2 - 2.0 * fp1 + 2.0 * fm1 - fm2) / (2.0 * h * h * h),
        ]
    }
}

/// Closure-backed [`SmoothFunction`].
pub struct ClosureFunction<F> {
    pub f: F,
    pub asymptotes: (f64, f64),
    pub support: (f64, f64),
}

impl<F: Fn(f64) -> f64 + Send + Sync> SmoothFunction for ClosureFunction<F> {
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }
    fn asymptotes(&self) -> (f64, f64) {
        self.asymptotes
    }
    fn support(&self) -> (f64, f64) {
        self.support
    }
}

/// Positive trial function `h`, `H`, `j` or `J`.
#[derive(Clone)]
pub enum FreeFunction {
    Smooth(LogProfile),
    /// `√max(k², Δ²)`; kinks at the `Δ`-crossings, jumps wherever `k²` jumps
    /// above `Δ²`.
    MaxKDelta { delta: f64 },
    /// Piecewise constant: `left` for `x < start`, `inner` on
    /// `[start, end)`, `right` for `x ≥ end`.
    Plateau { left: f64, inner: f64, right: f64, start: f64, end: f64 },
    Custom(Arc<dyn SmoothFunction>),
}

impl fmt::Debug for FreeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl FreeFunction {
    pub fn constant(c: f64) -> Self {
        FreeFunction::Smooth(LogProfile::constant(c))
    }

    pub fn describe(&self) -> String {
        match self {
            FreeFunction::Smooth(p) if p.is_constant() => format!("const({})", p.offset.exp()),
            FreeFunction::Smooth(p) => format!("smooth({})", serde_json::to_string(p).unwrap_or_default()),
            FreeFunction::MaxKDelta { delta } => format!("max_k_delta({delta})"),
            FreeFunction::Plateau { left, inner, right, start, end } => {
                format!("plateau({left},{inner},{right};{start},{end})")
            }
            FreeFunction::Custom(_) => "custom".to_string(),
        }
    }

    /// `[f, f', f'']` at `x`.
    pub fn eval(&self, d: &DispersionProfile, x: f64) -> [f64; 3] {
        match self {
            FreeFunction::Smooth(p) => {
                let j = p.jet(x);
                [j[0], j[1], j[2]]
            }
            FreeFunction::MaxKDelta { delta } => {
                let [q, dq, ddq] = d.k2_jet(x);
                if q > delta * delta {
                    let v = q.sqrt();
                    [v, dq / (2.0 * v), ddq / (2.0 * v) - dq * dq / (4.0 * v * v * v)]
                } else {
                    [*delta, 0.0, 0.0]
                }
            }
            FreeFunction::Plateau { left, inner, right, start, end } => {
                let v = if x < *start {
                    *left
                } else if x < *end {
                    *inner
                } else {
                    *right
                };
                [v, 0.0, 0.0]
            }
            FreeFunction::Custom(f) => {
                let j = f.jet(x);
                [j[0], j[1], j[2]]
            }
        }
    }

    /// Third derivative where available (smooth kinds only).
    pub fn third_derivative(&self, x: f64) -> Option<f64> {
        match self {
            FreeFunction::Smooth(p) => Some(p.jet(x)[3]),
            FreeFunction::Custom(f) => Some(f.jet(x)[3]),
            _ => None,
        }
    }

    pub fn value(&self, d: &DispersionProfile, x: f64) -> f64 {
        self.eval(d, x)[0]
    }

    pub fn asymptotes(&self, d: &DispersionProfile) -> (f64, f64) {
        match self {
            FreeFunction::Smooth(p) => p.asymptotes(),
            FreeFunction::MaxKDelta { delta } => (d.k_minus_inf().max(*delta), d.k_plus_inf().max(*delta)),
            FreeFunction::Plateau { left, right, .. } => (*left, *right),
            FreeFunction::Custom(f) => f.asymptotes(),
        }
    }

    /// Where the function departs from its asymptotes, if it has its own
    /// window independent of the potential.
    pub fn window(&self) -> Option<(f64, f64)> {
        match self {
            FreeFunction::Smooth(p) => p.window(),
            FreeFunction::Plateau { start, end, .. } => Some((*start, *end)),
            FreeFunction::Custom(f) => Some(f.support()),
            FreeFunction::MaxKDelta { .. } => None,
        }
    }

    /// Points where the function itself may jump.
    pub fn jump_points(&self, d: &DispersionProfile) -> Vec<f64> {
        match self {
            FreeFunction::MaxKDelta { .. } => d.potential.discontinuities(),
            FreeFunction::Plateau { start, end, .. } => vec![*start, *end],
            _ => Vec::new(),
        }
    }

    /// Points where the first derivative may jump (the `Δ`-crossings).
    pub fn kink_points(&self, d: &DispersionProfile) -> crate::Result<Vec<f64>> {
        match self {
            FreeFunction::MaxKDelta { delta } => Ok(crate::potential::partition_regions(d, *delta)?.delta_crossings),
            _ => Ok(Vec::new()),
        }
    }

    /// Twice continuously differentiable everywhere.
    pub fn is_c2(&self) -> bool {
        matches!(self, FreeFunction::Smooth(_) | FreeFunction::Custom(_))
    }

    pub fn as_profile(&self) -> Option<&LogProfile> {
        match self {
            FreeFunction::Smooth(p) => Some(p),
            _ => None,
        }
    }

    /// One-sided limits `(f(p⁻), f(p⁺))`.
    pub fn limits(&self, d: &DispersionProfile, p: f64) -> (f64, f64) {
        let h = 1e-9 * (1.0 + p.abs());
        (self.value(d, p - h), self.value(d, p + h))
    }
}

/// The real trial function `χ`, with no sign constraint.
#[derive(Clone)]
pub enum ChiFunction {
    Zero,
    /// `χ = κ = √max(0, −k²)`.
    Kappa,
    /// `χ = (ln J)'` for `J` given as a log profile.
    LogDerivative(LogProfile),
    /// A user function together with the points where it is allowed to jump.
    Custom { f: Arc<dyn SmoothFunction>, jumps: Vec<f64> },
}

impl fmt::Debug for ChiFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl ChiFunction {
    pub fn describe(&self) -> String {
        match self {
            ChiFunction::Zero => "zero".into(),
            ChiFunction::Kappa => "kappa".into(),
            ChiFunction::LogDerivative(p) => format!("dlog({})", serde_json::to_string(p).unwrap_or_default()),
            ChiFunction::Custom { .. } => "custom".into(),
        }
    }

    /// `[χ, χ']`.
    pub fn eval(&self, d: &DispersionProfile, x: f64) -> [f64; 2] {
        match self {
            ChiFunction::Zero => [0.0, 0.0],
            ChiFunction::Kappa => [d.kappa(x), d.kappa_prime(x)],
            ChiFunction::LogDerivative(p) => {
                let g = p.log_jet(x);
                [g[1], g[2]]
            }
            ChiFunction::Custom { f, .. } => {
                let j = f.jet(x);
                [j[0], j[1]]
            }
        }
    }

    pub fn value(&self, d: &DispersionProfile, x: f64) -> f64 {
        self.eval(d, x)[0]
    }

    pub fn jump_points(&self, d: &DispersionProfile) -> Vec<f64> {
        match self {
            ChiFunction::Kappa => d.potential.discontinuities(),
            ChiFunction::Custom { jumps, .. } => jumps.clone(),
            _ => Vec::new(),
        }
    }

    pub fn kink_points(&self, d: &DispersionProfile) -> crate::Result<Vec<f64>> {
        match self {
            ChiFunction::Kappa => {
                let k = d.k_minus_inf().min(d.k_plus_inf());
                Ok(crate::potential::partition_regions(d, k)?.turning_points)
            }
            _ => Ok(Vec::new()),
        }
    }

    pub fn window(&self) -> Option<(f64, f64)> {
        match self {
            ChiFunction::LogDerivative(p) => p.window(),
            ChiFunction::Custom { f, .. } => Some(f.support()),
            _ => None,
        }
    }

    pub fn asymptotes(&self) -> (f64, f64) {
        match self {
            ChiFunction::Custom { f, .. } => f.asymptotes(),
            _ => (0.0, 0.0),
        }
    }

    /// Continuously differentiable everywhere.
    pub fn is_c1(&self, d: &DispersionProfile) -> bool {
        match self {
            ChiFunction::Zero | ChiFunction::LogDerivative(_) => true,
            ChiFunction::Kappa => false,
            ChiFunction::Custom { jumps, .. } => jumps.is_empty() && d.potential.is_smooth(),
        }
    }

    pub fn limits(&self, d: &DispersionProfile, p: f64) -> (f64, f64) {
        let h = 1e-9 * (1.0 + p.abs());
        (self.value(d, p - h), self.value(d, p + h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-5;
        (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
    }

    #[test]
    fn log_profile_derivatives_match_finite_differences() {
        let p = LogProfile::interpolating(0.7, 1.9, 0.3, 0.8)
            .with_term(LogTerm::Bump { amplitude: -0.4, center: -0.5, width: 1.3 });
        for &x in &[-2.0, -0.4, 0.0, 0.9, 2.5] {
            let j = p.jet(x);
            assert!((j[1] - fd(|t| p.value(t), x)).abs() < 1e-8);
            assert!((j[2] - fd(|t| p.jet(t)[1], x)).abs() < 1e-8);
            assert!((j[3] - fd(|t| p.jet(t)[2], x)).abs() < 1e-7);
        }
    }

    #[test]
    fn conversions_are_pointwise() {
        let big_h = LogProfile::bump(1.2, 0.3, 0.0, 1.0);
        let j = LogProfile::bump(1.0, -0.2, 0.4, 0.7);
        let h = big_h.mul(&j.powf(2.0));
        for &x in &[-1.0, 0.2, 1.7] {
            let expect = big_h.value(x) * j.value(x).powi(2);
            assert!((h.value(x) - expect).abs() < 1e-14);
        }
        let (l, r) = LogProfile::interpolating(1.0, 2.0, 0.0, 0.5).asymptotes();
        assert!((l - 1.0).abs() < 1e-15 && (r - 2.0).abs() < 1e-15);
    }

    #[test]
    fn window_bounds_deviation() {
        let p = LogProfile::bump(1.0, 0.5, 0.0, 1.0);
        let (a, b) = p.window().unwrap();
        assert!((p.value(a) - 1.0).abs() < 1e-14);
        assert!((p.value(b) - 1.0).abs() < 1e-14);
        assert!(LogProfile::constant(3.0).window().is_none());
    }

    #[test]
    fn max_k_delta_on_square_barrier() {
        let d = DispersionProfile::new(PotentialSpec::square_barrier(1.0, 1.0).unwrap(), 2.0).unwrap();
        let f = FreeFunction::MaxKDelta { delta: 1.2 };
        assert_eq!(f.value(&d, 0.0), 1.2);
        assert!((f.value(&d, 3.0) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(f.jump_points(&d), vec![-1.0, 1.0]);
    }

    #[test]
    fn closure_function_uses_central_differences() {
        let c = ClosureFunction { f: |x: f64| 1.0 + 0.5 * (-x * x).exp(), asymptotes: (1.0, 1.0), support: (-6.0, 6.0) };
        let j = c.jet(0.3);
        let exact = -0.3 * (-0.09f64).exp();
        assert!((j[1] - exact).abs() < 1e-8);
    }
}
