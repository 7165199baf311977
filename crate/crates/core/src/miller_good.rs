//! The Miller-Good change of variables `u(x) = U(X(x)) / √X'(x)`.
//!
//! With `j = X' > 0` the equation `u'' + k² u = 0` becomes `U_XX + K² U = 0`
//! where
//!
//! ```text
//! K² = (k² − ½ j''/j + ¾ (j'/j)²) / j²
//! ```
//!
//! and `K±∞ = k±∞ / j±∞`. Both problems share transmission and reflection
//! probabilities. [`MillerGoodMap`] builds `X(x)` by cumulative quadrature,
//! evaluates `K²`, and resamples the transformed problem onto a uniform grid
//! in `X` so it can be handed back to the exact solver.

use crate::error::{Error, Result};
use crate::free::FreeFunction;
use crate::potential::{DispersionProfile, HermiteTable, PotentialKind, PotentialSpec, Tabulated, DEFAULT_TAIL_EPSILON};
use crate::quadrature::{gauss_kronrod_15, integrate};
use crate::scattering::{solve_scattering, ScatteringResult};

/// Cells used for the cumulative table of `X(x)`.
pub const X_TABLE_CELLS: usize = 4096;

/// Default number of uniform `X` cells for the resampled problem.
pub const DEFAULT_RESAMPLE_CELLS: usize = 4096;

/// `−½ X'''/X' + ¾ (X''/X')²` from the derivatives `[X', X'', X''']`.
pub fn schwarzian_from_jet(d: [f64; 3]) -> Result<f64> {
    let [x1, x2, x3] = d;
    if !(x1 > 0.0) {
        return Err(Error::NonPositive { x: f64::NAN, value: x1 });
    }
    let s = -0.5 * x3 / x1 + 0.75 * (x2 / x1).powi(2);
    if s.is_finite() {
        Ok(s)
    } else {
        Err(Error::NonFinite("schwarzian".into()))
    }
}

/// The Schwarzian combination of `X' = j` as a function of `x`, using the
/// analytic derivatives of `j`.
pub fn schwarzian_combination<'a>(
    j: &'a FreeFunction,
    profile: &'a DispersionProfile,
) -> Result<impl Fn(f64) -> Result<f64> + 'a> {
    if !j.is_c2() {
        return Err(Error::InvalidParameter(format!("{} is not twice differentiable", j.describe())));
    }
    Ok(move |x: f64| schwarzian_from_jet(j.eval(profile, x)))
}

/// `√X' · (1/√X')''` by five-point central differences of `X'` with step
/// `h`. An independent check on [`schwarzian_from_jet`].
pub fn schwarzian_by_differences(xprime: impl Fn(f64) -> f64, x: f64, h: f64) -> Result<f64> {
    let w = |t: f64| {
        let v = xprime(t);
        if v > 0.0 {
            Ok(1.0 / v.sqrt())
        } else {
            Err(Error::NonPositive { x: t, value: v })
        }
    };
    let (wm2, wm1, w0, wp1, wp2) = (w(x - 2.0 * h)?, w(x - h)?, w(x)?, w(x + h)?, w(x + 2.0 * h)?);
    let second = (-wm2 + 16.0 * wm1 - 30.0 * w0 + 16.0 * wp1 - wp2) / (12.0 * h * h);
    let s = second / w0;
    if s.is_finite() {
        Ok(s)
    } else {
        Err(Error::NonFinite("schwarzian".into()))
    }
}

/// `[j, j', j'', j''']` of a twice-differentiable free function.
fn jet4(j: &FreeFunction, profile: &DispersionProfile, x: f64) -> [f64; 4] {
    let [v, d1, d2] = j.eval(profile, x);
    [v, d1, d2, j.third_derivative(x).unwrap_or(0.0)]
}

/// An executable Miller-Good map for one dispersion profile and one choice
/// of `j = X'`.
#[derive(Debug, Clone)]
pub struct MillerGoodMap {
    profile: DispersionProfile,
    j: FreeFunction,
    pub j_minus_inf: f64,
    pub j_plus_inf: f64,
    window: (f64, f64),
    nodes: Vec<f64>,
    cumulative: Vec<f64>,
}

impl MillerGoodMap {
    /// Builds the map. `j` must be a smooth free function, strictly positive
    /// on the sampled window.
    pub fn new(profile: &DispersionProfile, j: FreeFunction) -> Result<Self> {
        if !j.is_c2() {
            return Err(Error::InvalidParameter(format!(
                "j must be twice differentiable, got {}",
                j.describe()
            )));
        }
        let (j_minus_inf, j_plus_inf) = j.asymptotes(profile);
        for (name, v) in [("j(-inf)", j_minus_inf), ("j(+inf)", j_plus_inf)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be finite and positive, got {v}")));
            }
        }
        let (mut lo, mut hi) = profile.support();
        if let Some((a, b)) = j.window() {
            lo = lo.min(a);
            hi = hi.max(b);
        }
        let n = X_TABLE_CELLS;
        let nodes: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        let mut cumulative = Vec::with_capacity(n + 1);
        let mut acc = j_minus_inf * lo;
        cumulative.push(acc);
        for w in nodes.windows(2) {
            let [v, d1, d2, _] = jet4(&j, profile, w[0]);
            if !(v > 0.0) {
                return Err(Error::NonPositive { x: w[0], value: v });
            }
            if !(d1.is_finite() && d2.is_finite()) {
                return Err(Error::NonFinite(format!("derivative of j at x = {}", w[0])));
            }
            acc += gauss_kronrod_15(&|t: f64| j.value(profile, t), w[0], w[1]).0;
            cumulative.push(acc);
        }
        let last = j.value(profile, hi);
        if !(last > 0.0) {
            return Err(Error::NonPositive { x: hi, value: last });
        }
        Ok(MillerGoodMap { profile: profile.clone(), j, j_minus_inf, j_plus_inf, window: (lo, hi), nodes, cumulative })
    }

    pub fn j(&self) -> &FreeFunction {
        &self.j
    }

    pub fn profile(&self) -> &DispersionProfile {
        &self.profile
    }

    /// The `x`-window on which `k²` or `j` deviates from its asymptotes.
    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    /// `X(x)`, anchored so that `X = j−∞ · x` left of the window.
    pub fn forward(&self, x: f64) -> f64 {
        let (lo, hi) = self.window;
        if x <= lo {
            return self.j_minus_inf * x;
        }
        if x >= hi {
            return self.cumulative[self.cumulative.len() - 1] + self.j_plus_inf * (x - hi);
        }
        let i = self.nodes.partition_point(|&t| t <= x).saturating_sub(1).min(self.nodes.len() - 2);
        let a = self.nodes[i];
        if x == a {
            return self.cumulative[i];
        }
        self.cumulative[i] + gauss_kronrod_15(&|t: f64| self.j.value(&self.profile, t), a, x).0
    }

    /// `x(X)`, by safeguarded Newton iteration inside the bracketing table
    /// cell.
    pub fn inverse(&self, big_x: f64) -> f64 {
        let (lo, hi) = self.window;
        let xl = self.cumulative[0];
        let xr = self.cumulative[self.cumulative.len() - 1];
        if big_x <= xl {
            return big_x / self.j_minus_inf;
        }
        if big_x >= xr {
            return hi + (big_x - xr) / self.j_plus_inf;
        }
        let i = self.cumulative.partition_point(|&c| c <= big_x).saturating_sub(1).min(self.nodes.len() - 2);
        let (mut a, mut b) = (self.nodes[i], self.nodes[i + 1]);
        let (ca, cb) = (self.cumulative[i], self.cumulative[i + 1]);
        let mut x = a + (b - a) * (big_x - ca) / (cb - ca);
        for _ in 0..60 {
            let f = self.forward(x) - big_x;
            if f.abs() <= 4.0 * f64::EPSILON * (1.0 + big_x.abs()) {
                break;
            }
            if f > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let step = f / self.j.value(&self.profile, x);
            let next = x - step;
            x = if next > a && next < b { next } else { 0.5 * (a + b) };
            if b - a <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
                break;
            }
        }
        x
    }

    /// `K²` at the image of `x`.
    pub fn k2_transformed(&self, x: f64) -> f64 {
        let [j, j1, j2, _] = jet4(&self.j, &self.profile, x);
        let g = j1 / j;
        (self.profile.k2(x) - 0.5 * j2 / j + 0.75 * g * g) / (j * j)
    }

    /// `dK²/dX` at the image of `x`.
    pub fn k2_transformed_slope(&self, x: f64) -> f64 {
        let [q, dq, _] = self.profile.k2_jet(x);
        let [j, j1, j2, j3] = jet4(&self.j, &self.profile, x);
        let g = j1 / j;
        let s = j2 / j;
        let big_k2 = (q - 0.5 * s + 0.75 * g * g) / (j * j);
        let da = dq - 0.5 * (j3 / j - s * g) + 1.5 * g * (s - g * g);
        let d_dx = -2.0 * g * big_k2 + da / (j * j);
        d_dx / j
    }

    /// `(K−∞, K+∞)`.
    pub fn asymptotic_wavenumbers(&self) -> (f64, f64) {
        let (km, kp) = self.profile.asymptotic_wavenumbers();
        (km / self.j_minus_inf, kp / self.j_plus_inf)
    }

    /// The transformed problem as a tabulated potential `V_X = K−∞² − K²(X)`
    /// on a uniform `X` grid, split wherever the original potential jumps.
    pub fn transformed_potential(&self, cells: usize) -> Result<PotentialSpec> {
        let (lo, hi) = self.window;
        let (km, _) = self.asymptotic_wavenumbers();
        let e_x = km * km;
        let mut cuts: Vec<f64> = self
            .profile
            .potential
            .discontinuities()
            .into_iter()
            .filter(|p| *p > lo && *p < hi)
            .collect();
        cuts.insert(0, lo);
        cuts.push(hi);
        let images: Vec<f64> = cuts.iter().map(|&x| self.forward(x)).collect();
        let total = images[images.len() - 1] - images[0];
        let mut pieces = Vec::new();
        for (k, w) in images.windows(2).enumerate() {
            let n = ((cells.max(16) as f64) * (w[1] - w[0]) / total).ceil().max(16.0) as usize;
            let mut xs = Vec::with_capacity(n + 1);
            let mut vs = Vec::with_capacity(n + 1);
            let mut ss = Vec::with_capacity(n + 1);
            for i in 0..=n {
                let big_x = w[0] + (w[1] - w[0]) * i as f64 / n as f64;
                // evaluate on the correct side of a jump
                let x = if i == 0 {
                    cuts[k] + 1e-12 * (1.0 + cuts[k].abs())
                } else if i == n {
                    cuts[k + 1] - 1e-12 * (1.0 + cuts[k + 1].abs())
                } else {
                    self.inverse(big_x)
                };
                let v = e_x - self.k2_transformed(x);
                let s = -self.k2_transformed_slope(x);
                if !(v.is_finite() && s.is_finite()) {
                    return Err(Error::NonFinite(format!("transformed potential at x = {x}")));
                }
                xs.push(big_x);
                vs.push(v);
                ss.push(s);
            }
            pieces.push(HermiteTable::with_slopes(xs, vs, ss)?);
        }
        let table = Tabulated::from_pieces(pieces)?;
        let mut spec = PotentialSpec::build(PotentialKind::Tabulated(table), DEFAULT_TAIL_EPSILON)?;
        // the end values are the asymptotes up to the tail threshold
        let (kmi, kpi) = self.asymptotic_wavenumbers();
        spec.v_minus_inf = e_x - kmi * kmi;
        spec.v_plus_inf = e_x - kpi * kpi;
        Ok(spec)
    }

    /// The transformed problem at energy `K−∞²`.
    pub fn transformed_profile(&self, cells: usize) -> Result<DispersionProfile> {
        let (km, _) = self.asymptotic_wavenumbers();
        DispersionProfile::new(self.transformed_potential(cells)?, km * km)
    }

    /// Exact scattering data of the transformed problem.
    pub fn solve_transformed(&self, accuracy: f64) -> Result<ScatteringResult> {
        solve_scattering(&self.transformed_profile(DEFAULT_RESAMPLE_CELLS)?, accuracy)
    }

    /// `∫ j dx` over `[a, b]` by adaptive quadrature; a check on the table.
    pub fn arc_length(&self, a: f64, b: f64) -> Result<f64> {
        integrate(&|t: f64| self.j.value(&self.profile, t), a, b, &[])
    }
}
