//! Potentials `V(x)`, the dispersion `k²(x) = E − V(x)` at fixed energy, and
//! the partition of the line into allowed and forbidden regions.
//!
//! Units are fixed throughout the crate by `2m/ħ² = 1`, so `k² = E − V`
//! and every energy is a squared wavenumber.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{find_root_bisect, golden_section_min};

pub const DEFAULT_TAIL_EPSILON: f64 = 1e-12;
pub const DEFAULT_SAMPLES: usize = 4096;
/// Crossings are bisected down to adjacent floats.
pub const ROOT_TOL: f64 = 0.0;

/// Marker for the fixed unit convention `2m/ħ² = 1`.
pub const UNITS_2M_OVER_HBAR2: f64 = 1.0;

/// A cubic Hermite interpolant on one contiguous piece of a tabulated
/// potential. Outside its knots it is extended by the end values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HermiteTable {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub slope: Vec<f64>,
}

impl HermiteTable {
    /// Clamped cubic spline (C², zero end slopes) through the data.
    pub fn clamped_spline(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        validate_grid(&x, &y)?;
        let n = x.len();
        let mut slope = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for the interior slopes.
            let m = n - 2;
            let mut sub = vec![0.0; m];
            let mut diag = vec![0.0; m];
            let mut sup = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for k in 0..m {
                let i = k + 1;
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let d0 = (y[i] - y[i - 1]) / h0;
                let d1 = (y[i + 1] - y[i]) / h1;
                sub[k] = h1;
                diag[k] = 2.0 * (h0 + h1);
                sup[k] = h0;
                rhs[k] = 3.0 * (h1 * d0 + h0 * d1);
            }
            for k in 1..m {
                let w = sub[k] / diag[k - 1];
                diag[k] -= w * sup[k - 1];
                rhs[k] -= w * rhs[k - 1];
            }
            slope[m] = rhs[m - 1] / diag[m - 1];
            for k in (0..m - 1).rev() {
                slope[k + 1] = (rhs[k] - sup[k] * slope[k + 2]) / diag[k];
            }
        }
        Ok(HermiteTable { x, y, slope })
    }

    /// Hermite interpolant with caller-supplied slopes.
    pub fn with_slopes(x: Vec<f64>, y: Vec<f64>, slope: Vec<f64>) -> Result<Self> {
        validate_grid(&x, &y)?;
        if slope.len() != x.len() || slope.iter().any(|s| !s.is_finite()) {
            return Err(Error::MalformedSpec("slope table must match the grid".into()));
        }
        Ok(HermiteTable { x, y, slope })
    }

    pub fn lo(&self) -> f64 {
        self.x[0]
    }

    pub fn hi(&self) -> f64 {
        *self.x.last().unwrap()
    }

    /// Value, first and second derivative.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        let n = self.x.len();
        if x <= self.x[0] {
            return [self.y[0], 0.0, 0.0];
        }
        if x >= self.x[n - 1] {
            return [self.y[n - 1], 0.0, 0.0];
        }
        let i = self.x.partition_point(|&xi| xi <= x).saturating_sub(1).min(n - 2);
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (m0, m1) = (self.slope[i] * h, self.slope[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let d1 = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h;
        let d2 = ((12.0 * t - 6.0) * y0 + (6.0 * t - 4.0) * m0 + (-12.0 * t + 6.0) * y1 + (6.0 * t - 2.0) * m1)
            / (h * h);
        [v, d1, d2]
    }
}

fn validate_grid(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::MalformedSpec(format!(
            "tabulated x has {} entries but V has {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::MalformedSpec("tabulated potential needs at least two points".into()));
    }
    if let Some(i) = x.iter().chain(y.iter()).position(|v| !v.is_finite()) {
        let name = if i < x.len() { "x" } else { "V" };
        return Err(Error::NonFinite(name.into()));
    }
    if let Some(i) = x.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::NotMonotone(i + 1));
    }
    Ok(())
}

/// A tabulated potential made of one or more Hermite pieces. Consecutive
/// pieces share their boundary abscissa, where `V` may jump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tabulated {
    pub pieces: Vec<HermiteTable>,
}

impl Tabulated {
    pub fn single(table: HermiteTable) -> Self {
        Tabulated { pieces: vec![table] }
    }

    pub fn from_pieces(pieces: Vec<HermiteTable>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::MalformedSpec("tabulated potential has no pieces".into()));
        }
        for w in pieces.windows(2) {
            if (w[0].hi() - w[1].lo()).abs() > 1e-12 * (1.0 + w[0].hi().abs()) {
                return Err(Error::MalformedSpec("tabulated pieces must be contiguous".into()));
            }
        }
        Ok(Tabulated { pieces })
    }

    fn piece_at(&self, x: f64) -> &HermiteTable {
        let idx = self.pieces.partition_point(|p| p.lo() <= x).saturating_sub(1);
        &self.pieces[idx]
    }

    fn eval(&self, x: f64) -> [f64; 3] {
        self.piece_at(x).eval(x)
    }

    fn breaks(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|p| p.lo()).collect()
    }

    fn knots(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self.pieces.iter().flat_map(|p| p.x.iter().copied()).collect();
        k.dedup();
        k
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    Zero,
    /// `V = height` for `|x − center| < half_width`, zero outside.
    SquareBarrier { height: f64, half_width: f64, center: f64 },
    /// `V = left` for `x < position`, `right` for `x ≥ position`.
    Step { left: f64, right: f64, position: f64 },
    /// `V = height · sech²((x − center)/width)`; negative heights give wells.
    Sech2Bump { height: f64, width: f64, center: f64 },
    /// `V = height · exp(−(x − center)²/(2σ²))`.
    GaussianBump { height: f64, sigma: f64, center: f64 },
    Tabulated(Tabulated),
}

/// A validated potential together with its asymptotes and an effective
/// support window outside which `|V − V±∞| < tail_epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub v_minus_inf: f64,
    pub v_plus_inf: f64,
    pub support: (f64, f64),
    pub tail_epsilon: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    kind: String,
    #[serde(default)]
    params: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    x: Option<Vec<f64>>,
    #[serde(default, rename = "V")]
    v: Option<Vec<f64>>,
    #[serde(default)]
    tail_epsilon: Option<f64>,
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(name.into()))
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    finite(name, v)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::MalformedSpec(format!("`{name}` must be positive, got {v}")))
    }
}

impl PotentialSpec {
    pub fn zero() -> Self {
        PotentialSpec {
            kind: PotentialKind::Zero,
            v_minus_inf: 0.0,
            v_plus_inf: 0.0,
            support: (-1.0, 1.0),
            tail_epsilon: DEFAULT_TAIL_EPSILON,
        }
    }

    pub fn square_barrier(height: f64, half_width: f64) -> Result<Self> {
        Self::build(
            PotentialKind::SquareBarrier { height, half_width, center: 0.0 },
            DEFAULT_TAIL_EPSILON,
        )
    }

    pub fn step(left: f64, right: f64) -> Result<Self> {
        Self::build(PotentialKind::Step { left, right, position: 0.0 }, DEFAULT_TAIL_EPSILON)
    }

    pub fn sech2_bump(height: f64, width: f64) -> Result<Self> {
        Self::build(PotentialKind::Sech2Bump { height, width, center: 0.0 }, DEFAULT_TAIL_EPSILON)
    }

    pub fn gaussian_bump(height: f64, sigma: f64) -> Result<Self> {
        Self::build(PotentialKind::GaussianBump { height, sigma, center: 0.0 }, DEFAULT_TAIL_EPSILON)
    }

    /// Tabulated potential through `(x, V)`, interpolated by a clamped cubic
    /// spline (C²) and extended by its end values.
    pub fn tabulated(x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let table = HermiteTable::clamped_spline(x, v)?;
        Self::build(PotentialKind::Tabulated(Tabulated::single(table)), DEFAULT_TAIL_EPSILON)
    }

    /// Validates the parameters of `kind`, fills in the asymptotes and
    /// computes the support window.
    pub fn build(kind: PotentialKind, tail_epsilon: f64) -> Result<Self> {
        let eps = positive("tail_epsilon", tail_epsilon)?;
        let (v_minus_inf, v_plus_inf, support) = match &kind {
            PotentialKind::Zero => (0.0, 0.0, (-1.0, 1.0)),
            PotentialKind::SquareBarrier { height, half_width, center } => {
                finite("V0", *height)?;
                let a = positive("a", *half_width)?;
                let c = finite("x0", *center)?;
                let margin = 0.05 * a;
                (0.0, 0.0, (c - a - margin, c + a + margin))
            }
            PotentialKind::Step { left, right, position } => {
                let l = finite("V_left", *left)?;
                let r = finite("V_right", *right)?;
                let p = finite("x0", *position)?;
                (l, r, (p - 1.0, p + 1.0))
            }
            PotentialKind::Sech2Bump { height, width, center } => {
                let v0 = finite("V0", *height)?;
                let a = positive("a", *width)?;
                let c = finite("x0", *center)?;
                // |V0| sech²(z) < 4|V0| e^{−2|z|}
                let half = if v0.abs() > eps { 0.5 * a * (4.0 * v0.abs() / eps).ln() } else { a };
                let half = half.max(a) * 1.01;
                (0.0, 0.0, (c - half, c + half))
            }
            PotentialKind::GaussianBump { height, sigma, center } => {
                let v0 = finite("V0", *height)?;
                let s = positive("sigma", *sigma)?;
                let c = finite("x0", *center)?;
                let half = if v0.abs() > eps { s * (2.0 * (v0.abs() / eps).ln()).sqrt() } else { s };
                let half = half.max(s) * 1.01;
                (0.0, 0.0, (c - half, c + half))
            }
            PotentialKind::Tabulated(t) => {
                let first = &t.pieces[0];
                let last = t.pieces.last().unwrap();
                (first.y[0], *last.y.last().unwrap(), (first.lo(), last.hi()))
            }
        };
        Ok(PotentialSpec { kind, v_minus_inf, v_plus_inf, support, tail_epsilon: eps })
    }

    /// Builds a potential from an enumerated kind name and a flat parameter
    /// map, using the same names as the JSON format.
    pub fn from_params(kind: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let allowed: &[&str] = match kind {
            "zero" => &[],
            "square_barrier" => &["V0", "a", "x0"],
            "step" => &["V_left", "V_right", "x0"],
            "sech2_bump" => &["V0", "a", "x0"],
            "gaussian_bump" => &["V0", "sigma", "x0"],
            "tabulated" => {
                return Err(Error::MalformedSpec("tabulated potentials need `x` and `V` arrays".into()))
            }
            other => return Err(Error::MalformedSpec(format!("unknown potential kind `{other}`"))),
        };
        if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::MalformedSpec(format!("unknown parameter `{bad}` for `{kind}`")));
        }
        let get = |name: &str| -> Result<f64> {
            params
                .get(name)
                .copied()
                .ok_or_else(|| Error::MalformedSpec(format!("missing parameter `{name}` for `{kind}`")))
        };
        let center = params.get("x0").copied().unwrap_or(0.0);
        let k = match kind {
            "zero" => PotentialKind::Zero,
            "square_barrier" => PotentialKind::SquareBarrier { height: get("V0")?, half_width: get("a")?, center },
            "step" => PotentialKind::Step { left: get("V_left")?, right: get("V_right")?, position: center },
            "sech2_bump" => PotentialKind::Sech2Bump { height: get("V0")?, width: get("a")?, center },
            "gaussian_bump" => PotentialKind::GaussianBump { height: get("V0")?, sigma: get("sigma")?, center },
            _ => unreachable!(),
        };
        if matches!(k, PotentialKind::Zero) {
            return Ok(Self::zero());
        }
        Self::build(k, DEFAULT_TAIL_EPSILON)
    }

    /// Parses the JSON potential format:
    /// `{"kind": "...", "params": {...}}`, or for tabulated data
    /// `{"kind": "tabulated", "x": [...], "V": [...]}`.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawSpec = serde_json::from_str(text).map_err(|e| Error::MalformedSpec(e.to_string()))?;
        let eps = raw.tail_epsilon.unwrap_or(DEFAULT_TAIL_EPSILON);
        if raw.kind == "tabulated" {
            let (x, v) = match (raw.x, raw.v) {
                (Some(x), Some(v)) => (x, v),
                _ => {
                    let arr = |name: &str| -> Result<Vec<f64>> {
                        let val = raw
                            .params
                            .get(name)
                            .ok_or_else(|| Error::MalformedSpec(format!("tabulated potential missing `{name}`")))?;
                        serde_json::from_value(val.clone()).map_err(|e| Error::MalformedSpec(e.to_string()))
                    };
                    (arr("x")?, arr("V")?)
                }
            };
            let table = HermiteTable::clamped_spline(x, v)?;
            return Self::build(PotentialKind::Tabulated(Tabulated::single(table)), eps);
        }
        let mut params = BTreeMap::new();
        for (k, v) in raw.params {
            let num = v
                .as_f64()
                .ok_or_else(|| Error::MalformedSpec(format!("parameter `{k}` must be a number")))?;
            let num = finite(&k, num)?;
            params.insert(k, num);
        }
        let spec = Self::from_params(&raw.kind, &params)?;
        if spec.kind == PotentialKind::Zero {
            return Ok(spec);
        }
        Self::build(spec.kind, eps)
    }

    /// The same potential shifted right by `c`.
    pub fn translated(&self, c: f64) -> Result<Self> {
        let kind = match &self.kind {
            PotentialKind::Zero => PotentialKind::Zero,
            PotentialKind::SquareBarrier { height, half_width, center } => {
                PotentialKind::SquareBarrier { height: *height, half_width: *half_width, center: center + c }
            }
            PotentialKind::Step { left, right, position } => {
                PotentialKind::Step { left: *left, right: *right, position: position + c }
            }
            PotentialKind::Sech2Bump { height, width, center } => {
                PotentialKind::Sech2Bump { height: *height, width: *width, center: center + c }
            }
            PotentialKind::GaussianBump { height, sigma, center } => {
                PotentialKind::GaussianBump { height: *height, sigma: *sigma, center: center + c }
            }
            PotentialKind::Tabulated(t) => PotentialKind::Tabulated(Tabulated {
                pieces: t
                    .pieces
                    .iter()
                    .map(|p| HermiteTable {
                        x: p.x.iter().map(|x| x + c).collect(),
                        y: p.y.clone(),
                        slope: p.slope.clone(),
                    })
                    .collect(),
            }),
        };
        if kind == PotentialKind::Zero {
            let mut z = Self::zero();
            z.support = (self.support.0 + c, self.support.1 + c);
            return Ok(z);
        }
        Self::build(kind, self.tail_epsilon)
    }

    /// `[V, V', V'']`. Piecewise-constant kinds report zero derivatives
    /// away from their jumps.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        match &self.kind {
            PotentialKind::Zero => [0.0; 3],
            PotentialKind::SquareBarrier { height, half_width, center } => {
                if (x - center).abs() < *half_width {
                    [*height, 0.0, 0.0]
                } else {
                    [0.0; 3]
                }
            }
            PotentialKind::Step { left, right, position } => {
                if x < *position {
                    [*left, 0.0, 0.0]
                } else {
                    [*right, 0.0, 0.0]
                }
            }
            PotentialKind::Sech2Bump { height, width, center } => {
                let z = (x - center) / width;
                let t = z.tanh();
                let s2 = if z.abs() > 350.0 { 0.0 } else { 1.0 / z.cosh().powi(2) };
                // d/dz sech² = −2 sech² tanh ; d²/dz² = sech²(4 tanh² − 2 sech²)
                [
                    height * s2,
                    height * (-2.0 * s2 * t) / width,
                    height * s2 * (4.0 * t * t - 2.0 * s2) / (width * width),
                ]
            }
            PotentialKind::GaussianBump { height, sigma, center } => {
                let z = (x - center) / sigma;
                let g = (-0.5 * z * z).exp();
                [height * g, -height * g * z / sigma, height * g * (z * z - 1.0) / (sigma * sigma)]
            }
            PotentialKind::Tabulated(t) => t.eval(x),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x)[0]
    }

    /// Points where `V` itself jumps.
    pub fn discontinuities(&self) -> Vec<f64> {
        match &self.kind {
            PotentialKind::SquareBarrier { half_width, center, height } if *height != 0.0 => {
                vec![center - half_width, center + half_width]
            }
            PotentialKind::Step { left, right, position } if left != right => vec![*position],
            PotentialKind::Tabulated(t) => t.breaks(),
            _ => Vec::new(),
        }
    }

    /// True when `V` is constant between its discontinuities.
    pub fn is_piecewise_constant(&self) -> bool {
        matches!(
            self.kind,
            PotentialKind::Zero | PotentialKind::SquareBarrier { .. } | PotentialKind::Step { .. }
        )
    }

    /// True when `V` is at least C² (so `k''` exists everywhere).
    pub fn is_smooth(&self) -> bool {
        self.discontinuities().is_empty()
    }

    /// Points at which an ODE integrator should restart: jumps plus table
    /// knots.
    pub fn segment_points(&self) -> Vec<f64> {
        match &self.kind {
            PotentialKind::Tabulated(t) => t.knots(),
            _ => self.discontinuities(),
        }
    }

    /// A representative length scale of the potential's core.
    pub fn core_half_width(&self) -> f64 {
        match &self.kind {
            PotentialKind::Zero => 1.0,
            PotentialKind::SquareBarrier { half_width, .. } => *half_width,
            PotentialKind::Step { .. } => 1.0,
            PotentialKind::Sech2Bump { width, .. } => *width,
            PotentialKind::GaussianBump { sigma, .. } => *sigma,
            PotentialKind::Tabulated(_) => 0.5 * (self.support.1 - self.support.0),
        }
    }

    pub fn center(&self) -> f64 {
        match &self.kind {
            PotentialKind::SquareBarrier { center, .. }
            | PotentialKind::Sech2Bump { center, .. }
            | PotentialKind::GaussianBump { center, .. } => *center,
            PotentialKind::Step { position, .. } => *position,
            _ => 0.5 * (self.support.0 + self.support.1),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            PotentialKind::Zero => "zero",
            PotentialKind::SquareBarrier { .. } => "square_barrier",
            PotentialKind::Step { .. } => "step",
            PotentialKind::Sech2Bump { .. } => "sech2_bump",
            PotentialKind::GaussianBump { .. } => "gaussian_bump",
            PotentialKind::Tabulated(_) => "tabulated",
        }
    }
}

/// `k²(x) = E − V(x)` at a fixed energy above both asymptotes.
#[derive(Debug, Clone)]
pub struct DispersionProfile {
    pub potential: Arc<PotentialSpec>,
    pub energy: f64,
    k_minus_inf: f64,
    k_plus_inf: f64,
}

impl DispersionProfile {
    pub fn new(potential: impl Into<Arc<PotentialSpec>>, energy: f64) -> Result<Self> {
        let potential = potential.into();
        finite("energy", energy)?;
        let threshold = potential.v_minus_inf.max(potential.v_plus_inf);
        if energy <= threshold {
            return Err(Error::BelowThreshold { energy, threshold });
        }
        Ok(DispersionProfile {
            k_minus_inf: (energy - potential.v_minus_inf).sqrt(),
            k_plus_inf: (energy - potential.v_plus_inf).sqrt(),
            potential,
            energy,
        })
    }

    /// `k²(x)`; no input checking.
    #[inline]
    pub fn k2(&self, x: f64) -> f64 {
        self.energy - self.potential.value(x)
    }

    /// `[k², (k²)', (k²)'']`.
    #[inline]
    pub fn k2_jet(&self, x: f64) -> [f64; 3] {
        let [v, d1, d2] = self.potential.eval(x);
        [self.energy - v, -d1, -d2]
    }

    pub fn dispersion_at(&self, x: f64) -> Result<f64> {
        finite("x", x)?;
        Ok(self.k2(x))
    }

    pub fn k_minus_inf(&self) -> f64 {
        self.k_minus_inf
    }

    pub fn k_plus_inf(&self) -> f64 {
        self.k_plus_inf
    }

    pub fn asymptotic_wavenumbers(&self) -> (f64, f64) {
        (self.k_minus_inf, self.k_plus_inf)
    }

    pub fn is_symmetric(&self) -> bool {
        self.potential.v_minus_inf == self.potential.v_plus_inf
    }

    pub fn support(&self) -> (f64, f64) {
        self.potential.support
    }

    /// `κ = √max(0, −k²)`.
    #[inline]
    pub fn kappa(&self, x: f64) -> f64 {
        (-self.k2(x)).max(0.0).sqrt()
    }

    /// `κ'`, zero wherever `κ = 0`.
    pub fn kappa_prime(&self, x: f64) -> f64 {
        let [q, dq, _] = self.k2_jet(x);
        if q < 0.0 {
            -dq / (2.0 * (-q).sqrt())
        } else {
            0.0
        }
    }

    /// One-sided limits of `k²` at `x`.
    pub fn k2_limits(&self, x: f64) -> (f64, f64) {
        let h = 1e-9 * (1.0 + x.abs());
        (self.k2(x - h), self.k2(x + h))
    }
}

/// Sampled-then-bisected region data for one value of `Δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionPartition {
    /// Points where `k² = 0`, ascending.
    pub turning_points: Vec<f64>,
    /// Points where `k² = Δ²`, ascending.
    pub delta_crossings: Vec<f64>,
    pub forbidden_intervals: Vec<(f64, f64)>,
    /// Total forbidden width `L`.
    pub forbidden_width: f64,
    pub kappa_max: f64,
    pub delta: f64,
    /// Minimum of `k²` over the support and where it is attained.
    pub k2_min: f64,
    pub k2_min_at: f64,
    /// `k²` is non-increasing then non-decreasing over the support
    /// (a single valley, possibly flat-bottomed).
    pub single_hump: bool,
}

fn sample_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Crossings of `f` through zero over the sampled grid, with a noise band so
/// that values within `tol` of zero never register as a sign change.
fn crossings(f: &dyn Fn(f64) -> f64, xs: &[f64], tol: f64) -> Result<Vec<f64>> {
    let mut roots = Vec::new();
    let mut prev_class: Option<(bool, f64)> = None;
    for &x in xs {
        let v = f(x);
        let class = if v < -tol {
            Some(true)
        } else if v > tol {
            Some(false)
        } else {
            None
        };
        if let Some(neg) = class {
            if let Some((prev_neg, px)) = prev_class {
                if prev_neg != neg {
                    // bracket [px, x] contains the crossing; narrow with bisection
                    let root = find_root_bisect(f, px, x, ROOT_TOL)?;
                    roots.push(root);
                }
            }
            prev_class = Some((neg, x));
        }
    }
    Ok(roots)
}

/// Locates turning points, `Δ`-crossings and the forbidden region.
pub fn partition_regions(profile: &DispersionProfile, delta: f64) -> Result<RegionPartition> {
    partition_regions_with(profile, delta, DEFAULT_SAMPLES)
}

pub fn partition_regions_with(profile: &DispersionProfile, delta: f64, samples: usize) -> Result<RegionPartition> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let (lo, hi) = profile.support();
    let mut xs = sample_grid(lo, hi, samples.max(16));
    // make sure both sides of every jump are sampled
    for p in profile.potential.discontinuities() {
        let h = 1e-9 * (1.0 + p.abs());
        xs.push(p - h);
        xs.push(p + h);
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let q: Vec<f64> = xs.iter().map(|&x| profile.k2(x)).collect();
    let scale = q.iter().fold(profile.energy.abs(), |m, v| m.max(v.abs()));
    let noise = 1e-14 * (1.0 + scale);

    // a crossing located at a jump of V is reported at the jump itself
    let jumps = profile.potential.discontinuities();
    let snap = |r: f64| {
        jumps
            .iter()
            .copied()
            .find(|p| (r - p).abs() <= 1e-9 * (1.0 + p.abs()))
            .unwrap_or(r)
    };
    let k2 = |x: f64| profile.k2(x);
    let turning_points: Vec<f64> = crossings(&k2, &xs, noise)?.into_iter().map(snap).collect();
    let d2 = delta * delta;
    let shifted = |x: f64| profile.k2(x) - d2;
    let delta_crossings: Vec<f64> = crossings(&shifted, &xs, noise)?.into_iter().map(snap).collect();

    // forbidden intervals from the turning points; the support edges are allowed
    let mut forbidden_intervals = Vec::new();
    let mut open: Option<f64> = None;
    for &t in &turning_points {
        let just_inside = profile.k2(t + 1e-9 * (1.0 + t.abs()));
        match open {
            None if just_inside < 0.0 => open = Some(t),
            Some(start) => {
                forbidden_intervals.push((start, t));
                open = None;
            }
            None => {}
        }
    }
    if let Some(start) = open {
        forbidden_intervals.push((start, hi));
    }
    let forbidden_width = forbidden_intervals.iter().map(|(a, b)| b - a).sum();

    let (imin, _) = q
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
    let (k2_min_at, k2_min) = refine_min(profile, &xs, imin);

    let mut kappa_max: f64 = 0.0;
    for &(a, b) in &forbidden_intervals {
        let inside: Vec<usize> = (0..xs.len()).filter(|&i| xs[i] > a && xs[i] < b).collect();
        let best = inside
            .iter()
            .copied()
            .min_by(|&i, &j| q[i].partial_cmp(&q[j]).unwrap());
        let qmin = match best {
            Some(i) => refine_min(profile, &xs, i).1,
            None => profile.k2(0.5 * (a + b)),
        };
        kappa_max = kappa_max.max((-qmin).max(0.0).sqrt());
    }

    let band = 1e-12 * (1.0 + scale);
    let single_hump = q[..=imin].windows(2).all(|w| w[1] <= w[0] + band)
        && q[imin..].windows(2).all(|w| w[1] >= w[0] - band);

    Ok(RegionPartition {
        turning_points,
        delta_crossings,
        forbidden_intervals,
        forbidden_width,
        kappa_max,
        delta,
        k2_min,
        k2_min_at,
        single_hump,
    })
}

fn refine_min(profile: &DispersionProfile, xs: &[f64], i: usize) -> (f64, f64) {
    let a = xs[i.saturating_sub(1)];
    let b = xs[(i + 1).min(xs.len() - 1)];
    let q0 = profile.k2(xs[i]);
    if profile.potential.is_piecewise_constant() || b <= a {
        return (xs[i], q0);
    }
    let (x, v) = golden_section_min(|x| profile.k2(x), a, b, 1e-12 * (1.0 + a.abs().max(b.abs())));
    if v < q0 {
        (x, v)
    } else {
        (xs[i], q0)
    }
}
