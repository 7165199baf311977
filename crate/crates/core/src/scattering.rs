//! Exact transmission and reflection amplitudes.
//!
//! The second-order equation `u'' + k²(x) u = 0` is written as the linear
//! system `(u, u')' = [[0, 1], [−k², 0]] (u, u')` and its 2×2 propagator is
//! accumulated across the support window. Piecewise-constant segments use
//! the closed-form propagator; everywhere else a three-stage Gauss-Legendre
//! collocation step (order six) is used with step-doubling error control.
//! Gauss collocation preserves the symplectic form, so every step matrix has
//! unit determinant and `T + R = 1` holds to rounding regardless of the
//! discretisation error.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::DispersionProfile;

pub const DEFAULT_ACCURACY: f64 = 1e-12;

type Mat2 = [[f64; 2]; 2];

const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Left-incident, flux-normalised scattering data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatteringResult {
    /// Coefficient of `exp(+i k₊ x)` at the right edge.
    pub t: Complex64,
    /// Coefficient of `exp(−i k₋ x)` at the left edge.
    pub r: Complex64,
    /// `T = (k₊/k₋)|t|²`.
    pub transmission: f64,
    /// `R = |r|²`.
    pub reflection: f64,
    pub energy: f64,
    pub k_minus_inf: f64,
    pub k_plus_inf: f64,
    /// Accumulated local error estimate of the propagator (relative).
    pub error_estimate: f64,
}

impl ScatteringResult {
    pub fn unitarity_defect(&self) -> f64 {
        (self.transmission + self.reflection - 1.0).abs()
    }
}

/// Closed-form propagator for constant `k² = q` over a length `h`.
fn constant_propagator(q: f64, h: f64) -> Mat2 {
    let z = q * h * h;
    if z.abs() < 1e-6 {
        // series keeps accuracy near k² = 0
        let c = 1.0 - z / 2.0 + z * z / 24.0 - z * z * z / 720.0;
        let s = h * (1.0 - z / 6.0 + z * z / 120.0 - z * z * z / 5040.0);
        return [[c, s], [-q * s, c]];
    }
    if q > 0.0 {
        let k = q.sqrt();
        let (s, c) = (k * h).sin_cos();
        [[c, s / k], [-k * s, c]]
    } else {
        let kap = (-q).sqrt();
        let (s, c) = ((kap * h).sinh(), (kap * h).cosh());
        [[c, s / kap], [kap * s, c]]
    }
}

const SQRT15: f64 = 3.872_983_346_207_417;
const GL_C: [f64; 3] = [0.5 - SQRT15 / 10.0, 0.5, 0.5 + SQRT15 / 10.0];
const GL_B: [f64; 3] = [5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0];
const GL_A: [[f64; 3]; 3] = [
    [5.0 / 36.0, 2.0 / 9.0 - SQRT15 / 15.0, 5.0 / 36.0 - SQRT15 / 30.0],
    [5.0 / 36.0 + SQRT15 / 24.0, 2.0 / 9.0, 5.0 / 36.0 - SQRT15 / 24.0],
    [5.0 / 36.0 + SQRT15 / 30.0, 2.0 / 9.0 + SQRT15 / 15.0, 5.0 / 36.0],
];

/// Solves the dense system `m · y = rhs` in place (partial pivoting).
#[allow(clippy::needless_range_loop)]
fn solve6(m: &mut [[f64; 6]; 6], rhs: &mut [[f64; 2]; 6]) {
    for col in 0..6 {
        let piv = (col..6).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, piv);
        rhs.swap(col, piv);
        let d = m[col][col];
        for row in col + 1..6 {
            let f = m[row][col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..6 {
                m[row][k] -= f * m[col][k];
            }
            for k in 0..2 {
                rhs[row][k] -= f * rhs[col][k];
            }
        }
    }
    for col in (0..6).rev() {
        for k in 0..2 {
            let mut s = rhs[col][k];
            for j in col + 1..6 {
                s -= m[col][j] * rhs[j][k];
            }
            rhs[col][k] = s / m[col][col];
        }
    }
}

/// One Gauss-Legendre step of length `h` from `x` for `y' = A(x) y`.
fn gauss_step(k2: &dyn Fn(f64) -> f64, x: f64, h: f64) -> Mat2 {
    let q: [f64; 3] = std::array::from_fn(|i| k2(x + GL_C[i] * h));
    // block (i, j) = δᵢⱼ I − h aᵢⱼ Aⱼ with Aⱼ = [[0, 1], [−qⱼ, 0]]
    let mut m = [[0.0; 6]; 6];
    for i in 0..3 {
        for j in 0..3 {
            let s = h * GL_A[i][j];
            m[2 * i][2 * j + 1] = -s;
            m[2 * i + 1][2 * j] = s * q[j];
        }
        m[2 * i][2 * i] += 1.0;
        m[2 * i + 1][2 * i + 1] += 1.0;
    }
    let mut rhs = [[0.0; 2]; 6];
    for i in 0..3 {
        rhs[2 * i] = [1.0, 0.0];
        rhs[2 * i + 1] = [0.0, 1.0];
    }
    solve6(&mut m, &mut rhs);
    let mut out = IDENTITY;
    for i in 0..3 {
        let y0 = rhs[2 * i];
        let y1 = rhs[2 * i + 1];
        // Aᵢ Yᵢ = [y1; −qᵢ y0]
        for k in 0..2 {
            out[0][k] += h * GL_B[i] * y1[k];
            out[1][k] -= h * GL_B[i] * q[i] * y0[k];
        }
    }
    out
}

/// Propagator over `[a, b]` for a smooth `k²`, plus its accumulated error
/// estimate.
fn adaptive_propagator(k2: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, h0: f64) -> Result<(Mat2, f64, f64)> {
    let mut x = a;
    let mut h = h0.min(b - a);
    let mut acc = IDENTITY;
    let mut err_sum = 0.0;
    let min_step = 1e-13 * (1.0 + (b - a));
    while x < b {
        if b - x < h * 1.000_001 {
            h = b - x;
        }
        let full = gauss_step(k2, x, h);
        let half = mat_mul(&gauss_step(k2, x + 0.5 * h, 0.5 * h), &gauss_step(k2, x, 0.5 * h));
        let scale = half.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
        let err = half
            .iter()
            .flatten()
            .zip(full.iter().flatten())
            .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()))
            / scale;
        if err <= tol || h <= min_step {
            if h <= min_step && err > tol {
                return Err(Error::StepUnderflow(x));
            }
            acc = mat_mul(&half, &acc);
            err_sum += err;
            x += h;
            let grow = if err == 0.0 { 4.0 } else { (0.9 * (tol / err).powf(1.0 / 7.0)).clamp(0.2, 4.0) };
            h *= grow;
        } else {
            h *= (0.9 * (tol / err).powf(1.0 / 7.0)).clamp(0.1, 0.9);
        }
    }
    Ok((acc, err_sum, h))
}

/// Real 2×2 propagator of `(u, u')` from the left to the right edge of the
/// support window.
pub fn transfer_matrix(profile: &DispersionProfile, accuracy: f64) -> Result<(Mat2, f64)> {
    let (lo, hi) = profile.support();
    let mut edges: Vec<f64> = profile
        .potential
        .segment_points()
        .into_iter()
        .filter(|p| *p > lo && *p < hi)
        .collect();
    edges.insert(0, lo);
    edges.push(hi);
    edges.dedup();

    let k2 = |x: f64| profile.k2(x);
    let piecewise_constant = profile.potential.is_piecewise_constant();
    let mut acc = IDENTITY;
    let mut err = 0.0;
    let mut h_guess = 0.05;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let step = if piecewise_constant {
            constant_propagator(profile.k2(0.5 * (a + b)), b - a)
        } else {
            let (m, e, h) = adaptive_propagator(&k2, a, b, accuracy, h_guess)?;
            err += e;
            h_guess = h.max(1e-6);
            m
        };
        acc = mat_mul(&step, &acc);
    }
    Ok((acc, err))
}

/// Solves the scattering problem for unit-amplitude incidence from the left.
pub fn solve_scattering(profile: &DispersionProfile, accuracy: f64) -> Result<ScatteringResult> {
    if !(accuracy.is_finite() && accuracy > 0.0) {
        return Err(Error::InvalidParameter(format!("accuracy must be positive, got {accuracy}")));
    }
    let (lo, hi) = profile.support();
    let (km, kp) = profile.asymptotic_wavenumbers();
    let (p, err) = transfer_matrix(profile, accuracy)?;

    // propagate the outgoing wave exp(i k₊ x) back from the right edge
    let i = Complex64::i();
    let u_r = (i * kp * hi).exp();
    let du_r = i * kp * u_r;
    let det = p[0][0] * p[1][1] - p[0][1] * p[1][0];
    let u_l = (u_r * p[1][1] - du_r * p[0][1]) / det;
    let du_l = (du_r * p[0][0] - u_r * p[1][0]) / det;

    let incident = 0.5 * (u_l + du_l / (i * km)) * (-i * km * lo).exp();
    let reflected = 0.5 * (u_l - du_l / (i * km)) * (i * km * lo).exp();
    let t = 1.0 / incident;
    let r = reflected / incident;
    Ok(ScatteringResult {
        t,
        r,
        transmission: (kp / km) * t.norm_sqr(),
        reflection: r.norm_sqr(),
        energy: profile.energy,
        k_minus_inf: km,
        k_plus_inf: kp,
        error_estimate: err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;

    fn exact(p: PotentialSpec, e: f64) -> ScatteringResult {
        solve_scattering(&DispersionProfile::new(p, e).unwrap(), DEFAULT_ACCURACY).unwrap()
    }

    #[test]
    fn free_propagation() {
        let s = exact(PotentialSpec::zero(), 1.0);
        assert!((s.transmission - 1.0).abs() < 1e-14);
        assert!(s.reflection < 1e-28);
    }

    #[test]
    fn square_barrier_at_half_height() {
        let s = exact(PotentialSpec::square_barrier(1.0, 1.0).unwrap(), 0.5);
        let expect = 1.0 / 2f64.sqrt().cosh().powi(2);
        assert!((s.transmission - expect).abs() < 1e-12);
        assert!((s.transmission - 0.210_772).abs() < 1e-6);
    }

    #[test]
    fn step_matching() {
        let s = exact(PotentialSpec::step(0.0, -3.0).unwrap(), 1.0);
        assert!((s.transmission - 8.0 / 9.0).abs() < 1e-13);
        assert!((s.reflection - 1.0 / 9.0).abs() < 1e-13);
    }

    #[test]
    fn gauss_step_has_unit_determinant() {
        let k2 = |x: f64| 0.3 - (-x * x).exp();
        let m = gauss_step(&k2, -0.4, 0.37);
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        assert!((det - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_step_matches_constant_propagator() {
        let k2 = |_: f64| -0.7;
        let m = gauss_step(&k2, 0.0, 0.05);
        let c = constant_propagator(-0.7, 0.05);
        for r in 0..2 {
            for s in 0..2 {
                assert!((m[r][s] - c[r][s]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn smooth_barrier_is_unitary() {
        let s = exact(PotentialSpec::sech2_bump(1.0, 1.0).unwrap(), 0.7);
        assert!(s.unitarity_defect() < 1e-12);
        assert!(s.transmission > 0.0 && s.transmission < 1.0);
    }

    #[test]
    fn rejects_bad_accuracy() {
        let d = DispersionProfile::new(PotentialSpec::zero(), 1.0).unwrap();
        assert!(solve_scattering(&d, 0.0).is_err());
    }
}
