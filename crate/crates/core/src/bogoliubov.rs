//! The transmission/particle-production dictionary `T ↔ 1/(1 + N)`.
//!
//! A parametric oscillator `ü + k(t)² u = 0` is the same equation as the
//! scattering problem with time in place of position, so any lower bound
//! `T ≥ sech²θ` is an upper bound `N ≤ sinh²θ` on the number of produced
//! quanta.

use serde::Serialize;

use crate::bounds::{ln_sech2, BoundReport};
use crate::error::{Error, Result};

/// Above this `θ`, `sinh²θ` is reported only through its logarithm.
pub const LOG_FORM_THRESHOLD: f64 = 350.0;

/// `N = (1 − T)/T`.
pub fn transmission_to_occupation(t: f64) -> Result<f64> {
    if t == 0.0 {
        return Err(Error::InfiniteProduction);
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::TransmissionOutOfRange(t));
    }
    Ok((1.0 - t) / t)
}

/// `T = 1/(1 + N)`.
pub fn occupation_to_transmission(n: f64) -> Result<f64> {
    if !(n >= 0.0 && n.is_finite()) {
        return Err(Error::InvalidParameter(format!("occupation must be a finite non-negative number, got {n}")));
    }
    Ok(1.0 / (1.0 + n))
}

/// `ln sinh²θ` for `θ > 0`.
pub fn ln_sinh2(theta: f64) -> f64 {
    let t = theta.abs();
    2.0 * (t - 2f64.ln() + (-(-2.0 * t).exp()).ln_1p())
}

/// Upper bound `N ≤ sinh²θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OccupationBound {
    /// `sinh²θ`, absent once it would overflow.
    pub n_upper: Option<f64>,
    pub ln_n_upper: f64,
}

pub fn occupation_bound_from_theta(theta: f64) -> Result<OccupationBound> {
    if theta.is_nan() || theta < 0.0 {
        return Err(Error::NegativeTheta(theta));
    }
    if theta == 0.0 {
        return Ok(OccupationBound { n_upper: Some(0.0), ln_n_upper: f64::NEG_INFINITY });
    }
    let ln = ln_sinh2(theta);
    let n_upper = (theta <= LOG_FORM_THRESHOLD).then(|| theta.sinh().powi(2));
    Ok(OccupationBound { n_upper, ln_n_upper: ln })
}

/// `|sech²θ · (1 + sinh²θ) − 1|`, evaluated through logarithms for large
/// `θ`.
pub fn duality_defect(theta: f64) -> f64 {
    let t = theta.abs();
    if t <= LOG_FORM_THRESHOLD {
        let s = crate::bounds::sech2(t);
        (s * (1.0 + t.sinh().powi(2)) - 1.0).abs()
    } else {
        // ln(1 + sinh²θ) = 2 ln cosh θ
        let ln_cosh2 = 2.0 * (t - 2f64.ln() + (-2.0 * t).exp().ln_1p());
        (ln_sech2(t) + ln_cosh2).exp_m1().abs()
    }
}

/// Particle-production statement derived from an exact transmission and/or
/// a transmission bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupationReport {
    /// `N` from the exact transmission, when one was given.
    pub n: Option<f64>,
    pub source_bound: Option<BoundReport>,
    pub n_upper: Option<f64>,
    pub ln_n_upper: Option<f64>,
}

impl OccupationReport {
    pub fn new(t_exact: Option<f64>, bound: Option<BoundReport>) -> Result<Self> {
        let n = t_exact.map(transmission_to_occupation).transpose()?;
        let upper = match &bound {
            Some(b) if b.theta.is_finite() => Some(occupation_bound_from_theta(b.theta)?),
            _ => None,
        };
        Ok(OccupationReport {
            n,
            source_bound: bound,
            n_upper: upper.and_then(|u| u.n_upper),
            ln_n_upper: upper.map(|u| u.ln_n_upper),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn occupation_examples() {
        assert_eq!(transmission_to_occupation(1.0).unwrap(), 0.0);
        assert_eq!(transmission_to_occupation(0.5).unwrap(), 1.0);
        assert!((transmission_to_occupation(0.210_772).unwrap() - 3.744_458).abs() < 1e-5);
        assert_eq!(transmission_to_occupation(0.0), Err(Error::InfiniteProduction));
        assert!(matches!(transmission_to_occupation(1.5), Err(Error::TransmissionOutOfRange(_))));
        assert!(matches!(transmission_to_occupation(-0.1), Err(Error::TransmissionOutOfRange(_))));
    }

    #[test]
    fn sinh_bound_examples() {
        assert_eq!(occupation_bound_from_theta(0.0).unwrap().n_upper, Some(0.0));
        let b = occupation_bound_from_theta(std::f64::consts::SQRT_2).unwrap();
        assert!((b.n_upper.unwrap() - 3.744_458).abs() < 1e-4);
        let b = occupation_bound_from_theta(3.121_321).unwrap();
        assert!((b.n_upper.unwrap() - 128.054).abs() < 1e-3);
        let big = occupation_bound_from_theta(400.0).unwrap();
        assert!(big.n_upper.is_none());
        assert!((big.ln_n_upper - (800.0 - 4f64.ln())).abs() < 1e-10);
        assert!(occupation_bound_from_theta(-1.0).is_err());
    }

    #[test]
    fn duality_holds() {
        for theta in [0.0, 0.1, std::f64::consts::SQRT_2, 3.121_321, 20.0, 500.0] {
            assert!(duality_defect(theta) < 1e-12, "{theta}");
        }
        for theta in [0.3, 2.0, 9.0] {
            let n = occupation_bound_from_theta(theta).unwrap().n_upper.unwrap();
            assert!((occupation_to_transmission(n).unwrap() - crate::bounds::sech2(theta)).abs() < 1e-12);
            assert!((ln_sinh2(theta) - n.ln()).abs() < 1e-12);
        }
    }
}
