//! Exact transmission through one-dimensional potential barriers, and
//! rigorous lower bounds on it.
//!
//! Units are fixed so that `2m/ħ² = 1`, giving `k²(x) = E − V(x)`. Every
//! bound has the form `T ≥ sech²θ` for an integral `θ` over one or more free
//! functions, and is returned as a [`bounds::BoundReport`] that says whether
//! its preconditions held.
//!
//! ```
//! use tunnelbound::bounds::{evaluate_default, BoundVariant};
//! use tunnelbound::potential::{DispersionProfile, PotentialSpec};
//! use tunnelbound::scattering::{solve_scattering, DEFAULT_ACCURACY};
//!
//! let d = DispersionProfile::new(PotentialSpec::gaussian_bump(2.0, 0.5)?, 1.0)?;
//! let t = solve_scattering(&d, DEFAULT_ACCURACY)?.transmission;
//! for v in [BoundVariant::Thm1, BoundVariant::Case4, BoundVariant::WkbLike] {
//!     let r = evaluate_default(&d, v, None)?;
//!     assert!(!r.valid || r.bound <= t);
//! }
//! # Ok::<(), tunnelbound::Error>(())
//! ```
//!
//! The guide in `book/` walks through each module with runnable examples.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod bogoliubov;
pub mod bounds;
pub mod free;
pub mod miller_good;
pub mod optimize;
pub mod potential;
pub mod quadrature;
pub mod scattering;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/potentials.md")]
    mod potentials {}
    #[doc = include_str!("../../../book/src/quadrature.md")]
    mod quadrature {}
    #[doc = include_str!("../../../book/src/exact.md")]
    mod exact {}
    #[doc = include_str!("../../../book/src/miller-good.md")]
    mod miller_good {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/wkb-like.md")]
    mod wkb_like {}
    #[doc = include_str!("../../../book/src/optimizing.md")]
    mod optimizing {}
    #[doc = include_str!("../../../book/src/particles.md")]
    mod particles {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
