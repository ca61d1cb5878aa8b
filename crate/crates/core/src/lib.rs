//! Integrated Brownian motion and its stationary (integrated Ornstein-Uhlenbeck)
//! transform.
//!
//! `W(t) = (W_0(t), ..., W_n(t))` is the vector of successive primitives of a
//! standard Brownian motion. The change of time and scale
//! `X_k(t) = e^{-(k+1/2)t} W_k(e^t)` turns it into a jointly stationary
//! Gaussian vector process whose spectral description yields closed forms for
//! the joint and transition densities of `W`.
//!
//! The crate is `no_std` (it needs `alloc`):
//!
//! * [`exact`] builds the dimension-free rational matrices `Γ`, `B`, `A`,
//!   `A⁻¹`, `Λ`, `ρ⁻¹` and the (not dimension-free) `ρ` in exact arithmetic.
//! * [`spectral`] holds the rational transfer functions `H_n`, `G_n`, `Ĥ_n`
//!   and evaluates spectral inner products and cross-correlations by residues.
//! * [`density`] evaluates covariances, stationary and transition densities,
//!   and the factored inverse covariance in double precision.
//! * [`sampling`] draws exact joint samples of `W` and `X` and carries the
//!   Monte Carlo kernels.
#![no_std]

extern crate alloc;

mod error;
mod math;

pub mod density;
pub mod exact;
pub mod rational;
pub mod sampling;
pub mod spectral;

pub use error::{Error, Result};
pub use exact::{DimFreeMatrix, ExactMatrix};
pub use rational::BigRational;
