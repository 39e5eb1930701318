//! Thermodynamic formalism for product-type potentials on the one-dimensional
//! XY model `[lo, hi]^ℕ` with Lebesgue a priori measure.
//!
//! For `f(x) = Σ_j f_j(x_j)` everything is explicit: the leading eigenvalue of
//! the transfer operator is `λ_β = ∫ exp(β F)`, with `F(a) = f(a, a, …)`, the
//! eigenfunction is `exp(β u)` with `u(x) = Σ_j Σ_{i>j} f_i(x_j)`, and the
//! equilibrium measure is the i.i.d. product of the density
//! `exp(β F) / λ_β`. This crate evaluates those objects, checks them against
//! direct numerical computation, and studies the zero-temperature limit:
//! selection of maximizing measures and the large-deviation rate function.

pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod landscape;
pub mod ldp;
pub mod optimization;
pub mod polylog;
pub mod potential;
pub mod quadrature;
pub mod transfer;

pub use error::{Error, Result};
pub use potential::{EventuallyConstantPoint, Interval, PotentialFamily};
