//! Numerical toolkit for the two-dimensional Schrödinger equation with a
//! nonlinearity concentrated at one point.
//!
//! The dynamics reduce to a scalar Volterra equation for the charge q(t)
//! with the weakly singular kernel I(t). The crate evaluates the kernel
//! functions ([`specfun`]), discretizes the convolution operators ([`ops`]),
//! solves the charge equation ([`charge`]) and rebuilds the wave function in
//! momentum space to measure mass, energy and the boundary condition
//! ([`field`]). [`oracle`] holds slow independent references.

// `!(x > 0.0)` is deliberate: it also rejects NaN. Quadrature constants keep
// their published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod charge;
pub mod error;
pub mod field;
pub mod ops;
pub mod oracle;
mod quad;
pub mod specfun;

pub use error::{Error, Result};
