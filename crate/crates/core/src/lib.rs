//! Pathwise analysis of fast-slow systems driven by symmetric alpha-stable
//! noise on a spectral discretization of a nonlocal operator.
//!
//! The crate builds up in layers: stable increments and their paths,
//! the spectral operator with its eigenvalue asymptotics and a quadrature
//! cross-check, stationary convolution processes, the transformed
//! fast-slow integrator, and the slow-manifold machinery (fixed-point
//! construction, asymptotic approximation, exponential tracking) on top.

// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fastslow_system;
pub mod fractional_laplacian;
pub mod levy_noise;
pub mod parallel;
pub mod slow_manifold;
pub mod stationary_ou;

pub mod presets;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests by downstream tools.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
