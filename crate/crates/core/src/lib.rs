//! Bergman approximations of geodesic rays attached to toric test
//! configurations, and numerical checks of the estimates they satisfy.
//!
//! Module map:
//! - [`toric`]: polytopes, torus-invariant metrics, orthonormal monomial bases.
//! - [`weights`]: integer weights of a test configuration and the exact
//!   expansion of their normalized traces.
//! - [`ray`]: the potentials `Phi_k`, their differences `Psi_k`, the envelope.
//! - [`lower_triangular`]: expansion of powers of level-one sections.
//! - [`ma`]: discrete Monge–Ampère measures, comparison and uniqueness checks.
//! - [`regularity`]: Hölder quotients of the gradient and the moment measure.
//! - [`cli`] and [`acceptance`]: configured runs and the acceptance suite.

pub mod acceptance;
pub mod cli;
pub mod error;
pub mod lower_triangular;
pub mod lse;
pub mod ma;
pub mod ray;
pub mod regularity;
pub mod toric;
pub mod weights;

pub use error::{Error, Result};
