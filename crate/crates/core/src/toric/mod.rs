//! The toric variety, its sections and the background metric.

pub mod basis;
pub mod metric;
pub mod polytope;
pub mod quadrature;

pub use basis::{build_basis, build_basis_unchecked, section_norm, OrthonormalBasis};
pub use metric::{Bump, ToricMetric};
pub use polytope::{lattice_points, LatticeIndex, LatticePoint, Polytope, Rational};
