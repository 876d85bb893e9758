//! Discrete Monge–Ampère measures, mass decay along the Bergman levels,
//! the comparison inequality and the uniqueness probe.

pub mod comparison;
pub mod decay;
pub mod measure;
pub mod uniqueness;

pub use comparison::{comparison_check, comparison_harness, ComparisonReport, Draw, HarnessReport, HarnessSettings};
pub use decay::{mass_decay, MassDecay, MassRow};
pub use measure::{ma_measure, ma_measure_exact, reference_mass_check, CalibrationCheck, MaField};
pub use uniqueness::{bump_probe, convex_projection, lattice_directions, uniqueness_probe, ProbeSettings, UniquenessReport};
