//! Bergman approximations `Phi_k` of the geodesic ray, their differences
//! `Psi_k = Phi_k - Phi_1`, and the upper envelope.

pub mod analysis;
pub mod bundle;
pub mod grid;
pub mod level;

pub use analysis::{
    boundary_decay, envelope, log_log_slope, psh_check, sup_t_derivative, t_derivative_check, tail_sups,
    uniform_bound_check, uniform_lower_bound, Envelope, PshReport, TDerivativeReport, UniformBoundReport,
};
pub use bundle::{write_rows, LevelDiagnostics, RayBundle, RayDiagnostics, RaySettings};
pub use grid::{Grid, GridFunction, Tag};
pub use level::{phi_k, phi_sharp_identity, psi_k, sample_level, BergmanLevel};
