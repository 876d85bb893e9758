//! Gradient regularity of the ray and its moment measure.

pub mod gradient;
pub mod holder;
pub mod moments;

pub use gradient::{gradient, GradientField};
pub use holder::{holder_estimate, HolderVerdict, QuotientRow, RegularityReport, REFINEMENT_SLACK};
pub use moments::{moment_measure, BumpTest, MomentTable, DEFAULT_BUMPS};
