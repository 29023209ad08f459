//! Exact one-dimensional stable allocation, the F path and its level and
//! measure certificates.

mod checks;
mod fpath;
mod solver;
mod walk;

pub use checks::{check_measure_preserving, check_same_level, level_residuals, seam_crossings};
pub use fpath::{build_f, radius_bound_from_f, FPath};
pub use solver::{solve_1d, IntervalAllocation};
pub use walk::{walk_event_sim, WalkEstimate};
