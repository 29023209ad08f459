//! Monte Carlo studies built on the solvers: tail curves, distributional
//! comparisons, rigidity, continuity and box probes, and territory pictures.

mod compare;
mod engine;
mod perturb;
mod render;
mod rigidity;
mod tails;

pub use compare::{
    distribution_compare, identity_experiment, ordering_violations, IdentityConfig, IdentityReport,
    OrderingReport, TIE_RESOLUTION,
};
pub use engine::{solve, Resolution, Solved};
pub use perturb::{
    box_probe, continuity_experiment, continuity_holds, BoxProbeConfig, BoxProbeReport,
    ContinuityConfig, ContinuityPoint, ProbeKind, Stratum, LINE_PROBE_STEP,
};
pub use render::{center_colour, render_territories, Image};
pub use rigidity::{rigidity_experiment, rigidity_holds, RigidityConfig, RigidityPoint};
pub use tails::{
    default_radii, estimate, finite_values, fit_tails, survival_curve, tail_experiment,
    tail_samples, FitReport, Outcome, Process, TailConfig, TailEstimate, TailModel, DEFAULT_RADII,
    MIN_REPLICATES, MIN_SURVIVORS, TAIL_QUANTILE,
};
