//! Stable allocation of Lebesgue measure to random point configurations.
//!
//! Every site of a d-dimensional torus window is matched to a center of a
//! point configuration so that no site/center pair would both rather be
//! matched to each other; each center accepts at most a volume `alpha`
//! (its appetite). The crate provides:
//!
//! * [`geometry`]: torus metric, ball volumes and the cell grid;
//! * [`point_process`]: Poisson, Palm, renewal and coupled samplers;
//! * [`alloc_grid`]: the discretised deferred-acceptance solver and the
//!   statistics read off an allocation (X, territory radii, phase fractions);
//! * [`alloc_1d`]: the exact one-dimensional solver and the sawtooth
//!   function `F` with its structural certificates;
//! * [`bounds`]: closed-form tail bounds for overlaying on simulations;
//! * [`experiments`]: replicated Monte Carlo studies and artifact writers.

// `!(x > 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alloc_1d;
pub mod alloc_grid;
pub mod bounds;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod point_process;
pub mod stats;

pub use error::{Error, Result};
