//! Satiation of the Palm center as the appetite decreases to one.
//!
//! Intensity one with appetite `alpha` is a rescaling of intensity `alpha`
//! with appetite one, so every appetite is run at appetite one on a nested
//! family of Poisson layers sharing their lower-intensity points.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::{solve, Resolution};
use crate::error::{invalid, Result};
use crate::point_process::{palm_augment, replicate_seed, sample_nested};
use crate::stats::{wilson, Z99};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityConfig {
    pub d: usize,
    #[serde(rename = "L")]
    pub side: f64,
    pub eps: Option<f64>,
    /// Strictly decreasing appetites, all above one.
    pub alphas: Vec<f64>,
    pub replicates: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityPoint {
    pub alpha: f64,
    pub unsated: u64,
    pub n: u64,
    pub frequency: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

pub fn rigidity_experiment(cfg: &RigidityConfig) -> Result<Vec<RigidityPoint>> {
    if cfg.alphas.is_empty() || cfg.alphas.iter().any(|&a| !(a > 1.0)) {
        return invalid("rigidity appetites must all exceed 1");
    }
    if cfg.alphas.windows(2).any(|w| !(w[1] < w[0])) {
        return invalid("rigidity appetites must be strictly decreasing");
    }
    if cfg.replicates == 0 {
        return invalid("need at least one replicate");
    }
    let res = Resolution::from_eps(cfg.eps);
    res.validate(cfg.d, cfg.side)?;
    let rates: Vec<f64> = cfg.alphas.iter().rev().copied().collect();
    let k = rates.len();
    let counts = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| -> Result<Vec<u64>> {
            let layers = sample_nested(cfg.d, cfg.side, &rates, replicate_seed(cfg.seed, i))?;
            layers
                .iter()
                .rev()
                .map(|layer| {
                    Ok(u64::from(
                        !solve(&palm_augment(layer)?, 1.0, res)?.is_sated(0),
                    ))
                })
                .collect()
        })
        .try_reduce(
            || vec![0; k],
            |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()),
        )?;
    Ok(cfg
        .alphas
        .iter()
        .zip(counts)
        .map(|(&alpha, unsated)| {
            let (ci_lo, ci_hi) = wilson(unsated, cfg.replicates, Z99);
            RigidityPoint {
                alpha,
                unsated,
                n: cfg.replicates,
                frequency: unsated as f64 / cfg.replicates as f64,
                ci_lo,
                ci_hi,
            }
        })
        .collect())
}

/// True when the frequencies never rise beyond their bands and the last is
/// below half the first.
pub fn rigidity_holds(points: &[RigidityPoint]) -> bool {
    let monotone = points.windows(2).all(|w| w[1].ci_lo <= w[0].ci_hi);
    let decay = match (points.first(), points.last()) {
        (Some(a), Some(b)) => b.frequency < 0.5 * a.frequency,
        _ => false,
    };
    monotone && decay
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(alphas: Vec<f64>) -> RigidityConfig {
        RigidityConfig {
            d: 1,
            side: 200.0,
            eps: None,
            alphas,
            replicates: 100,
            seed: 2,
        }
    }

    #[test]
    fn rejects_bad_appetites() {
        assert!(rigidity_experiment(&cfg(vec![1.2, 1.0])).is_err());
        assert!(rigidity_experiment(&cfg(vec![1.1, 1.2])).is_err());
    }

    #[test]
    fn huge_appetite_leaves_center_unsated() {
        // appetite equal to the window volume: only about one center in
        // alpha can be sated
        let pts = rigidity_experiment(&cfg(vec![200.0])).unwrap();
        assert!(pts[0].frequency >= 0.95);
    }

    #[test]
    fn frequencies_fall_toward_one() {
        let pts = rigidity_experiment(&cfg(vec![2.0, 1.1])).unwrap();
        assert!(pts[1].frequency < pts[0].frequency);
    }
}
