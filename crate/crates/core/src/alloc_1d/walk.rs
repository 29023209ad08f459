//! Monte Carlo for the block events of a mean-zero random walk with
//! increments bounded below by `-1`.
//!
//! `A_k` is the event that `S_j > 1` for every `j` in `[2^(3k-1), 2^(3k))`
//! and `D_m` is the event that none of `A_1, ..., A_m` occurs.

use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::point_process::{replicate_seed, rng_from, IncrementLaw};
use crate::stats::{linear_fit, wilson, Z99};

/// Largest supported block index; the walk then runs for `2^15` steps.
pub const MAX_BLOCKS: u32 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkEstimate {
    pub replicates: u64,
    /// `survivors[m - 1]` counts walks in `D_m`.
    pub survivors: Vec<u64>,
    pub prob: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    /// `exp` of the least-squares slope of `ln P(D_m)` against `m`.
    pub theta: Option<f64>,
}

/// First block index `k <= m_max` whose event `A_k` occurs, or `m_max + 1`.
fn first_block_hit(law: &IncrementLaw, m_max: u32, seed: u64) -> u32 {
    let mut rng = rng_from(seed);
    let gaps = law.sampler();
    let mut s = 0.0;
    let mut j: u64 = 0;
    for k in 1..=m_max {
        let lo = 1u64 << (3 * k - 1);
        let hi = 1u64 << (3 * k);
        while j + 1 < lo {
            s += gaps.sample(&mut rng) - 1.0;
            j += 1;
        }
        let mut held = true;
        while j + 1 < hi {
            s += gaps.sample(&mut rng) - 1.0;
            j += 1;
            held &= s > 1.0;
        }
        if held {
            return k;
        }
    }
    m_max + 1
}

/// Estimates `P(D_m)` for `m = 1..=m_max` from walks whose increments are
/// `G - 1` with `G` drawn from the unit-mean, non-negative gap law `law`.
pub fn walk_event_sim(
    law: &IncrementLaw,
    m_max: u32,
    replicates: u64,
    seed: u64,
) -> Result<WalkEstimate> {
    law.validate_unit_mean()?;
    if m_max == 0 || m_max > MAX_BLOCKS {
        return invalid(format!(
            "block count must lie in 1..={MAX_BLOCKS}, got {m_max}"
        ));
    }
    if replicates == 0 {
        return invalid("at least one replicate required");
    }
    let hits: Vec<u64> = (0..replicates)
        .into_par_iter()
        .fold(
            || vec![0u64; m_max as usize + 2],
            |mut acc, i| {
                acc[first_block_hit(law, m_max, replicate_seed(seed, i)) as usize] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; m_max as usize + 2],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let survivors: Vec<u64> = (1..=m_max as usize)
        .map(|m| hits[m + 1..].iter().sum())
        .collect();
    let prob: Vec<f64> = survivors
        .iter()
        .map(|&c| c as f64 / replicates as f64)
        .collect();
    let (ci_lo, ci_hi) = survivors
        .iter()
        .map(|&c| wilson(c, replicates, Z99))
        .unzip();
    let pts: Vec<(f64, f64)> = prob
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(i, &p)| ((i + 1) as f64, p.ln()))
        .collect();
    let theta = (pts.len() >= 2).then(|| linear_fit(&pts).slope.exp());
    Ok(WalkEstimate {
        replicates,
        survivors,
        prob,
        ci_lo,
        ci_hi,
        theta,
    })
}
