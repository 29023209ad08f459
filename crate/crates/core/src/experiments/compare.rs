//! The site/center comparison: for `lambda * alpha <= 1`, the radius of the
//! territory containing the origin, given that the origin is claimed, has
//! the law of `R*`; and `X` is dominated by it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::{solve, Resolution};
use super::tails::survival_curve;
use crate::error::{invalid, Result};
use crate::point_process::{palm_augment, replicate_seed, sample_poisson, splitmix64};
use crate::stats::{ks_two_sample, KsResult};

/// Seed offset separating the Palm stream from the plain stream.
const PALM_STREAM: u64 = 0x5041_4c4d;

/// Values closer than this are the same observation. Radii have atoms
/// (a lone territory has radius exactly `alpha / 2` on the line) and the
/// solvers reach them with rounding noise, which would otherwise split ties.
pub const TIE_RESOLUTION: f64 = 1e-8;

fn snap(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            if x.is_finite() {
                (x / TIE_RESOLUTION).round() * TIE_RESOLUTION
            } else {
                x
            }
        })
        .collect()
}

/// Two-sample Kolmogorov-Smirnov comparison, on values snapped to
/// [`TIE_RESOLUTION`].
pub fn distribution_compare(a: &[f64], b: &[f64]) -> KsResult {
    ks_two_sample(&snap(a), &snap(b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    pub radii: Vec<f64>,
    /// Radii where the lower band of `P(a > r)` exceeds the upper band of
    /// `P(b > r)`.
    pub violations: Vec<f64>,
    pub violation_fraction: f64,
}

/// Checks `P(a > r) <= P(b > r)` on `radii`, up to 99% Wilson bands.
pub fn ordering_violations(a: &[f64], b: &[f64], radii: &[f64]) -> OrderingReport {
    let (_, _, a_lo, _) = survival_curve(a, radii);
    let (_, _, _, b_hi) = survival_curve(b, radii);
    let violations: Vec<f64> = radii
        .iter()
        .enumerate()
        .filter(|&(k, _)| a_lo[k] > b_hi[k])
        .map(|(_, &r)| r)
        .collect();
    let violation_fraction = violations.len() as f64 / radii.len().max(1) as f64;
    OrderingReport {
        radii: radii.to_vec(),
        violations,
        violation_fraction,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityConfig {
    pub d: usize,
    #[serde(rename = "L")]
    pub side: f64,
    pub eps: Option<f64>,
    pub alpha: f64,
    pub lambda: f64,
    pub replicates: u64,
    pub seed: u64,
    /// Number of radii in the ordering grid.
    pub grid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub claimed_fraction: f64,
    /// `X` on claimed replicates.
    pub x_claimed: Vec<f64>,
    /// Radius of the territory containing the origin, on claimed replicates.
    pub owner_radius: Vec<f64>,
    /// Palm radius, from an independent stream.
    pub r_star: Vec<f64>,
    /// Owner radius given claimed versus `R*`: the identity.
    pub ks_identity: KsResult,
    /// `X` given claimed versus `R*`: only an ordering is expected.
    pub ks_x: KsResult,
    pub ordering: OrderingReport,
}

pub fn identity_experiment(cfg: &IdentityConfig) -> Result<IdentityReport> {
    if cfg.lambda * cfg.alpha > 1.0 {
        return invalid("the comparison needs lambda * alpha <= 1");
    }
    if cfg.replicates == 0 || cfg.grid < 2 {
        return invalid("need replicates and at least two grid radii");
    }
    let res = Resolution::from_eps(cfg.eps);
    res.validate(cfg.d, cfg.side)?;
    let palm_base = splitmix64(cfg.seed ^ PALM_STREAM);
    let rows: Vec<(Option<(f64, f64)>, f64)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let plain = sample_poisson(cfg.d, cfg.side, cfg.lambda, replicate_seed(cfg.seed, i))?;
            let claimed = if plain.is_empty() {
                None
            } else {
                let sol = solve(&plain, cfg.alpha, res)?;
                sol.x()
                    .map(|x| (x, sol.origin_owner_radius().expect("claimed origin")))
            };
            let palm = palm_augment(&sample_poisson(
                cfg.d,
                cfg.side,
                cfg.lambda,
                replicate_seed(palm_base, i),
            )?)?;
            let r = solve(&palm, cfg.alpha, res)?.radius(0);
            Ok((claimed, r))
        })
        .collect::<Result<_>>()?;
    let x_claimed: Vec<f64> = rows.iter().filter_map(|r| r.0.map(|c| c.0)).collect();
    let owner_radius: Vec<f64> = rows.iter().filter_map(|r| r.0.map(|c| c.1)).collect();
    let r_star: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let top = r_star
        .iter()
        .chain(&owner_radius)
        .copied()
        .fold(0.0, f64::max);
    let radii: Vec<f64> = (0..cfg.grid)
        .map(|k| top * k as f64 / (cfg.grid - 1) as f64)
        .collect();
    Ok(IdentityReport {
        claimed_fraction: x_claimed.len() as f64 / cfg.replicates as f64,
        ks_identity: distribution_compare(&owner_radius, &r_star),
        ks_x: distribution_compare(&x_claimed, &r_star),
        ordering: ordering_violations(&x_claimed, &r_star, &radii),
        x_claimed,
        owner_radius,
        r_star,
    })
}
