//! Perturbation studies: keep the centers in a box, resample the rest, and
//! measure how much of the allocation near the origin changes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::{solve, Resolution, Solved};
use crate::error::{invalid, not_applicable, Result};
use crate::geometry::signed;
use crate::point_process::{replicate_seed, resample_outside, sample_poisson, CenterSet};
use crate::stats::{wilson, Z99};

/// Spacing of the probe sites on the line.
pub const LINE_PROBE_STEP: f64 = 1e-3;

/// For each center of `base`, its index after `resample_outside(base, half)`
/// (kept centers come first, in order), or `None` if it was resampled away.
fn kept_ranks(base: &CenterSet, half: f64) -> Vec<Option<usize>> {
    let mut next = 0;
    (0..base.len())
        .map(|i| {
            base.in_box(i, half).then(|| {
                next += 1;
                next - 1
            })
        })
        .collect()
}

/// Mass of the probe sites whose owner differs between the base solution
/// and the resampled one.
fn changed_mass(
    base: &Solved,
    ranks: &[Option<usize>],
    other: &Solved,
    sites: &[(Vec<f64>, f64)],
) -> f64 {
    sites
        .iter()
        .filter(|(p, _)| {
            let before = base.owner_at(p).map(|c| ranks[c]);
            let after = other.owner_at(p);
            match (before, after) {
                (None, None) => false,
                (Some(Some(r)), Some(c)) => r != c,
                _ => true,
            }
        })
        .map(|s| s.1)
        .sum()
}

fn mean_band(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    // adding zero turns a negative-zero sum into zero
    let mean = xs.iter().sum::<f64>() / n + 0.0;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let half = Z99 * (var / n).sqrt();
    (mean, (mean - half).max(0.0), mean + half)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityConfig {
    pub d: usize,
    #[serde(rename = "L")]
    pub side: f64,
    pub eps: Option<f64>,
    pub alpha: f64,
    pub lambda: f64,
    /// Increasing half-sides of the kept box.
    pub halves: Vec<f64>,
    pub resamples: u64,
    pub seed: u64,
    /// Half-side of the probed box around the origin.
    pub probe_half: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityPoint {
    pub half: f64,
    /// Mean changed mass as a fraction of the probe box volume.
    pub changed_fraction: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub resamples: u64,
}

pub fn continuity_experiment(cfg: &ContinuityConfig) -> Result<Vec<ContinuityPoint>> {
    if cfg.halves.is_empty() || cfg.halves.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("box half-sides must be strictly increasing");
    }
    if cfg.resamples < 20 {
        return invalid(format!(
            "need at least 20 resamples per box, got {}",
            cfg.resamples
        ));
    }
    if !(cfg.probe_half > 0.0 && cfg.probe_half <= cfg.side / 2.0) {
        return invalid("probe box must fit in the window");
    }
    let res = Resolution::from_eps(cfg.eps);
    res.validate(cfg.d, cfg.side)?;
    let base_cs = sample_poisson(cfg.d, cfg.side, cfg.lambda, cfg.seed)?;
    let base = solve(&base_cs, cfg.alpha, res)?;
    let sites = base.probe_sites(cfg.probe_half, LINE_PROBE_STEP);
    let volume: f64 = sites.iter().map(|s| s.1).sum();
    cfg.halves
        .iter()
        .enumerate()
        .map(|(k, &half)| {
            let ranks = kept_ranks(&base_cs, half);
            let stream = replicate_seed(cfg.seed, k as u64 + 1);
            let masses: Vec<f64> = (0..cfg.resamples)
                .into_par_iter()
                .map(|r| -> Result<f64> {
                    let cs =
                        resample_outside(&base_cs, half, cfg.lambda, replicate_seed(stream, r))?;
                    let sol = solve(&cs, cfg.alpha, res)?;
                    Ok(changed_mass(&base, &ranks, &sol, &sites) / volume)
                })
                .collect::<Result<_>>()?;
            let (changed_fraction, ci_lo, ci_hi) = mean_band(&masses);
            Ok(ContinuityPoint {
                half,
                changed_fraction,
                ci_lo,
                ci_hi,
                resamples: cfg.resamples,
            })
        })
        .collect()
}

/// Changed mass never rises beyond the bands, and ends below `threshold`.
pub fn continuity_holds(points: &[ContinuityPoint], threshold: f64) -> bool {
    points.windows(2).all(|w| w[1].ci_lo <= w[0].ci_hi)
        && points
            .last()
            .is_some_and(|p| p.changed_fraction < threshold)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    /// Centers in the box fail to sate inside the box.
    Replete,
    /// Sites in the box change owner.
    Decisive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxProbeConfig {
    pub kind: ProbeKind,
    pub d: usize,
    #[serde(rename = "L")]
    pub side: f64,
    pub eps: Option<f64>,
    pub alpha: f64,
    pub lambda: f64,
    /// Half-side `M` of the probed box `[-M, M)^d`.
    pub half: f64,
    pub resamples: u64,
    pub seed: u64,
    /// Width of the boundary layer used to stratify the failures.
    pub edge_band: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    /// Failing centers, or failing mass for the decisive probe.
    pub failures: f64,
    /// Probed centers, or probed mass.
    pub trials: f64,
}

impl Stratum {
    pub fn rate(&self) -> f64 {
        if self.trials > 0.0 {
            self.failures / self.trials
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxProbeReport {
    pub kind: ProbeKind,
    pub half: f64,
    pub resamples: u64,
    pub all: Stratum,
    /// Within `edge_band` of the box boundary.
    pub edge: Stratum,
    pub central: Stratum,
    /// Failure rate with a 99% band (Wilson for centers, normal for mass).
    pub rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Expected failures (or failing mass) per resample per unit volume.
    pub per_volume: f64,
}

fn depth(p: &[f64], side: f64, half: f64) -> f64 {
    p.iter()
        .map(|&x| half - signed(x, side).abs())
        .fold(f64::INFINITY, f64::min)
}

pub fn box_probe(cfg: &BoxProbeConfig) -> Result<BoxProbeReport> {
    match cfg.kind {
        ProbeKind::Replete if cfg.lambda * cfg.alpha > 1.0 => {
            return not_applicable("the replete probe needs lambda * alpha <= 1")
        }
        ProbeKind::Decisive if cfg.lambda < 1.0 || cfg.alpha != 1.0 => {
            return not_applicable("the decisive probe needs lambda >= 1 and alpha = 1")
        }
        _ => {}
    }
    if !(cfg.half > 0.0 && cfg.half <= cfg.side / 2.0) || cfg.resamples == 0 {
        return invalid("box must fit in the window and resamples must be positive");
    }
    let res = Resolution::from_eps(cfg.eps);
    res.validate(cfg.d, cfg.side)?;
    let base_cs = sample_poisson(cfg.d, cfg.side, cfg.lambda, cfg.seed)?;
    let stream = replicate_seed(cfg.seed, 1);
    let volume = (2.0 * cfg.half).powi(cfg.d as i32);
    let zero = Stratum {
        failures: 0.0,
        trials: 0.0,
    };
    let add = |a: Stratum, b: Stratum| Stratum {
        failures: a.failures + b.failures,
        trials: a.trials + b.trials,
    };

    let (edge, central, samples) = match cfg.kind {
        ProbeKind::Replete => {
            let kept: Vec<usize> = (0..base_cs.len())
                .filter(|&i| base_cs.in_box(i, cfg.half))
                .collect();
            let per: Vec<(Stratum, Stratum)> = (0..cfg.resamples)
                .into_par_iter()
                .map(|r| -> Result<_> {
                    let cs = resample_outside(
                        &base_cs,
                        cfg.half,
                        cfg.lambda,
                        replicate_seed(stream, r),
                    )?;
                    let sol = solve(&cs, cfg.alpha, res)?;
                    let (mut e, mut c) = (zero, zero);
                    for (rank, &i) in kept.iter().enumerate() {
                        let fail = !sol.is_sated(rank) || !sol.territory_within(rank, cfg.half);
                        let s = Stratum {
                            failures: f64::from(u8::from(fail)),
                            trials: 1.0,
                        };
                        if depth(base_cs.point(i), cfg.side, cfg.half) < cfg.edge_band {
                            e = add(e, s);
                        } else {
                            c = add(c, s);
                        }
                    }
                    Ok((e, c))
                })
                .collect::<Result<_>>()?;
            let edge = per.iter().fold(zero, |a, p| add(a, p.0));
            let central = per.iter().fold(zero, |a, p| add(a, p.1));
            (edge, central, None)
        }
        ProbeKind::Decisive => {
            let base = solve(&base_cs, cfg.alpha, res)?;
            let ranks = kept_ranks(&base_cs, cfg.half);
            let sites = base.probe_sites(cfg.half, LINE_PROBE_STEP);
            let (edge_sites, central_sites): (Vec<_>, Vec<_>) = sites
                .into_iter()
                .partition(|(p, _)| depth(p, cfg.side, cfg.half) < cfg.edge_band);
            let mass = |s: &[(Vec<f64>, f64)]| s.iter().map(|x| x.1).sum::<f64>();
            let per: Vec<(f64, f64)> = (0..cfg.resamples)
                .into_par_iter()
                .map(|r| -> Result<_> {
                    let cs = resample_outside(
                        &base_cs,
                        cfg.half,
                        cfg.lambda,
                        replicate_seed(stream, r),
                    )?;
                    let sol = solve(&cs, cfg.alpha, res)?;
                    Ok((
                        changed_mass(&base, &ranks, &sol, &edge_sites),
                        changed_mass(&base, &ranks, &sol, &central_sites),
                    ))
                })
                .collect::<Result<_>>()?;
            let n = cfg.resamples as f64;
            let edge = Stratum {
                failures: per.iter().map(|p| p.0).sum(),
                trials: n * mass(&edge_sites),
            };
            let central = Stratum {
                failures: per.iter().map(|p| p.1).sum(),
                trials: n * mass(&central_sites),
            };
            let fractions: Vec<f64> = per
                .iter()
                .map(|p| (p.0 + p.1) / (mass(&edge_sites) + mass(&central_sites)))
                .collect();
            (edge, central, Some(fractions))
        }
    };
    let all = add(edge, central);
    let (rate, ci_lo, ci_hi) = match samples {
        None => {
            let (lo, hi) = wilson(all.failures as u64, all.trials as u64, Z99);
            (all.rate(), lo, hi)
        }
        Some(fr) => mean_band(&fr),
    };
    Ok(BoxProbeReport {
        kind: cfg.kind,
        half: cfg.half,
        resamples: cfg.resamples,
        all,
        edge,
        central,
        rate,
        ci_lo,
        ci_hi,
        per_volume: all.failures / (cfg.resamples as f64 * volume),
    })
}
