//! Empirical tails of `X` and `R*` with binomial confidence bands, and the
//! power-law versus exponential comparison.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::{solve, Resolution};
use crate::bounds::Target;
use crate::error::{invalid, Result};
use crate::point_process::{
    palm_augment, replicate_seed, sample_poisson, sample_renewal_palm, IncrementLaw,
};
use crate::stats::{exponential_mle, linear_fit, pareto_mle, quantile, wilson, Z99};

/// Fewest replicates for which a tail estimate is produced.
pub const MIN_REPLICATES: u64 = 100;
/// Fewest surviving samples for a radius to enter a regression.
pub const MIN_SURVIVORS: u64 = 10;
/// Default number of radii in the survival grid.
pub const DEFAULT_RADII: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Process {
    Poisson,
    /// Palm renewal process with the given gap law (line only, `R*` only).
    Renewal {
        law: IncrementLaw,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailConfig {
    pub statistic: Target,
    pub d: usize,
    #[serde(rename = "L")]
    pub side: f64,
    /// Grid spacing; exact solving on the line when absent.
    pub eps: Option<f64>,
    pub alpha: f64,
    pub lambda: f64,
    pub replicates: u64,
    pub seed: u64,
    pub process: Process,
    /// Survival grid; an even grid up to the largest sample when absent.
    pub radii: Option<Vec<f64>>,
}

impl TailConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < MIN_REPLICATES {
            return invalid(format!(
                "need at least {MIN_REPLICATES} replicates, got {}",
                self.replicates
            ));
        }
        if !(self.alpha > 0.0 && self.lambda > 0.0) {
            return invalid("alpha and lambda must be positive");
        }
        Resolution::from_eps(self.eps).validate(self.d, self.side)?;
        if let Process::Renewal { law } = &self.process {
            law.validate_unit_mean()?;
            if self.d != 1 || self.statistic != Target::RStar {
                return invalid("renewal runs are one-dimensional R* runs");
            }
        }
        if let Some(r) = &self.radii {
            if r.is_empty() || r.windows(2).any(|w| !(w[1] > w[0])) || r[0] < 0.0 {
                return invalid("radii must be non-negative and strictly increasing");
            }
        }
        Ok(())
    }
}

/// One replicate's outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "value", rename_all = "snake_case")]
pub enum Outcome {
    Finite(f64),
    /// The origin site is unclaimed (`X` only).
    Infinite,
    /// The territory crosses the renewal seam and is not used.
    Excluded,
}

fn replicate(cfg: &TailConfig, i: u64) -> Result<Outcome> {
    let seed = replicate_seed(cfg.seed, i);
    let res = Resolution::from_eps(cfg.eps);
    let cs = match (&cfg.process, cfg.statistic) {
        (Process::Renewal { law }, _) => sample_renewal_palm(cfg.side / 2.0, *law, seed)?,
        (Process::Poisson, Target::RStar) => {
            palm_augment(&sample_poisson(cfg.d, cfg.side, cfg.lambda, seed)?)?
        }
        (Process::Poisson, Target::X) => sample_poisson(cfg.d, cfg.side, cfg.lambda, seed)?,
    };
    if cs.is_empty() {
        return Ok(Outcome::Infinite);
    }
    let sol = solve(&cs, cfg.alpha, res)?;
    Ok(match cfg.statistic {
        Target::X => sol.x().map_or(Outcome::Infinite, Outcome::Finite),
        Target::RStar if matches!(cfg.process, Process::Renewal { .. }) && sol.crosses_seam(0) => {
            Outcome::Excluded
        }
        Target::RStar => Outcome::Finite(sol.radius(0)),
    })
}

/// Raw outcomes of a tail run, in replicate order.
pub fn tail_samples(cfg: &TailConfig) -> Result<Vec<Outcome>> {
    cfg.validate()?;
    (0..cfg.replicates)
        .into_par_iter()
        .map(|i| replicate(cfg, i))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub statistic: Target,
    pub d: usize,
    #[serde(rename = "L")]
    pub side: f64,
    pub eps: Option<f64>,
    pub alpha: f64,
    pub lambda: f64,
    pub seed: u64,
    pub replicates: u64,
    /// Replicates entering the survival curve (finite outcomes).
    pub n: u64,
    pub infinite: u64,
    pub excluded: u64,
    pub radii: Vec<f64>,
    pub survivors: Vec<u64>,
    pub survival: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
}

/// Finite values of the outcomes.
pub fn finite_values(outcomes: &[Outcome]) -> Vec<f64> {
    outcomes
        .iter()
        .filter_map(|o| match o {
            Outcome::Finite(v) => Some(*v),
            _ => None,
        })
        .collect()
}

/// Evenly spaced radii from 0 to the largest value.
pub fn default_radii(values: &[f64], count: usize) -> Vec<f64> {
    let top = values.iter().copied().fold(0.0, f64::max);
    if top <= 0.0 {
        return vec![0.0];
    }
    (0..count)
        .map(|k| top * k as f64 / (count - 1) as f64)
        .collect()
}

/// `P(V > r)` per radius with 99% Wilson bands.
pub fn survival_curve(values: &[f64], radii: &[f64]) -> (Vec<u64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as u64;
    let mut survivors = Vec::with_capacity(radii.len());
    let mut survival = Vec::with_capacity(radii.len());
    let mut lo = Vec::with_capacity(radii.len());
    let mut hi = Vec::with_capacity(radii.len());
    for &r in radii {
        let k = (sorted.len() - sorted.partition_point(|&v| v <= r)) as u64;
        let (a, b) = wilson(k, n, Z99);
        survivors.push(k);
        survival.push(if n > 0 { k as f64 / n as f64 } else { 0.0 });
        lo.push(a);
        hi.push(b);
    }
    (survivors, survival, lo, hi)
}

pub fn estimate(cfg: &TailConfig, outcomes: &[Outcome]) -> TailEstimate {
    let values = finite_values(outcomes);
    let radii = cfg
        .radii
        .clone()
        .unwrap_or_else(|| default_radii(&values, DEFAULT_RADII));
    let (survivors, survival, ci_lo, ci_hi) = survival_curve(&values, &radii);
    let count = |pred: fn(&Outcome) -> bool| outcomes.iter().filter(|o| pred(o)).count() as u64;
    TailEstimate {
        statistic: cfg.statistic,
        d: cfg.d,
        side: cfg.side,
        eps: cfg.eps,
        alpha: cfg.alpha,
        lambda: cfg.lambda,
        seed: cfg.seed,
        replicates: cfg.replicates,
        n: values.len() as u64,
        infinite: count(|o| matches!(o, Outcome::Infinite)),
        excluded: count(|o| matches!(o, Outcome::Excluded)),
        radii,
        survivors,
        survival,
        ci_lo,
        ci_hi,
    }
}

/// Samples and estimate of a tail run.
pub fn tail_experiment(cfg: &TailConfig) -> Result<(Vec<Outcome>, TailEstimate)> {
    let outcomes = tail_samples(cfg)?;
    let est = estimate(cfg, &outcomes);
    Ok((outcomes, est))
}

impl TailEstimate {
    /// Writes rows `statistic,d,L,eps,alpha,lambda,r,survival,ci_lo,ci_hi,n`.
    /// The exact line solver is reported as `eps = 0`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "statistic",
            "d",
            "L",
            "eps",
            "alpha",
            "lambda",
            "r",
            "survival",
            "ci_lo",
            "ci_hi",
            "n",
        ])?;
        let stat = match self.statistic {
            Target::X => "X",
            Target::RStar => "R*",
        };
        for k in 0..self.radii.len() {
            w.write_record([
                stat.to_string(),
                self.d.to_string(),
                self.side.to_string(),
                self.eps.unwrap_or(0.0).to_string(),
                self.alpha.to_string(),
                self.lambda.to_string(),
                self.radii[k].to_string(),
                self.survival[k].to_string(),
                self.ci_lo[k].to_string(),
                self.ci_hi[k].to_string(),
                self.n.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Fraction of replicates with a finite outcome.
    pub fn finite_fraction(&self) -> f64 {
        self.n as f64 / (self.replicates - self.excluded).max(1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailModel {
    PowerLaw,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: TailModel,
    /// Pareto exponent (power law) or rate (exponential), by maximum
    /// likelihood above `x_min`.
    pub parameter: f64,
    /// Intercept of the least-squares line on transformed survival axes
    /// (log-log for the power law, log-linear for the exponential).
    pub intercept: f64,
    /// Slope of that line.
    pub ls_slope: f64,
    pub log_likelihood: f64,
    pub r2: f64,
    pub x_min: f64,
    pub n_tail: usize,
    pub preferred: bool,
}

/// Samples above this quantile form the fitted tail.
pub const TAIL_QUANTILE: f64 = 0.9;

/// Fits both tail models to the top decile and flags the one with the larger
/// likelihood. Radii cannot exceed half the window diagonal, so both models
/// are truncated there.
pub fn fit_tails(values: &[f64], est: &TailEstimate) -> Result<[FitReport; 2]> {
    let Some(x_min) = quantile(values, TAIL_QUANTILE) else {
        return invalid("no finite samples to fit");
    };
    if !(x_min > 0.0) {
        return invalid("tail threshold is zero; the tail is degenerate");
    }
    let x_max = est.side * (est.d as f64).sqrt() / 2.0;
    let (Some(p), Some(e)) = (
        pareto_mle(values, x_min, x_max),
        exponential_mle(values, x_min, x_max),
    ) else {
        return invalid("too few samples in the tail");
    };
    let pts: Vec<(f64, f64)> = est
        .radii
        .iter()
        .zip(&est.survivors)
        .zip(&est.survival)
        .filter(|((&r, &k), _)| r >= x_min && k >= MIN_SURVIVORS)
        .map(|((&r, _), &s)| (r, s))
        .collect();
    let line = |f: fn(f64) -> f64| {
        let t: Vec<(f64, f64)> = pts.iter().map(|&(r, s)| (f(r), s.ln())).collect();
        if t.len() >= 2 {
            linear_fit(&t)
        } else {
            crate::stats::LineFit {
                slope: f64::NAN,
                intercept: f64::NAN,
                r2: f64::NAN,
            }
        }
    };
    let ll = line(f64::ln);
    let sl = line(|r| r);
    let power_wins = p.log_likelihood > e.log_likelihood;
    Ok([
        FitReport {
            model: TailModel::PowerLaw,
            parameter: p.parameter,
            intercept: ll.intercept,
            ls_slope: ll.slope,
            log_likelihood: p.log_likelihood,
            r2: ll.r2,
            x_min,
            n_tail: p.n,
            preferred: power_wins,
        },
        FitReport {
            model: TailModel::Exponential,
            parameter: e.parameter,
            intercept: sl.intercept,
            ls_slope: sl.slope,
            log_likelihood: e.log_likelihood,
            r2: sl.r2,
            x_min,
            n_tail: e.n,
            preferred: !power_wins,
        },
    ])
}
