//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! status 1 if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use alloclab::alloc_1d::{
    build_f, check_measure_preserving, check_same_level, level_residuals, radius_bound_from_f,
    solve_1d, walk_event_sim,
};
use alloclab::alloc_grid::solve_grid;
use alloclab::bounds::{bound_1d, bound_extreme_alpha, walk_theta, Target, CRITICAL_MOMENT};
use alloclab::experiments::{
    continuity_experiment, continuity_holds, finite_values, fit_tails, identity_experiment,
    rigidity_experiment, rigidity_holds, solve, tail_experiment, ContinuityConfig, IdentityConfig,
    Outcome, Process, Resolution, RigidityConfig, Solved, TailConfig, TailEstimate, TailModel,
};
use alloclab::geometry::Domain;
use alloclab::point_process::{palm_augment, replicate_seed, sample_poisson, IncrementLaw};
use alloclab::Result;
use rayon::prelude::*;

const SEED: u64 = 20_240_601;

const STABILITY_BUDGET: Duration = Duration::from_secs(600);
const PHASE_TOL: f64 = 0.02;
const KS_LEVEL: f64 = 0.01;
const ORDERING_TOL: f64 = 0.01;
const CONTINUITY_THRESHOLD: f64 = 0.01;
const THETA_MAX: f64 = 0.99;
const LEMMA_TOL: f64 = 1e-9;
const CROSS_TOL: f64 = 0.01;

/// Window for the non-critical line runs: far above the territory diameters.
const LINE_SIDE: f64 = 500.0;
/// Window for the critical line runs, where tails are heavy.
const CRITICAL_SIDE: f64 = 2000.0;

type Verdict = Result<(bool, String)>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

fn tails(
    statistic: Target,
    alpha: f64,
    side: f64,
    replicates: u64,
    seed: u64,
) -> Result<(Vec<Outcome>, TailEstimate)> {
    tail_experiment(&TailConfig {
        statistic,
        d: 1,
        side,
        eps: None,
        alpha,
        lambda: 1.0,
        replicates,
        seed,
        process: Process::Poisson,
        radii: None,
    })
}

/// Radii with at least ten survivors where the lower band exceeds `bound`.
fn bound_violations(
    est: &TailEstimate,
    bound: impl Fn(f64) -> Result<f64>,
) -> Result<(usize, usize)> {
    let (mut checked, mut bad) = (0, 0);
    for k in 0..est.radii.len() {
        if est.survivors[k] >= 10 {
            checked += 1;
            if est.ci_lo[k] > bound(est.radii[k])? {
                bad += 1;
            }
        }
    }
    Ok((checked, bad))
}

fn stability() -> Verdict {
    let start = Instant::now();
    let mut runs = 0;
    let mut unstable = Vec::new();
    for (d, side) in [(1usize, 200.0), (2, 20.0)] {
        let eps = 0.05;
        let dom = Domain::new(d, side, eps)?;
        let delta = 2.0 * eps * (d as f64).sqrt();
        for alpha in [0.8, 1.0, 1.2] {
            let bad: Vec<u64> = (0..50u64)
                .into_par_iter()
                .map(|i| -> Result<Option<u64>> {
                    let cs = sample_poisson(d, side, 1.0, replicate_seed(SEED ^ 1, i))?;
                    let a = solve_grid(&cs, alpha, &dom)?;
                    Ok((!a.check_stability(delta)?.is_empty()).then_some(i))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .collect();
            runs += 50;
            unstable.extend(bad.into_iter().map(|i| (d, alpha, i)));
        }
    }
    let elapsed = start.elapsed();
    Ok((
        unstable.is_empty() && elapsed <= STABILITY_BUDGET,
        format!(
            "{runs} runs, unstable {unstable:?}, {:.0} s (budget {} s)",
            elapsed.as_secs_f64(),
            STABILITY_BUDGET.as_secs()
        ),
    ))
}

fn phase_fractions() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (d, side, res) in [
        (1usize, CRITICAL_SIDE, Resolution::Exact),
        (2, 40.0, Resolution::Grid { eps: 0.1 }),
    ] {
        for alpha in [0.5, 0.8, 1.0] {
            let fractions: Vec<f64> = (0..20u64)
                .into_par_iter()
                .map(|i| -> Result<f64> {
                    let cs = sample_poisson(d, side, 1.0, replicate_seed(SEED ^ 2, i))?;
                    Ok(match solve(&cs, alpha, res)? {
                        Solved::Line(a) => a.claimed_volume() / side,
                        Solved::Grid(a) => a.phase_stats().claimed_fraction,
                    })
                })
                .collect::<Result<_>>()?;
            let mean = fractions.iter().sum::<f64>() / fractions.len() as f64;
            ok &= (mean - alpha).abs() <= PHASE_TOL;
            parts.push(format!("d={d} alpha={alpha}: {mean:.4}"));
        }
    }
    Ok((
        ok,
        format!(
            "mean claimed fraction over 20 seeds, target alpha +- {PHASE_TOL}; {}",
            parts.join(", ")
        ),
    ))
}

fn subcritical_bound(est: &TailEstimate) -> Verdict {
    let (checked, bad) = bound_violations(est, |r| bound_1d(0.5, r, Target::RStar))?;
    Ok((
        bad == 0 && checked > 0,
        format!("alpha=0.5, {} replicates: {bad} of {checked} radii with >= 10 survivors exceed 8 e^(-0.386 r)", est.n),
    ))
}

fn extreme_alpha_bound() -> Verdict {
    let (_, est) = tails(Target::X, 3.0, LINE_SIDE, 10_000, SEED ^ 4)?;
    let (checked, bad) = bound_violations(&est, |r| bound_extreme_alpha(1, 3.0, r, Target::X))?;
    Ok((
        bad == 0 && checked > 0,
        format!(
            "alpha=3, {} replicates: {bad} of {checked} radii exceed the explicit bound",
            est.n
        ),
    ))
}

fn critical_dichotomy(subcritical: &(Vec<Outcome>, TailEstimate)) -> Verdict {
    let critical = tails(Target::RStar, 1.0, CRITICAL_SIDE, 10_000, SEED ^ 5)?;
    let supercritical = tails(Target::RStar, 2.0, LINE_SIDE, 10_000, SEED ^ 5)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (alpha, (outcomes, est)) in [(1.0, &critical), (0.5, subcritical), (2.0, &supercritical)] {
        let fits = fit_tails(&finite_values(outcomes), est)?;
        let [power, exp] = &fits;
        let preferred = if power.preferred {
            TailModel::PowerLaw
        } else {
            TailModel::Exponential
        };
        if alpha == 1.0 {
            ok &= preferred == TailModel::PowerLaw && power.parameter >= CRITICAL_MOMENT;
            parts.push(format!(
                "alpha=1: power law preferred {} (log-likelihood {:.1} vs {:.1}), exponent {:.3} (floor {:.4})",
                power.preferred, power.log_likelihood, exp.log_likelihood, power.parameter, CRITICAL_MOMENT
            ));
        } else {
            ok &= preferred == TailModel::Exponential;
            parts.push(format!(
                "alpha={alpha}: exponential preferred {} ({:.1} vs {:.1})",
                exp.preferred, exp.log_likelihood, power.log_likelihood
            ));
        }
    }
    Ok((ok, parts.join("; ")))
}

fn identity() -> Verdict {
    let rep = identity_experiment(&IdentityConfig {
        d: 1,
        side: LINE_SIDE,
        eps: None,
        alpha: 0.9,
        lambda: 1.0,
        replicates: 5000,
        seed: SEED ^ 6,
        grid: 100,
    })?;
    let ok = rep.ks_identity.p_value > KS_LEVEL && rep.ordering.violation_fraction <= ORDERING_TOL;
    Ok((
        ok,
        format!(
            "claimed {:.4}; owner radius given claimed vs R*: KS {:.4}, p {:.3}; X given claimed vs R* ordering violated at {:.2}% of radii; (X given claimed vs R*: KS {:.3}, p {:.2e})",
            rep.claimed_fraction,
            rep.ks_identity.statistic,
            rep.ks_identity.p_value,
            100.0 * rep.ordering.violation_fraction,
            rep.ks_x.statistic,
            rep.ks_x.p_value,
        ),
    ))
}

fn rigidity() -> Verdict {
    let points = rigidity_experiment(&RigidityConfig {
        d: 1,
        side: 1000.0,
        eps: None,
        alphas: vec![1.4, 1.2, 1.1, 1.05],
        replicates: 2000,
        seed: SEED ^ 7,
    })?;
    let desc: Vec<String> = points
        .iter()
        .map(|p| {
            format!(
                "{}: {:.4} [{:.4}, {:.4}]",
                p.alpha, p.frequency, p.ci_lo, p.ci_hi
            )
        })
        .collect();
    Ok((
        rigidity_holds(&points),
        format!("unsated Palm frequency {}", desc.join(", ")),
    ))
}

fn continuity() -> Verdict {
    let points = continuity_experiment(&ContinuityConfig {
        d: 2,
        side: 20.0,
        eps: Some(0.1),
        alpha: 1.0,
        lambda: 1.0,
        halves: vec![2.0, 3.0, 5.0, 8.0],
        resamples: 20,
        seed: SEED ^ 8,
        probe_half: 1.0,
    })?;
    let desc: Vec<String> = points
        .iter()
        .map(|p| {
            format!(
                "{}: {:.4} [{:.4}, {:.4}]",
                p.half, p.changed_fraction, p.ci_lo, p.ci_hi
            )
        })
        .collect();
    Ok((
        continuity_holds(&points, CONTINUITY_THRESHOLD),
        format!(
            "changed fraction of Q(1) by kept half-side {}; threshold {CONTINUITY_THRESHOLD}",
            desc.join(", ")
        ),
    ))
}

fn walk() -> Verdict {
    let est = walk_event_sim(&IncrementLaw::exponential(), 4, 100_000, SEED ^ 9)?;
    let decreasing = est.prob.windows(2).all(|w| w[1] < w[0]);
    let theta = est.theta.unwrap_or(f64::NAN);
    Ok((
        decreasing && theta <= THETA_MAX,
        format!(
            "P(D_m) {:?}, fitted ratio {theta:.4} (limit {THETA_MAX}, asymptotic bound {:.5})",
            est.prob
                .iter()
                .map(|p| (p * 1e4).round() / 1e4)
                .collect::<Vec<_>>(),
            walk_theta()
        ),
    ))
}

fn lemmas() -> Verdict {
    let side = 1000.0;
    let rows: Vec<(f64, f64, f64, Option<bool>)> = (0..50u64)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let cs = palm_augment(&sample_poisson(1, side, 1.0, replicate_seed(SEED ^ 10, i))?)?;
            let alloc = solve_1d(&cs, 1.0)?;
            let f = build_f(&cs)?;
            let mut defect: f64 = 0.0;
            for c in 0..alloc.len() {
                match check_measure_preserving(&alloc, &f, c) {
                    Ok(v) => defect = defect.max(v),
                    Err(alloclab::Error::NotApplicable(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            let bound =
                radius_bound_from_f(&f, side / 4.0)?.map(|b| b + LEMMA_TOL >= alloc.radius(0));
            Ok((
                check_same_level(&alloc, &f),
                defect,
                level_residuals(&alloc, &f),
                bound,
            ))
        })
        .collect::<Result<_>>()?;
    let level = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let defect = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let resid = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let bounds = rows.iter().filter(|r| r.3.is_some()).count();
    let bound_fail = rows.iter().filter(|r| r.3 == Some(false)).count();
    Ok((
        level == 0.0 && defect <= LEMMA_TOL && resid <= LEMMA_TOL && bound_fail == 0,
        format!(
            "50 seeds: same-level gap {level:e}, measure defect {defect:.2e}, level residual {resid:.2e}, radius bound below R(0) on {bound_fail} of {bounds} replicates where it exists"
        ),
    ))
}

fn cross_solver() -> Verdict {
    let side = 200.0;
    let dom = Domain::new(1, side, 1e-3)?;
    let alphas = [0.5, 0.8, 1.0, 1.2, 2.0];
    let worst: Vec<f64> = (0..50u64)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let cs = sample_poisson(1, side, 1.0, replicate_seed(SEED ^ 11, i))?;
            let alpha = alphas[i as usize % alphas.len()];
            let exact = solve_1d(&cs, alpha)?;
            let grid = solve_grid(&cs, alpha, &dom)?;
            let differ = (0..dom.cell_count())
                .filter(|&cell| exact.owner_at(dom.cell_center(cell)[0]) != grid.center_of(cell))
                .count();
            Ok(differ as f64 / dom.cell_count() as f64)
        })
        .collect::<Result<_>>()?;
    let max = worst.iter().copied().fold(0.0, f64::max);
    let mean = worst.iter().sum::<f64>() / worst.len() as f64;
    Ok((
        max <= CROSS_TOL,
        format!(
            "50 seeds at eps=1e-3: disagreement max {:.4}%, mean {:.4}%",
            100.0 * max,
            100.0 * mean
        ),
    ))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let subcritical = tails(Target::RStar, 0.5, LINE_SIDE, 10_000, SEED ^ 3);
    let criteria: Vec<Criterion> = vec![
        ("stability suite", Box::new(stability)),
        ("phase fractions", Box::new(phase_fractions)),
        (
            "subcritical explicit bound",
            Box::new(|| subcritical_bound(&subcritical.as_ref().map_err(clone_err)?.1)),
        ),
        ("extreme appetite bound", Box::new(extreme_alpha_bound)),
        (
            "critical dichotomy",
            Box::new(|| critical_dichotomy(subcritical.as_ref().map_err(clone_err)?)),
        ),
        ("distributional identity", Box::new(identity)),
        ("rigidity", Box::new(rigidity)),
        ("continuity", Box::new(continuity)),
        ("walk lemma", Box::new(walk)),
        ("structural lemmas", Box::new(lemmas)),
        ("cross-solver oracle", Box::new(cross_solver)),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = match check() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!ok);
        println!(
            "{} criterion {:>2} ({name}): {detail} [{:.1} s]",
            if ok { "PASS" } else { "FAIL" },
            n + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed in {:.0} s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn clone_err(e: &alloclab::Error) -> alloclab::Error {
    alloclab::Error::InvalidInput(e.to_string())
}
