use alloclab::alloc_1d::{
    build_f, check_measure_preserving, check_same_level, level_residuals, radius_bound_from_f,
    solve_1d,
};
use alloclab::alloc_grid::solve_grid;
use alloclab::bounds::{Target, CRITICAL_MOMENT};
use alloclab::experiments::{
    finite_values, fit_tails, tail_experiment, Process, TailConfig, TailModel,
};
use alloclab::geometry::Domain;
use alloclab::point_process::{palm_augment, sample_poisson, IncrementLaw};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// `F(t) - F(s) = N(s, t] - (t - s)` against a direct count of the jumps.
    #[test]
    fn f_increments_count_centers(seed in any::<u64>(), pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 32)) {
        let cs = sample_poisson(1, 80.0, 1.0, seed).unwrap();
        prop_assume!(!cs.is_empty());
        let f = build_f(&cs).unwrap();
        let (lo, hi) = f.window();
        for (u, v) in pairs {
            let (s, t) = (lo + u.min(v) * (hi - lo), lo + u.max(v) * (hi - lo));
            let n = f.jumps().iter().filter(|&&j| s < j && j <= t).count() as f64;
            prop_assert!((f.value(t) - f.value(s) - (n - (t - s))).abs() < TOL);
        }
    }

    /// At the critical appetite the structural lemmas certify every exact
    /// solution, and the radius bound read off the path dominates the
    /// measured radius.
    #[test]
    fn lemmas_certify_exact_solutions(seed in any::<u64>(), side in 50.0f64..300.0) {
        let cs = palm_augment(&sample_poisson(1, side, 1.0, seed).unwrap()).unwrap();
        let alloc = solve_1d(&cs, 1.0).unwrap();
        let f = build_f(&cs).unwrap();
        prop_assert_eq!(check_same_level(&alloc, &f), 0.0);
        prop_assert!(level_residuals(&alloc, &f) <= TOL);
        for c in 0..alloc.len() {
            if let Ok(defect) = check_measure_preserving(&alloc, &f, c) {
                prop_assert!(defect <= TOL, "center {} defect {}", c, defect);
            }
        }
        if let Some(bound) = radius_bound_from_f(&f, side / 4.0).unwrap() {
            prop_assert!(bound + TOL >= alloc.radius(0));
        }
    }

    #[test]
    fn exact_and_grid_solvers_agree(seed in any::<u64>(), alpha in 0.3f64..2.0) {
        let side = 60.0;
        let cs = sample_poisson(1, side, 1.0, seed).unwrap();
        prop_assume!(!cs.is_empty());
        let exact = solve_1d(&cs, alpha).unwrap();
        let dom = Domain::new(1, side, 1e-3).unwrap();
        let grid = solve_grid(&cs, alpha, &dom).unwrap();
        let differ = (0..dom.cell_count())
            .filter(|&cell| exact.owner_at(dom.cell_center(cell)[0]) != grid.center_of(cell))
            .count() as f64
            * dom.cell_volume();
        prop_assert!(differ <= 0.01 * side, "disagreement {}", differ);
    }
}

/// The radius bound dominates on every Palm sample where it exists.
#[test]
fn radius_bound_dominates_at_criticality() {
    let mut checked = 0;
    for seed in 0..100 {
        let cs = palm_augment(&sample_poisson(1, 400.0, 1.0, seed).unwrap()).unwrap();
        let alloc = solve_1d(&cs, 1.0).unwrap();
        let f = build_f(&cs).unwrap();
        if let Some(bound) = radius_bound_from_f(&f, 100.0).unwrap() {
            assert!(
                bound + TOL >= alloc.radius(0),
                "seed {seed}: {bound} < {}",
                alloc.radius(0)
            );
            checked += 1;
        }
    }
    // the bound is absent when the path stays nonnegative up to the limit
    assert!(checked >= 60, "{checked}");
}

/// Palm renewal samples at the critical appetite: heavy tail with slope at
/// least the critical moment, and the power law beats the exponential.
#[test]
fn renewal_tails_are_heavy() {
    let cfg = TailConfig {
        statistic: Target::RStar,
        d: 1,
        side: 1000.0,
        eps: None,
        alpha: 1.0,
        lambda: 1.0,
        replicates: 2000,
        seed: 12,
        process: Process::Renewal {
            law: IncrementLaw::uniform_0_2(),
        },
        radii: None,
    };
    let (outcomes, est) = tail_experiment(&cfg).unwrap();
    assert!(est.survival.windows(2).all(|w| w[1] <= w[0]));
    let fits = fit_tails(&finite_values(&outcomes), &est).unwrap();
    let power = fits
        .iter()
        .find(|f| f.model == TailModel::PowerLaw)
        .unwrap();
    assert!(power.preferred, "{fits:?}");
    assert!(power.parameter >= CRITICAL_MOMENT, "{fits:?}");
    assert!(-power.ls_slope >= CRITICAL_MOMENT, "{fits:?}");
}
