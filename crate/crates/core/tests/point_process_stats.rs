use alloclab::point_process::{replicate_seed, sample_coupled, sample_poisson};
use alloclab::stats::Z99;

fn dispersion(counts: &[f64]) -> f64 {
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
    var / mean
}

#[test]
fn samplers_are_pure_functions_of_the_seed() {
    for d in 1..=3 {
        let a = sample_poisson(d, 7.0, 1.3, 99).unwrap();
        let b = sample_poisson(d, 7.0, 1.3, 99).unwrap();
        assert_eq!(a.coords(), b.coords());
        let (c1, c2) = sample_coupled(d, 7.0, 1.5, 4).unwrap();
        let (e1, e2) = sample_coupled(d, 7.0, 1.5, 4).unwrap();
        assert_eq!((c1.coords(), c2.coords()), (e1.coords(), e2.coords()));
    }
}

/// Counts in two disjoint halves of the window, over many replicates:
/// the sample correlation must be indistinguishable from zero.
#[test]
fn disjoint_counts_are_uncorrelated() {
    let n = 2000;
    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let cs = sample_poisson(2, 6.0, 1.0, replicate_seed(17, i)).unwrap();
            let left = cs.points().filter(|p| p[0] < 3.0).count() as f64;
            (left, cs.len() as f64 - left)
        })
        .collect();
    let m = |f: fn(&(f64, f64)) -> f64| pairs.iter().map(f).sum::<f64>() / n as f64;
    let (ma, mb) = (m(|p| p.0), m(|p| p.1));
    let cov: f64 = pairs.iter().map(|p| (p.0 - ma) * (p.1 - mb)).sum();
    let va: f64 = pairs.iter().map(|p| (p.0 - ma).powi(2)).sum();
    let vb: f64 = pairs.iter().map(|p| (p.1 - mb).powi(2)).sum();
    let r = cov / (va * vb).sqrt();
    // Fisher z-statistic against zero correlation at the 1% level
    let z = r.atanh() * ((n - 3) as f64).sqrt();
    assert!(z.abs() < Z99, "r = {r}, z = {z}");
    assert!((ma - 18.0).abs() < 0.5 && (mb - 18.0).abs() < 0.5);
}

#[test]
fn coupled_marginals_are_poisson() {
    let (base, top): (Vec<f64>, Vec<f64>) = (0..1000)
        .map(|i| {
            let (a, b) = sample_coupled(1, 30.0, 1.5, replicate_seed(23, i)).unwrap();
            (a.len() as f64, b.len() as f64)
        })
        .unzip();
    for (counts, mean) in [(&base, 30.0), (&top, 45.0)] {
        let q = dispersion(counts);
        assert!((0.9..=1.1).contains(&q), "dispersion {q}");
        let m = counts.iter().sum::<f64>() / counts.len() as f64;
        assert!((m - mean).abs() < 4.0 * (mean / 1000.0f64).sqrt());
    }
}
