//! Small statistical toolkit: binomial intervals, two-sample
//! Kolmogorov-Smirnov, least squares and tail-model likelihoods.

use serde::{Deserialize, Serialize};

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_901;

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0 {
        0.0
    } else {
        (centre - half).clamp(0.0, p)
    };
    let hi = if k as f64 == n {
        1.0
    } else {
        (centre + half).clamp(p, 1.0)
    };
    (lo, hi)
}

/// Asymptotic Kolmogorov distribution tail `Q(x) = 2 sum (-1)^(j-1) e^(-2 j^2 x^2)`.
fn kolmogorov_q(x: f64) -> f64 {
    if x < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let j = j as f64;
        let term = sign * (-2.0 * j * j * x * x).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov-Smirnov test with the small-sample corrected
/// asymptotic p-value. Infinite values are allowed and compare equal.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    if na == 0 || nb == 0 {
        return KsResult {
            statistic: 0.0,
            p_value: 1.0,
        };
    }
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = if a[i].total_cmp(&b[j]).is_le() {
            a[i]
        } else {
            b[j]
        };
        while i < na && a[i] == x {
            i += 1;
        }
        while j < nb && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let en = ((na * nb) as f64 / (na + nb) as f64).sqrt();
    let p_value = kolmogorov_q((en + 0.12 + 0.11 / en) * d);
    KsResult {
        statistic: d,
        p_value,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares through `(x, y)` points (at least two distinct x).
pub fn linear_fit(pts: &[(f64, f64)]) -> LineFit {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r2 = if sxx > 0.0 && syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    LineFit {
        slope,
        intercept: my - slope * mx,
        r2,
    }
}

/// Maximum-likelihood fit of a tail model to the samples in `(x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailMle {
    /// Pareto exponent or exponential rate.
    pub parameter: f64,
    pub log_likelihood: f64,
    pub n: usize,
}

fn tail(xs: &[f64], x_min: f64, x_max: f64) -> Vec<f64> {
    xs.iter()
        .copied()
        .filter(|&x| x > x_min && x <= x_max && x.is_finite())
        .collect()
}

/// `1/x - 1/(e^x - 1)`, decreasing from 1/2 at 0 to 0 at infinity.
fn score_shape(x: f64) -> f64 {
    if x < 1e-4 {
        0.5 - x / 12.0
    } else {
        1.0 / x - 1.0 / x.exp_m1()
    }
}

/// Root of `score_shape(x) = c`; 0 when `c >= 1/2`.
fn solve_score(c: f64) -> f64 {
    if c >= 0.5 {
        return 0.0;
    }
    let (mut lo, mut hi) = (1e-12_f64, 1e12_f64);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if score_shape(mid) > c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo * hi).sqrt()
}

/// `ln(1 - e^(-x))`, which tends to `ln x` at 0 and 0 at infinity.
fn log_truncation(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        (-(-x).exp_m1()).ln()
    }
}

/// Log-likelihood of rate `x / w` for a density `e^(-rate z)` on `[0, w]`
/// given `n` samples with total `z`; `x = 0` is the uniform limit.
fn truncated_exp_ll(x: f64, w: f64, n: f64, z: f64) -> f64 {
    if x == 0.0 {
        -n * w.ln()
    } else if w.is_infinite() {
        n * x.ln() - x * z
    } else {
        n * (x / w).ln() - x / w * z - n * log_truncation(x)
    }
}

/// Fits the exponential law truncated to `[0, w]` to `n` samples with total
/// `z`, returning the rate and the log-likelihood.
fn fit_truncated_exp(w: f64, n: f64, z: f64) -> (f64, f64) {
    if w.is_infinite() {
        let rate = n / z;
        return (rate, truncated_exp_ll(rate, w, n, z));
    }
    let x = solve_score(z / n / w);
    (x / w, truncated_exp_ll(x, w, n, z))
}

/// Pareto density `beta x_min^beta / x^(beta + 1)` on `x > x_min > 0`,
/// renormalised to `(x_min, x_max]` (pass infinity for no truncation).
pub fn pareto_mle(xs: &[f64], x_min: f64, x_max: f64) -> Option<TailMle> {
    let t = tail(xs, x_min, x_max);
    let n = t.len() as f64;
    let sum_log: f64 = t.iter().map(|x| (x / x_min).ln()).sum();
    if t.len() < 2 || !(x_min > 0.0) || !(x_max > x_min) || !(sum_log > 0.0) {
        return None;
    }
    // in log coordinates this is an exponential law truncated at ln(x_max / x_min)
    let (beta, ll) = fit_truncated_exp((x_max / x_min).ln(), n, sum_log);
    let jacobian: f64 = t.iter().map(|x| x.ln()).sum();
    Some(TailMle {
        parameter: beta,
        log_likelihood: ll - jacobian,
        n: t.len(),
    })
}

/// Shifted exponential density `mu e^(-mu (x - x_min))` on `x > x_min`,
/// renormalised to `(x_min, x_max]` (pass infinity for no truncation).
pub fn exponential_mle(xs: &[f64], x_min: f64, x_max: f64) -> Option<TailMle> {
    let t = tail(xs, x_min, x_max);
    let n = t.len() as f64;
    let excess: f64 = t.iter().map(|x| x - x_min).sum();
    if t.len() < 2 || !(x_max > x_min) || !(excess > 0.0) {
        return None;
    }
    let (mu, ll) = fit_truncated_exp(x_max - x_min, n, excess);
    Some(TailMle {
        parameter: mu,
        log_likelihood: ll,
        n: t.len(),
    })
}

/// Lower empirical `p`-quantile of the finite values.
pub fn quantile(xs: &[f64], p: f64) -> Option<f64> {
    let mut v: Vec<f64> = xs.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() || !(0.0..=1.0).contains(&p) {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(v[((v.len() - 1) as f64 * p).floor() as usize])
}
