//! Closed-form tail bounds: Poisson large deviations, the explicit bounds
//! for extreme appetites and for the line, the critical power-law shape and
//! the random-walk block ratio.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, not_applicable, Result};
use crate::geometry::unit_ball_volume;

/// Exponent of the critical power-law tail bound on the line.
pub const CRITICAL_EXPONENT: f64 = 1.0 / 17.6;
/// Moment order known to be finite for the critical radius on the line.
pub const CRITICAL_MOMENT: f64 = 1.0 / 18.0;
/// Fraction of a supremal decay constant exposed as the usable constant.
pub const RATE_FRACTION: f64 = 0.99;

/// `q(x) = (x - 1 - ln x) / x`; zero at 1, positive elsewhere.
pub fn q(x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return invalid(format!("q needs a positive argument, got {x}"));
    }
    Ok((x - 1.0 - x.ln()) / x)
}

/// `P(Z >= b) <= e^(-gamma q(gamma / b))` for `Z ~ Poisson(gamma)`, `b > gamma`.
pub fn poisson_tail_upper(gamma: f64, b: f64) -> Result<f64> {
    if !(gamma > 0.0 && b > gamma) {
        return invalid(format!(
            "upper tail needs b > gamma > 0, got gamma={gamma}, b={b}"
        ));
    }
    Ok((-gamma * q(gamma / b)?).exp())
}

/// `P(Z <= a) <= e^(-gamma q(gamma / a))` for `Z ~ Poisson(gamma)`, `0 < a < gamma`.
pub fn poisson_tail_lower(gamma: f64, a: f64) -> Result<f64> {
    if !(a > 0.0 && gamma > a) {
        return invalid(format!(
            "lower tail needs 0 < a < gamma, got gamma={gamma}, a={a}"
        ));
    }
    Ok((-gamma * q(gamma / a)?).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// Distance from the origin site to its center.
    X,
    /// Territory radius of the Palm center.
    RStar,
}

/// Decay constants of the extreme-appetite bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRate {
    pub supremum: f64,
    /// `RATE_FRACTION * supremum`.
    pub c: f64,
}

fn check_extreme(d: usize, alpha: f64, target: Target) -> Result<()> {
    if d == 0 {
        return invalid("dimension must be positive");
    }
    let two_d = 2f64.powi(d as i32);
    match target {
        Target::X if alpha > two_d => Ok(()),
        Target::RStar if alpha > 0.0 && alpha < 1.0 / two_d => Ok(()),
        Target::X => not_applicable(format!(
            "the X bound needs alpha > 2^d = {two_d}, got {alpha}"
        )),
        Target::RStar => not_applicable(format!(
            "the R* bound needs alpha < 2^-d = {}, got {alpha}",
            1.0 / two_d
        )),
    }
}

/// Supremal admissible `c` in `E exp(c X^d) < infinity` (target `X`,
/// `alpha > 2^d`) or `E* exp(c R*^d) < infinity` (target `R*`,
/// `alpha < 2^-d`).
pub fn extreme_alpha_rate(d: usize, alpha: f64, target: Target) -> Result<DecayRate> {
    check_extreme(d, alpha, target)?;
    let omega = unit_ball_volume(d);
    let two_d = 2f64.powi(d as i32);
    let supremum = match target {
        Target::X => omega * q(alpha / two_d)?,
        Target::RStar => two_d * omega * q(alpha * two_d)?,
    };
    Ok(DecayRate {
        supremum,
        c: RATE_FRACTION * supremum,
    })
}

/// Explicit tail bound for extreme appetites:
/// `P(X > r) <= P(Z <= omega_d r^d 2^d / alpha)` with `Z ~ Poisson(omega_d r^d)`,
/// and `P*(R* > r) <= P(Z' >= omega_d r^d / alpha - 1)` with
/// `Z' ~ Poisson(omega_d 2^d r^d)`, each closed with the Poisson bounds.
pub fn bound_extreme_alpha(d: usize, alpha: f64, r: f64, target: Target) -> Result<f64> {
    check_extreme(d, alpha, target)?;
    if !(r >= 0.0) {
        return invalid(format!("radius must be non-negative, got {r}"));
    }
    if r == 0.0 {
        return Ok(1.0);
    }
    let vol = unit_ball_volume(d) * r.powi(d as i32);
    let two_d = 2f64.powi(d as i32);
    match target {
        Target::X => poisson_tail_lower(vol, vol * two_d / alpha),
        Target::RStar => {
            let gamma = vol * two_d;
            let b = vol / alpha - 1.0;
            if b <= gamma {
                Ok(1.0)
            } else {
                poisson_tail_upper(gamma, b)
            }
        }
    }
}

/// Explicit tail bounds on the line at unit intensity:
/// `P(r < X < infinity) <= 2 (1 v 1/alpha) e^(-q(alpha) r)` and
/// `P*(R* > r) <= 2 (1 v 1/alpha^2) e^(-q(alpha) r)`.
pub fn bound_1d(alpha: f64, r: f64, target: Target) -> Result<f64> {
    if alpha == 1.0 {
        return not_applicable("no exponential bound at the critical appetite");
    }
    if !(alpha > 0.0) || !(r >= 0.0) {
        return invalid(format!(
            "need alpha > 0 and r >= 0, got alpha={alpha}, r={r}"
        ));
    }
    let prefactor = match target {
        Target::X => 2.0 * f64::max(1.0, 1.0 / alpha),
        Target::RStar => 2.0 * f64::max(1.0, 1.0 / (alpha * alpha)),
    };
    Ok(prefactor * (-q(alpha)? * r).exp())
}

/// Power-law reference `r^(-1/17.6)` for `r > 1` (the constant is unknown).
pub fn critical_shape(r: f64) -> Result<f64> {
    if !(r > 1.0) {
        return not_applicable(format!("the critical shape is stated for r > 1, got {r}"));
    }
    Ok(r.powf(-CRITICAL_EXPONENT))
}

/// Deviation bounds for a rate-`lambda` Poisson process on the line:
/// `P(exists t >= r: N(0,t] <= t + a) <= lambda^a e^(-q(lambda) lambda r)`
/// for `lambda > 1`, and
/// `P(exists t >= r: N(0,t] >= t - a) <= lambda^-a e^(-q(lambda) lambda r)`
/// for `lambda < 1`.
pub fn pp_deviation_bound(lambda: f64, r: f64, a: f64) -> Result<f64> {
    if lambda == 1.0 {
        return not_applicable("no deviation bound at unit intensity");
    }
    if !(lambda > 0.0 && r >= 0.0 && a >= 0.0) {
        return invalid(format!(
            "need lambda > 0 and r, a >= 0, got {lambda}, {r}, {a}"
        ));
    }
    let decay = (-q(lambda)? * lambda * r).exp();
    Ok(if lambda > 1.0 {
        lambda.powf(a)
    } else {
        lambda.powf(-a)
    } * decay)
}

/// Bound on the per-block ratio of the random-walk block events.
pub fn walk_theta() -> f64 {
    8f64.powf(-1.0 / 35.2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundCurve {
    /// Upper Poisson tail at threshold `r`.
    PoissonUpper {
        gamma: f64,
    },
    /// Lower Poisson tail at threshold `r`.
    PoissonLower {
        gamma: f64,
    },
    ExtremeAlphaX {
        d: usize,
        alpha: f64,
    },
    ExtremeAlphaR {
        d: usize,
        alpha: f64,
    },
    OnedX {
        alpha: f64,
    },
    OnedR {
        alpha: f64,
    },
    CriticalShape,
    /// `theta^r` at block index `r`.
    WalkTheta,
}

impl BoundCurve {
    pub fn eval(&self, r: f64) -> Result<f64> {
        match *self {
            BoundCurve::PoissonUpper { gamma } => poisson_tail_upper(gamma, r),
            BoundCurve::PoissonLower { gamma } => poisson_tail_lower(gamma, r),
            BoundCurve::ExtremeAlphaX { d, alpha } => bound_extreme_alpha(d, alpha, r, Target::X),
            BoundCurve::ExtremeAlphaR { d, alpha } => {
                bound_extreme_alpha(d, alpha, r, Target::RStar)
            }
            BoundCurve::OnedX { alpha } => bound_1d(alpha, r, Target::X),
            BoundCurve::OnedR { alpha } => bound_1d(alpha, r, Target::RStar),
            BoundCurve::CriticalShape => critical_shape(r),
            BoundCurve::WalkTheta => Ok(walk_theta().powf(r)),
        }
    }

    /// Writes `r,bound` rows for the given radii.
    pub fn write_csv<W: Write>(&self, radii: &[f64], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "bound"])?;
        for &r in radii {
            w.write_record([r.to_string(), self.eval(r)?.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Exp};

    /// `P(Z >= b)` and `P(Z <= a)` by partial sums of the Poisson mass function.
    fn poisson_cdf(gamma: f64, k: u64) -> f64 {
        let mut term = (-gamma).exp();
        let mut sum = term;
        for j in 1..=k {
            term *= gamma / j as f64;
            sum += term;
        }
        sum
    }

    #[test]
    fn q_reference_values() {
        assert_eq!(q(1.0).unwrap(), 0.0);
        assert_relative_eq!(q(0.5).unwrap(), 0.386_294_361, epsilon = 1e-9);
        assert_relative_eq!(q(2.0).unwrap(), 0.153_426_409, epsilon = 1e-9);
        assert_relative_eq!(q(0.25).unwrap(), 2.545_177_444, epsilon = 1e-9);
        assert!(q(0.0).is_err());
        assert!(q(-1.0).is_err());
    }

    #[test]
    fn poisson_bounds_dominate_exact_tails() {
        let up = poisson_tail_upper(4.0, 8.0).unwrap();
        assert_relative_eq!(up, 0.213_274, epsilon = 1e-6);
        let exact_up = 1.0 - poisson_cdf(4.0, 7);
        assert_relative_eq!(exact_up, 0.051_13, epsilon = 1e-5);
        assert!(exact_up <= up);
        let low = poisson_tail_lower(10.0, 2.0).unwrap();
        assert_relative_eq!(low, (-10.0 * q(5.0).unwrap()).exp(), epsilon = 1e-15);
        assert!(poisson_cdf(10.0, 2) <= low);
        assert!(poisson_tail_upper(4.0, 4.0).is_err());
        assert!(poisson_tail_lower(4.0, 5.0).is_err());
        assert!(poisson_tail_upper(4.0, 4.0 + 1e-9).unwrap() > 0.999_999);
    }

    #[test]
    fn extreme_alpha_rates() {
        let r = extreme_alpha_rate(1, 3.0, Target::X).unwrap();
        assert_relative_eq!(r.supremum, 0.126_046, epsilon = 1e-6);
        assert_relative_eq!(r.c, 0.99 * r.supremum);
        let r = extreme_alpha_rate(1, 0.125, Target::RStar).unwrap();
        assert_relative_eq!(r.supremum, 4.0 * q(0.25).unwrap(), epsilon = 1e-12);
        assert!(matches!(
            extreme_alpha_rate(1, 2.0, Target::X),
            Err(crate::Error::NotApplicable(_))
        ));
        assert!(matches!(
            extreme_alpha_rate(2, 0.25, Target::RStar),
            Err(crate::Error::NotApplicable(_))
        ));
    }

    #[test]
    fn extreme_alpha_bound_is_explicit_form() {
        // X: e^(-omega_d q(alpha / 2^d) r^d)
        for r in [0.5, 1.0, 3.0] {
            let b = bound_extreme_alpha(1, 3.0, r, Target::X).unwrap();
            assert_relative_eq!(b, (-2.0 * q(1.5).unwrap() * r).exp(), epsilon = 1e-12);
        }
        // below r = 1/12 the Poisson threshold does not exceed the mean
        assert_eq!(
            bound_extreme_alpha(1, 0.125, 0.05, Target::RStar).unwrap(),
            1.0
        );
        let b = bound_extreme_alpha(1, 0.125, 10.0, Target::RStar).unwrap();
        assert_relative_eq!(b, poisson_tail_upper(40.0, 159.0).unwrap());
    }

    #[test]
    fn one_dimensional_bounds() {
        assert_eq!(bound_1d(0.5, 0.0, Target::X).unwrap(), 4.0);
        assert_eq!(bound_1d(0.5, 0.0, Target::RStar).unwrap(), 8.0);
        assert_relative_eq!(
            bound_1d(2.0, 20.0, Target::X).unwrap(),
            0.093_0,
            epsilon = 1e-4
        );
        assert!(matches!(
            bound_1d(1.0, 3.0, Target::X),
            Err(crate::Error::NotApplicable(_))
        ));
    }

    #[test]
    fn critical_shape_values() {
        assert_relative_eq!(CRITICAL_EXPONENT, 0.056_818, epsilon = 1e-6);
        assert_relative_eq!(CRITICAL_MOMENT, 0.055_556, epsilon = 1e-6);
        assert_relative_eq!(critical_shape(10.0).unwrap(), 0.8774, epsilon = 1e-4);
        assert!(critical_shape(1.0).is_err());
    }

    #[test]
    fn walk_theta_value() {
        assert_relative_eq!(walk_theta(), 0.942_64, epsilon = 1e-5);
    }

    #[test]
    fn deviation_bound_values() {
        assert_eq!(pp_deviation_bound(2.0, 0.0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(
            pp_deviation_bound(2.0, 5.0, 1.0).unwrap(),
            0.431_229,
            epsilon = 1e-6
        );
        assert!(pp_deviation_bound(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn deviation_bound_dominates_simulation() {
        // event {exists t >= r: N(0,t] <= t + a} at rate 2, scanned at r and
        // just before each arrival; the drift makes late hits negligible
        let lambda = 2.0;
        let a = 0.0;
        let n = 20_000u64;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let gaps = Exp::new(lambda).unwrap();
        for r in [1.0, 2.0, 5.0] {
            let mut hits = 0u64;
            for _ in 0..n {
                let mut t = 0.0;
                let mut count = 0u64;
                let mut hit = false;
                let mut checked_r = false;
                while t < r + 100.0 {
                    let next = t + gaps.sample(&mut rng);
                    if !checked_r && next > r {
                        hit |= count as f64 <= r + a;
                        checked_r = true;
                    }
                    if next > r {
                        hit |= count as f64 <= next + a;
                    }
                    t = next;
                    count += 1;
                    if hit {
                        break;
                    }
                }
                hits += hit as u64;
            }
            let (lo, _) = crate::stats::wilson(hits, n, crate::stats::Z99);
            let bound = pp_deviation_bound(lambda, r, a).unwrap();
            assert!(lo <= bound, "r={r}: {lo} > {bound}");
        }
    }

    #[test]
    fn curve_csv() {
        let mut buf = Vec::new();
        BoundCurve::OnedR { alpha: 0.5 }
            .write_csv(&[0.0, 1.0], &mut buf)
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "r,bound");
        assert_eq!(lines[1], "0,8");
        assert_eq!(
            BoundCurve::WalkTheta.eval(2.0).unwrap(),
            walk_theta().powi(2)
        );
    }

    proptest! {
        #[test]
        fn q_is_decreasing_then_increasing(x in 0.01f64..20.0, h in 1e-3f64..1.0) {
            let (a, b) = (q(x).unwrap(), q(x + h).unwrap());
            if x + h <= 1.0 {
                prop_assert!(b < a);
            } else if x >= 1.0 {
                prop_assert!(b > a);
            }
            prop_assert!(a >= 0.0);
        }

        #[test]
        fn bounds_nonincreasing_in_r(r in 0.0f64..50.0, h in 0.0f64..5.0, alpha in 0.05f64..0.95) {
            for t in [Target::X, Target::RStar] {
                prop_assert!(bound_1d(alpha, r + h, t).unwrap() <= bound_1d(alpha, r, t).unwrap());
                prop_assert!(bound_1d(1.0 / alpha, r + h, t).unwrap() <= bound_1d(1.0 / alpha, r, t).unwrap());
            }
            let x = |r| bound_extreme_alpha(1, 2.0 + 4.0 * alpha, r, Target::X).unwrap();
            prop_assert!(x(r + h) <= x(r));
            let s = |r| bound_extreme_alpha(1, 0.4 * alpha, r, Target::RStar).unwrap();
            prop_assert!(s(r + h) <= s(r) + 1e-15);
            prop_assert!(pp_deviation_bound(1.0 + alpha, r + h, 1.0).unwrap() <= pp_deviation_bound(1.0 + alpha, r, 1.0).unwrap());
        }
    }
}
