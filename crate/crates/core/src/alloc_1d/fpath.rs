//! The saw-tooth path `F` of a one-dimensional configuration: `F(0) = 1`,
//! up-jumps of one at each center and slope `-1` in between.

use crate::error::{invalid, Result};
use crate::geometry::signed;
use crate::point_process::CenterSet;

#[derive(Debug, Clone, PartialEq)]
pub struct FPath {
    jumps: Vec<f64>,
    /// Number of jumps at or below zero.
    base: usize,
    window: (f64, f64),
}

impl FPath {
    /// `jumps` must be strictly increasing and lie in `[window.0, window.1)`.
    pub fn new(jumps: Vec<f64>, window: (f64, f64)) -> Result<Self> {
        if !(window.0 < window.1) {
            return invalid("empty evaluation window");
        }
        if jumps.iter().any(|x| !x.is_finite()) {
            return invalid("non-finite center position");
        }
        if let Some(w) = jumps.windows(2).find(|w| w[0] >= w[1]) {
            return invalid(format!(
                "centers not strictly increasing at {} -> {}",
                w[0], w[1]
            ));
        }
        if jumps.first().is_some_and(|&x| x < window.0)
            || jumps.last().is_some_and(|&x| x >= window.1)
        {
            return invalid("center outside the evaluation window");
        }
        let base = jumps.partition_point(|&x| x <= 0.0);
        Ok(FPath {
            jumps,
            base,
            window,
        })
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    /// `F(t) = 1 + (#jumps <= t) - (#jumps <= 0) - t`, right-continuous.
    pub fn value(&self, t: f64) -> f64 {
        let n = self.jumps.partition_point(|&x| x <= t) as f64;
        1.0 + (n - self.base as f64) - t
    }

    /// `F(t-)`.
    pub fn left_limit(&self, t: f64) -> f64 {
        let n = self.jumps.partition_point(|&x| x < t) as f64;
        1.0 + (n - self.base as f64) - t
    }

    /// Jumps strictly inside `(a, b)`.
    pub fn jumps_between(&self, a: f64, b: f64) -> &[f64] {
        let lo = self.jumps.partition_point(|&x| x <= a);
        let hi = self.jumps.partition_point(|&x| x < b);
        &self.jumps[lo..hi.max(lo)]
    }

    /// The reflected path, built from the centers `-x`.
    pub fn mirrored(&self) -> FPath {
        let jumps: Vec<f64> = self.jumps.iter().rev().map(|&x| 0.0 - x).collect();
        let base = jumps.partition_point(|&x| x <= 0.0);
        FPath {
            jumps,
            base,
            window: (-self.window.1, -self.window.0),
        }
    }
}

/// `F` of a one-dimensional configuration, in line coordinates
/// `[-side/2, side/2)` around the origin.
pub fn build_f(centers: &CenterSet) -> Result<FPath> {
    if centers.dim() != 1 {
        return invalid("build_f needs a one-dimensional configuration");
    }
    let side = centers.side();
    let mut jumps: Vec<f64> = centers.points().map(|p| signed(p[0], side)).collect();
    jumps.sort_by(f64::total_cmp);
    FPath::new(jumps, (-side / 2.0, side / 2.0))
}

/// Closed intervals of `(0, end)` on which `F >= 0`, merged.
fn nonnegative_runs(f: &FPath, end: f64) -> Vec<(f64, f64)> {
    let jumps = f.jumps();
    let mut runs: Vec<(f64, f64)> = Vec::new();
    let start = jumps.partition_point(|&x| x < 0.0);
    for (k, &a) in jumps[start..].iter().enumerate() {
        if a >= end {
            break;
        }
        let next = jumps.get(start + k + 1).copied().unwrap_or(end).min(end);
        let fa = f.value(a);
        if fa < 0.0 {
            continue;
        }
        let b = (a + fa).min(next);
        match runs.last_mut() {
            Some(last) if last.1 >= a => last.1 = last.1.max(b),
            _ => runs.push((a, b)),
        }
    }
    runs
}

fn one_sided_bound(f: &FPath, limit: f64) -> Option<f64> {
    let end = f.window().1;
    let runs = nonnegative_runs(f, end);
    for (j, &(_, b)) in runs.iter().enumerate() {
        if b > limit {
            return None;
        }
        match runs.get(j + 1) {
            Some(&(a_next, _)) if 2.0 * b <= a_next => return Some(b),
            Some(_) => {}
            // F is unknown past the window
            None => return (2.0 * b <= end).then_some(b),
        }
    }
    None
}

/// Smallest `x <= limit` such that `F < 0` on `(x, 2x)` for the
/// configuration or its reflection; such an `x` bounds the territory radius
/// of the center at the origin when every center is sated.
pub fn radius_bound_from_f(f: &FPath, limit: f64) -> Result<Option<f64>> {
    if !f.jumps().contains(&0.0) {
        return invalid("radius bound needs a center at the origin");
    }
    let right = one_sided_bound(f, limit);
    let left = one_sided_bound(&f.mirrored(), limit);
    Ok(match (right, left) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    })
}
