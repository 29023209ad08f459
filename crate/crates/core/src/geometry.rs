//! Metric and measure primitives on the periodic window `[0, L)^d`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Minimum number of grid cells along each axis.
pub const MIN_CELLS_PER_AXIS: usize = 20;

/// Simulation window: a d-dimensional torus of side `side`, discretised into
/// cubic cells of side `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    d: usize,
    side: f64,
    eps: f64,
    cells_per_axis: usize,
}

impl Domain {
    pub fn new(d: usize, side: f64, eps: f64) -> Result<Self> {
        if d == 0 {
            return invalid("dimension must be positive");
        }
        if !(side.is_finite() && side > 0.0) {
            return invalid(format!("torus side must be positive, got {side}"));
        }
        if !(eps.is_finite() && eps > 0.0) {
            return invalid(format!("grid resolution must be positive, got {eps}"));
        }
        let ratio = side / eps;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
            return invalid(format!("side/eps = {ratio} is not an integer"));
        }
        let n = n as usize;
        if n < MIN_CELLS_PER_AXIS {
            return invalid(format!(
                "need at least {MIN_CELLS_PER_AXIS} cells per axis, got {n} (eps too coarse)"
            ));
        }
        if n.checked_pow(d as u32)
            .is_none_or(|c| c > u32::MAX as usize / 2)
        {
            return invalid("too many cells");
        }
        Ok(Domain {
            d,
            side,
            eps,
            cells_per_axis: n,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn cell_count(&self) -> usize {
        self.cells_per_axis.pow(self.d as u32)
    }

    /// Volume of one cell, `eps^d`.
    pub fn cell_volume(&self) -> f64 {
        self.eps.powi(self.d as i32)
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.d as i32)
    }

    /// Writes the center of cell `index` into `out`. Cells are numbered in
    /// row-major order (last axis fastest).
    pub fn cell_center_into(&self, index: usize, out: &mut [f64]) {
        let n = self.cells_per_axis;
        let mut rem = index;
        for k in (0..self.d).rev() {
            out[k] = ((rem % n) as f64 + 0.5) * self.eps;
            rem /= n;
        }
    }

    pub fn cell_center(&self, index: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.d];
        self.cell_center_into(index, &mut p);
        p
    }

    /// Index of the cell containing `p` (coordinates are wrapped first).
    pub fn cell_of(&self, p: &[f64]) -> usize {
        let n = self.cells_per_axis;
        p.iter().fold(0, |acc, &x| {
            let i = ((wrap(x, self.side) / self.eps).floor() as usize).min(n - 1);
            acc * n + i
        })
    }

    /// Multi-index of a cell, row-major.
    pub fn cell_coords(&self, index: usize) -> Vec<usize> {
        let n = self.cells_per_axis;
        let mut rem = index;
        let mut out = vec![0; self.d];
        for k in (0..self.d).rev() {
            out[k] = rem % n;
            rem /= n;
        }
        out
    }

    pub fn torus_distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        torus_distance(x, y, self.side)
    }
}

/// Maps `x` into `[0, side)`.
pub fn wrap(x: f64, side: f64) -> f64 {
    let r = x.rem_euclid(side);
    if r >= side {
        0.0
    } else {
        r
    }
}

/// Signed representative of `x` in `[-side/2, side/2)`.
pub fn signed(x: f64, side: f64) -> f64 {
    let w = wrap(x, side);
    if w >= side / 2.0 {
        w - side
    } else {
        w
    }
}

/// Periodic distance along one axis.
#[inline]
pub fn axis_gap(a: f64, b: f64, side: f64) -> f64 {
    let g = (a - b).abs() % side;
    g.min(side - g)
}

/// Squared torus distance; the caller guarantees matching dimensions.
#[inline]
pub fn torus_distance2(x: &[f64], y: &[f64], side: f64) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| {
            let g = axis_gap(a, b, side);
            g * g
        })
        .sum()
}

/// Shortest distance between `x` and `y` over all periodic images.
pub fn torus_distance(x: &[f64], y: &[f64], side: f64) -> Result<f64> {
    if x.len() != y.len() {
        return invalid(format!("dimension mismatch: {} vs {}", x.len(), y.len()));
    }
    Ok(torus_distance2(x, y, side).sqrt())
}

/// Volume of the unit ball in `d` dimensions, `pi^(d/2) / Gamma(d/2 + 1)`.
pub fn unit_ball_volume(d: usize) -> f64 {
    // omega_d = 2 pi / d * omega_{d-2}
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / d as f64 * unit_ball_volume(d - 2),
    }
}

pub fn ball_volume(d: usize, r: f64) -> Result<f64> {
    if r.is_nan() || r < 0.0 {
        return invalid(format!("radius must be non-negative, got {r}"));
    }
    Ok(unit_ball_volume(d) * r.powi(d as i32))
}

/// All cell centers of the grid in row-major order.
pub fn cell_centers(dom: &Domain) -> Vec<Vec<f64>> {
    (0..dom.cell_count()).map(|i| dom.cell_center(i)).collect()
}
