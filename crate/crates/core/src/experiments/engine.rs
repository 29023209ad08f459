//! One interface over the exact line solver and the grid solver.

use serde::{Deserialize, Serialize};

use crate::alloc_1d::{solve_1d, IntervalAllocation};
use crate::alloc_grid::{solve_grid, Allocation};
use crate::error::{invalid, Result};
use crate::geometry::{signed, torus_distance2, Domain};
use crate::point_process::CenterSet;

/// How allocations are computed: exactly (line only) or on a grid of
/// spacing `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Exact,
    Grid { eps: f64 },
}

impl Resolution {
    /// Exact when `eps` is absent, otherwise a grid.
    pub fn from_eps(eps: Option<f64>) -> Self {
        eps.map_or(Resolution::Exact, |eps| Resolution::Grid { eps })
    }

    pub fn eps(&self) -> Option<f64> {
        match *self {
            Resolution::Exact => None,
            Resolution::Grid { eps } => Some(eps),
        }
    }

    pub fn validate(&self, d: usize, side: f64) -> Result<()> {
        match *self {
            Resolution::Exact if d == 1 => Ok(()),
            Resolution::Exact => invalid(format!(
                "exact solving is only available for d = 1, got d = {d}"
            )),
            Resolution::Grid { eps } => Domain::new(d, side, eps).map(|_| ()),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Solved {
    Line(IntervalAllocation),
    Grid(Allocation),
}

pub fn solve(centers: &CenterSet, alpha: f64, res: Resolution) -> Result<Solved> {
    match res {
        Resolution::Exact => Ok(Solved::Line(solve_1d(centers, alpha)?)),
        Resolution::Grid { eps } => {
            let dom = Domain::new(centers.dim(), centers.side(), eps)?;
            Ok(Solved::Grid(solve_grid(centers, alpha, &dom)?))
        }
    }
}

impl Solved {
    /// Distance from the origin site to its center.
    pub fn x(&self) -> Option<f64> {
        match self {
            Solved::Line(a) => a.x_distance(),
            Solved::Grid(a) => a.measure_x(),
        }
    }

    pub fn owner_at(&self, p: &[f64]) -> Option<usize> {
        match self {
            Solved::Line(a) => a.owner_at(p[0]),
            Solved::Grid(a) => a.center_of(a.domain().cell_of(p)),
        }
    }

    pub fn radius(&self, center: usize) -> f64 {
        match self {
            Solved::Line(a) => a.radius(center),
            Solved::Grid(a) => a.measure_radius(center).map(|r| r.radius).unwrap_or(0.0),
        }
    }

    /// Territory radius of the center that owns the origin.
    pub fn origin_owner_radius(&self) -> Option<f64> {
        let origin = vec![0.0; self.dim()];
        self.owner_at(&origin).map(|c| self.radius(c))
    }

    pub fn is_sated(&self, center: usize) -> bool {
        match self {
            Solved::Line(a) => a.sated[center],
            Solved::Grid(a) => a.is_sated(center),
        }
    }

    /// True when the territory wraps around the circle and so cannot be
    /// read in line coordinates (always false on a grid).
    pub fn crosses_seam(&self, center: usize) -> bool {
        match self {
            Solved::Line(a) => {
                let half = a.side / 2.0;
                let c = signed(a.positions[center], a.side);
                a.territories[center].iter().any(|&(l, r)| {
                    let u = c + signed(l - a.positions[center], a.side);
                    u < -half || u + (r - l) > half
                })
            }
            Solved::Grid(_) => false,
        }
    }

    /// Whether the territory of `center` lies within `[-half, half)^d`.
    pub fn territory_within(&self, center: usize, half: f64) -> bool {
        match self {
            Solved::Line(a) => {
                let c = signed(a.positions[center], a.side);
                a.territories[center].iter().all(|&(l, r)| {
                    let u = c + signed(l - a.positions[center], a.side);
                    u >= -half && u + (r - l) <= half
                })
            }
            Solved::Grid(a) => {
                let dom = a.domain();
                let mut buf = vec![0.0; dom.dim()];
                a.assignment()
                    .iter()
                    .enumerate()
                    .filter(|(_, &o)| o == center as i32)
                    .all(|(cell, _)| {
                        dom.cell_center_into(cell, &mut buf);
                        buf.iter().all(|&x| {
                            let s = signed(x, dom.side());
                            -half <= s && s < half
                        })
                    })
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Solved::Line(_) => 1,
            Solved::Grid(a) => a.domain().dim(),
        }
    }

    /// Sample sites covering `[-half, half)^d` with their weights (volumes):
    /// grid cells whose centers fall in the box, or midpoints of a uniform
    /// partition of spacing `step` on the line.
    pub fn probe_sites(&self, half: f64, step: f64) -> Vec<(Vec<f64>, f64)> {
        match self {
            Solved::Line(_) => {
                let n = ((2.0 * half) / step).ceil().max(1.0) as usize;
                let h = 2.0 * half / n as f64;
                (0..n)
                    .map(|i| (vec![-half + (i as f64 + 0.5) * h], h))
                    .collect()
            }
            Solved::Grid(a) => {
                let dom = a.domain();
                let mut out = Vec::new();
                for cell in 0..dom.cell_count() {
                    let p = dom.cell_center(cell);
                    if p.iter().all(|&x| {
                        let s = signed(x, dom.side());
                        -half <= s && s < half
                    }) {
                        out.push((p, dom.cell_volume()));
                    }
                }
                out
            }
        }
    }

    /// Distance between two points of the window.
    pub fn distance(&self, p: &[f64], q: &[f64]) -> f64 {
        let side = match self {
            Solved::Line(a) => a.side,
            Solved::Grid(a) => a.domain().side(),
        };
        torus_distance2(p, q, side).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_process::{palm_augment, sample_poisson};

    #[test]
    fn exact_and_grid_agree_on_basic_queries() {
        let cs = palm_augment(&sample_poisson(1, 100.0, 1.0, 3).unwrap()).unwrap();
        let exact = solve(&cs, 0.7, Resolution::Exact).unwrap();
        let grid = solve(&cs, 0.7, Resolution::Grid { eps: 0.001 }).unwrap();
        assert!((exact.radius(0) - grid.radius(0)).abs() < 0.002);
        assert_eq!(exact.is_sated(0), grid.is_sated(0));
        assert_eq!(exact.owner_at(&[0.0]), Some(0));
        assert_eq!(exact.x(), Some(0.0));
        let r = exact.radius(0);
        assert!(exact.territory_within(0, r + 1e-9));
        assert!(!exact.territory_within(0, r / 2.0));
        assert!(!exact.crosses_seam(0));
    }

    #[test]
    fn resolution_validation() {
        assert!(Resolution::Exact.validate(2, 10.0).is_err());
        assert!(Resolution::Exact.validate(1, 10.0).is_ok());
        assert!(Resolution::Grid { eps: 0.3 }.validate(2, 10.0).is_err());
        assert_eq!(Resolution::from_eps(None), Resolution::Exact);
    }

    #[test]
    fn probe_sites_cover_the_box() {
        let cs = sample_poisson(2, 10.0, 1.0, 1).unwrap();
        let g = solve(&cs, 1.0, Resolution::Grid { eps: 0.1 }).unwrap();
        let total: f64 = g.probe_sites(1.0, 0.0).iter().map(|s| s.1).sum();
        assert!((total - 4.0).abs() < 1e-9);
        let cs = sample_poisson(1, 10.0, 1.0, 1).unwrap();
        let l = solve(&cs, 1.0, Resolution::Exact).unwrap();
        let total: f64 = l.probe_sites(1.0, 0.01).iter().map(|s| s.1).sum();
        assert!((total - 2.0).abs() < 1e-9);
    }
}
