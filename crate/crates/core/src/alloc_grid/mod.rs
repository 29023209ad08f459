//! Discretised stable allocation.
//!
//! The window is cut into cubic cells; every cell is a site of volume
//! `eps^d` located at its center, and each center accepts at most
//! `kappa = round(alpha / eps^d)` cells. The solver runs cell-proposing
//! deferred acceptance: an unassigned cell proposes to its nearest center
//! that has not yet rejected it, and a center holds its `kappa` closest
//! proposers. Cells prefer by `(distance, center index)` and centers by
//! `(distance, cell index)`, so all preferences are strict and the output
//! is deterministic.
//!
//! Two shortcuts keep the proposal loop cheap:
//!
//! * proposals are found with ring searches in a bucket grid over centers,
//!   restarting at the ring of the previous proposal;
//! * at the start of every round the largest holding distance `t_max` over
//!   full centers is recorded. A full center never accepts anything farther
//!   than its current worst cell, and that only shrinks, so a cell whose last
//!   proposal was farther than `t_max` skips straight to the nearest center
//!   that was not yet full when the round began. If there is none, the cell
//!   stays unclaimed.

mod index;
pub mod io;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{torus_distance2, Domain};
use crate::point_process::CenterSet;
pub(crate) use index::{CenterIndex, Key};
use io::GridHeader;

/// Marker for an unclaimed cell.
pub const UNCLAIMED: i32 = -1;

#[derive(Debug, Clone, Copy)]
struct Held {
    d2: f64,
    cell: u32,
}

impl PartialEq for Held {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Held {}

impl Ord for Held {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.cell.cmp(&other.cell))
    }
}

impl PartialOrd for Held {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Result of [`solve_grid`].
#[derive(Debug, Clone)]
pub struct Allocation {
    dom: Domain,
    centers: CenterSet,
    alpha: f64,
    kappa: usize,
    assignment: Vec<i32>,
    proposals: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub claimed_fraction: f64,
    pub unsated_fraction: f64,
    pub unclaimed_volume: f64,
}

/// Territory radius of one center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radius {
    pub radius: f64,
    /// The territory has no cells; `radius` is then 0.
    pub empty: bool,
}

/// Capacity in cells for appetite `alpha`.
pub fn capacity(alpha: f64, dom: &Domain) -> usize {
    (alpha / dom.cell_volume()).round() as usize
}

/// Stable allocation of the grid cells of `dom` to `centers` with appetite
/// `alpha`.
pub fn solve_grid(centers: &CenterSet, alpha: f64, dom: &Domain) -> Result<Allocation> {
    if centers.is_empty() {
        return invalid("no centers");
    }
    if centers.dim() != dom.dim() || (centers.side() - dom.side()).abs() > 1e-9 * dom.side() {
        return invalid("centers and domain disagree on the window");
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return invalid(format!("appetite must be positive, got {alpha}"));
    }
    let kappa = capacity(alpha, dom);
    if kappa == 0 {
        return invalid(format!(
            "appetite {alpha} rounds to zero cells at eps={}",
            dom.eps()
        ));
    }
    if centers.len() > i32::MAX as usize {
        return invalid("too many centers");
    }

    let d = dom.dim();
    let side = dom.side();
    let ncells = dom.cell_count();
    let ncenters = centers.len();
    let mut cell_pts = vec![0.0; ncells * d];
    for (c, p) in cell_pts.chunks_exact_mut(d).enumerate() {
        dom.cell_center_into(c, p);
    }

    let all: Vec<u32> = (0..ncenters as u32).collect();
    let full_index = CenterIndex::new(centers.coords(), d, side, &all);
    let mut held: Vec<BinaryHeap<Held>> = vec![BinaryHeap::new(); ncenters];
    let mut last: Vec<Option<Key>> = vec![None; ncells];
    let mut assignment = vec![UNCLAIMED; ncells];
    let mut proposals: u64 = 0;
    let bound = ncells as u64 * ncenters as u64;

    // upcoming candidates per cell (popped from the back) and whether they
    // came from the open-center index
    let mut queue: Vec<Vec<Key>> = vec![Vec::new(); ncells];
    let mut queued_open = vec![false; ncells];

    let mut pending: Vec<u32> = (0..ncells as u32).collect();
    while !pending.is_empty() {
        let mut t_max2 = f64::NEG_INFINITY;
        let mut open = Vec::new();
        for (i, h) in held.iter().enumerate() {
            if h.len() == kappa {
                t_max2 = t_max2.max(h.peek().expect("full heap").d2);
            } else {
                open.push(i as u32);
            }
        }
        let open_index = CenterIndex::new(centers.coords(), d, side, &open);

        let mut next = Vec::new();
        for &cell in &pending {
            let c = cell as usize;
            let p = &cell_pts[c * d..(c + 1) * d];
            let prev = last[c];
            // every full center holds only sites within t_max, so a cell
            // beyond t_max can skip straight to the open centers
            let use_open = prev.is_some_and(|k| k.d2 > t_max2);
            let q = &mut queue[c];
            if use_open != queued_open[c] {
                q.clear();
                queued_open[c] = use_open;
            }
            if q.is_empty() {
                let index = if use_open { &open_index } else { &full_index };
                index.batch_after(p, prev, q);
            }
            let Some(key) = q.pop() else {
                continue; // rejected by every center: stays unclaimed
            };
            if q.is_empty() {
                q.shrink_to_fit();
            }
            proposals += 1;
            last[c] = Some(key);
            let heap = &mut held[key.id as usize];
            let offer = Held { d2: key.d2, cell };
            if heap.len() < kappa {
                heap.push(offer);
                assignment[c] = key.id as i32;
            } else if offer < *heap.peek().expect("full heap") {
                let out = heap.pop().expect("full heap");
                heap.push(offer);
                assignment[c] = key.id as i32;
                assignment[out.cell as usize] = UNCLAIMED;
                next.push(out.cell);
            } else {
                next.push(cell);
            }
            debug_assert!(heap.len() <= kappa);
        }
        assert!(
            proposals <= bound,
            "proposal count exceeded cells x centers"
        );
        pending = next;
    }

    let alloc = Allocation {
        dom: *dom,
        centers: centers.clone(),
        alpha,
        kappa,
        assignment,
        proposals,
    };
    let stats = alloc.phase_stats();
    assert!(
        stats.claimed_fraction == 1.0 || stats.unsated_fraction == 0.0,
        "solver produced unclaimed cells next to an unsated center"
    );
    Ok(alloc)
}

impl Allocation {
    pub fn domain(&self) -> &Domain {
        &self.dom
    }

    pub fn centers(&self) -> &CenterSet {
        &self.centers
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Per-center capacity in cells.
    pub fn kappa(&self) -> usize {
        self.kappa
    }

    /// Appetite actually realised on the grid, `kappa * eps^d`.
    pub fn achieved_alpha(&self) -> f64 {
        self.kappa as f64 * self.dom.cell_volume()
    }

    /// Center index per cell, or [`UNCLAIMED`].
    pub fn assignment(&self) -> &[i32] {
        &self.assignment
    }

    pub fn center_of(&self, cell: usize) -> Option<usize> {
        let a = self.assignment[cell];
        (a >= 0).then_some(a as usize)
    }

    pub fn proposals(&self) -> u64 {
        self.proposals
    }

    pub fn territory_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centers.len()];
        for &a in &self.assignment {
            if a >= 0 {
                sizes[a as usize] += 1;
            }
        }
        sizes
    }

    pub fn is_sated(&self, center: usize) -> bool {
        self.territory_sizes()[center] == self.kappa
    }

    pub fn phase_stats(&self) -> PhaseStats {
        let sizes = self.territory_sizes();
        let claimed = sizes.iter().sum::<usize>();
        let unsated = sizes.iter().filter(|&&s| s < self.kappa).count();
        let unclaimed = self.assignment.len() - claimed;
        PhaseStats {
            claimed_fraction: claimed as f64 / self.assignment.len() as f64,
            unsated_fraction: unsated as f64 / sizes.len() as f64,
            unclaimed_volume: unclaimed as f64 * self.dom.cell_volume(),
        }
    }

    fn cell_distance2(&self, cell: usize, center: usize, buf: &mut [f64]) -> f64 {
        self.dom.cell_center_into(cell, buf);
        torus_distance2(buf, self.centers.point(center), self.dom.side())
    }

    /// Distance from the origin to the center owning the cell that contains
    /// the origin; `None` when that cell is unclaimed.
    pub fn measure_x(&self) -> Option<f64> {
        let origin = vec![0.0; self.dom.dim()];
        let cell = self.dom.cell_of(&origin);
        self.center_of(cell)
            .map(|c| torus_distance2(&origin, self.centers.point(c), self.dom.side()).sqrt())
    }

    /// Territory radius of every center (farthest owned cell center).
    pub fn radii(&self) -> Vec<Radius> {
        let mut r2 = vec![f64::NEG_INFINITY; self.centers.len()];
        let mut buf = vec![0.0; self.dom.dim()];
        for (cell, &a) in self.assignment.iter().enumerate() {
            if a >= 0 {
                let d2 = self.cell_distance2(cell, a as usize, &mut buf);
                let slot = &mut r2[a as usize];
                *slot = slot.max(d2);
            }
        }
        r2.into_iter()
            .map(|v| {
                if v < 0.0 {
                    Radius {
                        radius: 0.0,
                        empty: true,
                    }
                } else {
                    Radius {
                        radius: v.sqrt(),
                        empty: false,
                    }
                }
            })
            .collect()
    }

    pub fn measure_radius(&self, center: usize) -> Result<Radius> {
        if center >= self.centers.len() {
            return invalid(format!("center {center} out of range"));
        }
        Ok(self.radii()[center])
    }

    /// All `(cell, center)` pairs that are unstable with slack `delta`: the
    /// cell is unclaimed or is more than `delta` closer to the center than to
    /// its own, and the center is unsated or holds a cell more than `delta`
    /// farther away than this one. Sorted by cell, then center.
    pub fn check_stability(&self, delta: f64) -> Result<Vec<(usize, usize)>> {
        if !(delta >= 0.0) {
            return invalid(format!("slack must be non-negative, got {delta}"));
        }
        let d = self.dom.dim();
        let side = self.dom.side();
        let sizes = self.territory_sizes();
        let sated: Vec<bool> = sizes.iter().map(|&s| s == self.kappa).collect();
        let radii: Vec<f64> = self.radii().iter().map(|r| r.radius).collect();
        let unsated: Vec<usize> = (0..sizes.len()).filter(|&i| !sated[i]).collect();
        let r_max = (0..sizes.len())
            .filter(|&i| sated[i])
            .map(|i| radii[i])
            .fold(0.0, f64::max);
        let ids: Vec<u32> = (0..self.centers.len() as u32).collect();
        let index = CenterIndex::new(self.centers.coords(), d, side, &ids);

        let mut out = Vec::new();
        let mut p = vec![0.0; d];
        for (cell, &a) in self.assignment.iter().enumerate() {
            self.dom.cell_center_into(cell, &mut p);
            if a >= 0 {
                let own = torus_distance2(&p, self.centers.point(a as usize), side).sqrt();
                let reach = own - delta;
                if reach <= 0.0 {
                    continue;
                }
                index.for_each_within(&p, reach, |id, d2| {
                    let id = id as usize;
                    let dist = d2.sqrt();
                    if id != a as usize && dist < reach && (!sated[id] || radii[id] > dist + delta)
                    {
                        out.push((cell, id));
                    }
                });
            } else {
                out.extend(unsated.iter().map(|&u| (cell, u)));
                if r_max - delta > 0.0 {
                    index.for_each_within(&p, r_max - delta, |id, d2| {
                        let id = id as usize;
                        if sated[id] && radii[id] > d2.sqrt() + delta {
                            out.push((cell, id));
                        }
                    });
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    pub fn grid_header(&self) -> GridHeader {
        GridHeader {
            d: self.dom.dim() as u32,
            side: self.dom.side(),
            eps: self.dom.eps(),
            alpha: self.alpha,
            kappa: self.kappa as u64,
            center_count: self.centers.len() as u64,
            seed: self.centers.seed(),
        }
    }

    pub fn write_binary<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        io::write_grid(w, &self.grid_header(), &self.assignment)
    }

    /// Replaces the assignment wholesale (used to build hand-made
    /// allocations for testing the stability checker).
    pub fn with_assignment(&self, assignment: Vec<i32>) -> Result<Allocation> {
        if assignment.len() != self.assignment.len()
            || assignment
                .iter()
                .any(|&a| a < UNCLAIMED || a >= self.centers.len() as i32)
        {
            return invalid("assignment does not fit this grid");
        }
        Ok(Allocation {
            assignment,
            ..self.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_process::{palm_augment, sample_poisson};

    fn single(d: usize, side: f64, eps: f64, at: Vec<f64>) -> (CenterSet, Domain) {
        let cs = CenterSet::from_points(d, side, 1.0, &[at], false, 0).unwrap();
        (cs, Domain::new(d, side, eps).unwrap())
    }

    #[test]
    fn lone_center_takes_nearest_ball() {
        let (cs, dom) = single(1, 10.0, 0.01, vec![0.0]);
        let a = solve_grid(&cs, 1.0, &dom).unwrap();
        let claimed = a.territory_sizes()[0] as f64 * dom.cell_volume();
        assert!((claimed - 1.0).abs() <= 0.01);
        for (cell, &c) in a.assignment().iter().enumerate() {
            let x = crate::geometry::signed(dom.cell_center(cell)[0], 10.0);
            assert_eq!(c == 0, x.abs() < 0.5, "cell at {x}");
        }
        let r = a.measure_radius(0).unwrap();
        assert!((r.radius - 0.5).abs() <= 0.01);
        assert_eq!(a.measure_x(), Some(0.0));
        assert!(a.check_stability(0.0).unwrap().is_empty());
    }

    #[test]
    fn disc_radius_in_two_dimensions() {
        let (cs, dom) = single(2, 10.0, 0.02, vec![5.0, 5.0]);
        let a = solve_grid(&cs, std::f64::consts::PI, &dom).unwrap();
        assert!((a.measure_radius(0).unwrap().radius - 1.0).abs() <= 0.02);
    }

    #[test]
    fn greedy_center_far_from_origin() {
        let (cs, dom) = single(2, 20.0, 0.1, vec![3.0, 0.0]);
        let a = solve_grid(&cs, 100.0, &dom).unwrap();
        assert!((a.measure_x().unwrap() - 3.0).abs() <= 0.1);
    }

    #[test]
    fn huge_appetite_single_center() {
        let (cs, dom) = single(2, 2.0, 0.1, vec![0.3, 0.3]);
        let a = solve_grid(&cs, 1e6, &dom).unwrap();
        let s = a.phase_stats();
        assert_eq!(s.claimed_fraction, 1.0);
        assert_eq!(s.unsated_fraction, 1.0);
        assert_eq!(s.unclaimed_volume, 0.0);
    }

    #[test]
    fn unclaimed_origin_gives_infinite_x() {
        let (cs, dom) = single(2, 10.0, 0.1, vec![5.0, 5.0]);
        let a = solve_grid(&cs, 1.0, &dom).unwrap();
        assert_eq!(a.measure_x(), None);
        let s = a.phase_stats();
        assert!((s.unclaimed_volume - 99.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_inputs() {
        let (cs, dom) = single(1, 10.0, 0.1, vec![0.0]);
        assert!(solve_grid(&cs, 0.0, &dom).is_err());
        assert!(solve_grid(&cs, 0.01, &dom).is_err()); // rounds to zero cells
        let empty = CenterSet::from_points(1, 10.0, 1.0, &[], false, 0).unwrap();
        assert!(solve_grid(&empty, 1.0, &dom).is_err());
        let a = solve_grid(&cs, 1.0, &dom).unwrap();
        assert!(a.check_stability(-1.0).is_err());
        assert!(a.measure_radius(3).is_err());
    }

    #[test]
    fn two_centers_split() {
        let cs = CenterSet::from_points(1, 10.0, 1.0, &[vec![0.0], vec![0.4]], false, 0).unwrap();
        let dom = Domain::new(1, 10.0, 0.005).unwrap();
        let a = solve_grid(&cs, 1.0, &dom).unwrap();
        for (cell, &c) in a.assignment().iter().enumerate() {
            let x = crate::geometry::signed(dom.cell_center(cell)[0], 10.0);
            let want = if (-0.8..0.2).contains(&x) {
                0
            } else if (0.2..1.2).contains(&x) {
                1
            } else {
                UNCLAIMED
            };
            // boundary cells may go either way
            let near_edge = [-0.8, 0.2, 1.2].iter().any(|e| (x - e).abs() < 0.006);
            assert!(c == want || near_edge, "x={x} got {c} want {want}");
        }
    }

    #[test]
    fn swapped_cells_are_flagged() {
        // two centers tiling a circle of length 2; swap the two cells on
        // either side of their common boundary
        let cs = CenterSet::from_points(1, 2.0, 1.0, &[vec![0.5], vec![1.5]], false, 0).unwrap();
        let dom = Domain::new(1, 2.0, 0.1).unwrap();
        let a = solve_grid(&cs, 1.0, &dom).unwrap();
        assert!(a.check_stability(0.0).unwrap().is_empty());
        let c0 = dom.cell_of(&[0.95]);
        let c1 = dom.cell_of(&[1.05]);
        assert_eq!((a.assignment()[c0], a.assignment()[c1]), (0, 1));
        let mut asg = a.assignment().to_vec();
        asg.swap(c0, c1);
        let bad = a.with_assignment(asg).unwrap();
        // brute-force scan of all pairs agrees
        let mut brute = Vec::new();
        for cell in 0..dom.cell_count() {
            let p = dom.cell_center(cell);
            let own = bad.center_of(cell).unwrap();
            let d_own = torus_distance2(&p, cs.point(own), 2.0).sqrt();
            for xi in 0..2 {
                let dist = torus_distance2(&p, cs.point(xi), 2.0).sqrt();
                let covets = (0..dom.cell_count()).any(|c2| {
                    bad.center_of(c2) == Some(xi)
                        && torus_distance2(&dom.cell_center(c2), cs.point(xi), 2.0).sqrt() > dist
                });
                if xi != own && dist < d_own && covets {
                    brute.push((cell, xi));
                }
            }
        }
        assert_eq!(brute, vec![(c0, 0), (c1, 1)]);
        assert_eq!(bad.check_stability(0.0).unwrap(), brute);
    }

    #[test]
    fn poisson_solutions_are_stable() {
        for (d, side, eps) in [(1, 200.0, 0.05), (2, 10.0, 0.05)] {
            for alpha in [0.8, 1.0, 1.2] {
                let cs = palm_augment(&sample_poisson(d, side, 1.0, 17).unwrap()).unwrap();
                let dom = Domain::new(d, side, eps).unwrap();
                let a = solve_grid(&cs, alpha, &dom).unwrap();
                let delta = 2.0 * eps * (d as f64).sqrt();
                assert!(a.check_stability(delta).unwrap().is_empty());
                assert!(a.check_stability(0.0).unwrap().is_empty());
                assert!(a.territory_sizes().iter().all(|&s| s <= a.kappa()));
                assert!((a.achieved_alpha() - alpha).abs() <= dom.cell_volume());
            }
        }
    }

    #[test]
    fn binary_layout() {
        let (cs, dom) = single(1, 2.0, 0.1, vec![0.0]);
        let a = solve_grid(&cs, 0.2, &dom).unwrap();
        let mut bytes = Vec::new();
        a.write_binary(&mut bytes).unwrap();
        assert_eq!(bytes.len(), io::HEADER_LEN + 4 * 20);
        let (h, cells) = io::read_grid(&mut bytes.as_slice()).unwrap();
        assert_eq!(h.kappa, 2);
        assert_eq!(cells, a.assignment());
        assert_eq!(cells.iter().filter(|&&c| c == 0).count(), 2);
    }
}
