//! Exact stable allocation on a circle.
//!
//! Every unsated center grows a ball at unit speed and claims the free sites
//! it sweeps over; a center stops once its territory reaches the appetite.
//! A site is therefore owned by the nearest center among those still growing
//! when the site is reached, and the result is the (a.e. unique) stable
//! allocation.
//!
//! The simulation is event driven. Between two satiation events the set of
//! growing ("active") centers is fixed, so an active center's territory at
//! time `t` is the free part of its Voronoi cell among active centers,
//! intersected with the ball of radius `t`. Its satiation time can be read
//! off by walking the free intervals outward. When a center is sated its
//! territory is frozen, it leaves the active ring, and only its two active
//! neighbours see their cells (and satiation times) change.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};
use std::ops::Bound::{Excluded, Unbounded};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{axis_gap, signed, wrap};
use crate::point_process::CenterSet;

/// Relative tolerance below which a territory counts as sated.
const SATED_TOL: f64 = 1e-9;

/// Free pieces shorter than this are rounding debris.
const SLIVER: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
struct Pos(f64);

impl PartialEq for Pos {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pos {}

impl PartialOrd for Pos {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pos {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Position in the free map plus the whole laps walked to reach it.
#[derive(Debug, Clone, Copy)]
struct Cursor {
    key: Pos,
    lap: f64,
}

/// Disjoint half-open intervals `[start, end)` inside `[0, side)`.
struct FreeSet {
    side: f64,
    map: BTreeMap<Pos, f64>,
}

/// A free piece seen from a center, as distances `[near, far]`.
#[derive(Debug, Clone, Copy)]
struct Piece {
    near: f64,
    far: f64,
}

impl FreeSet {
    fn new(side: f64) -> Self {
        let mut map = BTreeMap::new();
        map.insert(Pos(0.0), side);
        FreeSet { side, map }
    }

    /// Cursor over the free pieces met walking right from `x`, starting with
    /// the piece at or after distance `from` (`from < side`).
    fn right_from(&self, x: f64, from: f64) -> Option<Cursor> {
        let pos = x + from;
        let (lap, pos) = if pos >= self.side {
            (self.side, pos - self.side)
        } else {
            (0.0, pos)
        };
        let key = match self.map.range(..=Pos(pos)).next_back() {
            Some((s, &e)) if e > pos => *s,
            _ => match self.map.range((Excluded(Pos(pos)), Unbounded)).next() {
                Some((s, _)) => *s,
                None => {
                    return self.map.keys().next().map(|&k| Cursor {
                        key: k,
                        lap: lap + self.side,
                    })
                }
            },
        };
        Some(Cursor { key, lap })
    }

    /// Cursor over the free pieces met walking left from `x`.
    fn left_from(&self, x: f64, from: f64) -> Option<Cursor> {
        let pos = x - from;
        let (lap, pos) = if pos < 0.0 {
            (self.side, pos + self.side)
        } else {
            (0.0, pos)
        };
        match self.map.range(..Pos(pos)).next_back() {
            Some((s, _)) => Some(Cursor { key: *s, lap }),
            None => self.map.keys().next_back().map(|&k| Cursor {
                key: k,
                lap: lap + self.side,
            }),
        }
    }

    fn step_right(&self, c: Cursor) -> Option<Cursor> {
        match self.map.range((Excluded(c.key), Unbounded)).next() {
            Some((s, _)) => Some(Cursor {
                key: *s,
                lap: c.lap,
            }),
            None => self.map.keys().next().map(|&k| Cursor {
                key: k,
                lap: c.lap + self.side,
            }),
        }
    }

    fn step_left(&self, c: Cursor) -> Option<Cursor> {
        match self.map.range(..c.key).next_back() {
            Some((s, _)) => Some(Cursor {
                key: *s,
                lap: c.lap,
            }),
            None => self.map.keys().next_back().map(|&k| Cursor {
                key: k,
                lap: c.lap + self.side,
            }),
        }
    }

    /// Distances `[near, far]` from `x` of the piece under a right cursor.
    fn right_piece(&self, x: f64, c: Cursor) -> Piece {
        let e = self.map[&c.key];
        Piece {
            near: c.key.0 + c.lap - x,
            far: e + c.lap - x,
        }
    }

    fn left_piece(&self, x: f64, c: Cursor) -> Piece {
        let e = self.map[&c.key];
        Piece {
            near: x + c.lap - e,
            far: x + c.lap - c.key.0,
        }
    }

    /// Removes `[a, b)` (with `0 <= a < b <= side`) and returns the removed
    /// free pieces.
    fn take(&mut self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let mut taken = Vec::new();
        let first = self.map.range(..=Pos(a)).next_back().map(|(s, _)| *s);
        let start_key = match first {
            Some(s) if self.map[&s] > a => s,
            _ => Pos(a),
        };
        let keys: Vec<Pos> = self
            .map
            .range(start_key..)
            .take_while(|(s, _)| s.0 < b)
            .map(|(s, _)| *s)
            .collect();
        for s in keys {
            let e = self.map.remove(&s).expect("key present");
            let lo = s.0.max(a);
            let hi = e.min(b);
            if hi > lo {
                taken.push((lo, hi));
            }
            if s.0 < a {
                self.map.insert(s, a.min(e));
            }
            if e > b {
                self.map.insert(Pos(b.max(s.0)), e);
            }
        }
        taken
    }

    /// Removes the arc of sites within `left` to the left and `right` to the
    /// right of `x` (both at most `side / 2`).
    fn take_arc(&mut self, x: f64, left: f64, right: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let side = self.side;
        let lo = x - left;
        let hi = x + right;
        if hi - lo <= 0.0 {
            return out;
        }
        let lo_w = wrap(lo, side);
        let span = (hi - lo).min(side);
        if lo_w + span <= side {
            out.extend(self.take(lo_w, lo_w + span));
        } else {
            out.extend(self.take(lo_w, side));
            out.extend(self.take(0.0, lo_w + span - side));
        }
        out
    }

    fn pieces(&self) -> Vec<(f64, f64)> {
        self.map.iter().map(|(s, &e)| (s.0, e)).collect()
    }
}

/// Smallest `t >= start` at which the free volume within the arc
/// `[x - min(t, left), x + min(t, right)]` reaches `target`, given that it is
/// `vol` at `start`. Also reports the volume at `now` (`start <= now`).
#[allow(clippy::too_many_arguments)]
fn satiation_time(
    free: &FreeSet,
    x: f64,
    left: f64,
    right: f64,
    start: f64,
    vol: f64,
    target: f64,
    now: f64,
) -> (f64, f64) {
    // each side is a cursor plus its piece clipped to the extent; `None`
    // once the side is exhausted
    let clip = |p: Piece, ext: f64| {
        (p.near < ext).then(|| Piece {
            near: p.near,
            far: p.far.min(ext),
        })
    };
    let mut lc = free.left_from(x, start);
    let mut rc = free.right_from(x, start);
    let mut lp = lc.and_then(|c| clip(free.left_piece(x, c), left));
    let mut rp = rc.and_then(|c| clip(free.right_piece(x, c), right));
    let mut tau = start;
    let mut v = vol;
    let mut at_now = if now <= start { Some(vol) } else { None };
    loop {
        // drop pieces already behind the front
        while lp.is_some_and(|p| p.far <= tau) {
            lc = lc.and_then(|c| free.step_left(c));
            lp = lc.and_then(|c| clip(free.left_piece(x, c), left));
        }
        while rp.is_some_and(|p| p.far <= tau) {
            rc = rc.and_then(|c| free.step_right(c));
            rp = rc.and_then(|c| clip(free.right_piece(x, c), right));
        }
        let mut slope = 0.0;
        let mut bp = f64::INFINITY;
        for p in [lp, rp].into_iter().flatten() {
            if tau >= p.near {
                slope += 1.0;
                bp = bp.min(p.far);
            } else {
                bp = bp.min(p.near);
            }
        }
        if bp.is_infinite() {
            return (f64::INFINITY, at_now.unwrap_or(v));
        }
        if at_now.is_none() && now <= bp {
            at_now = Some(v + slope * (now - tau));
        }
        if slope > 0.0 && v + slope * (bp - tau) >= target {
            let t = tau + (target - v) / slope;
            return (t.max(now), at_now.unwrap_or(target));
        }
        v += slope * (bp - tau);
        tau = bp;
    }
}

/// Stable allocation of a circle to finitely many centers, with territories
/// stored as half-open intervals in `[0, side)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalAllocation {
    pub side: f64,
    pub alpha: f64,
    /// Center positions in `[0, side)`, indexed like the input configuration.
    pub positions: Vec<f64>,
    /// Territory of each center as sorted, merged `[left, right)` pieces.
    pub territories: Vec<Vec<(f64, f64)>>,
    pub sated: Vec<bool>,
    /// Radius at which each center was sated (`None` if never).
    #[serde(skip)]
    pub satiation: Vec<Option<f64>>,
    pub unclaimed: Vec<(f64, f64)>,
    #[serde(skip)]
    lookup: Vec<(f64, f64, usize)>,
}

fn normalise(mut pieces: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pieces.retain(|p| p.1 > p.0);
    pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(pieces.len());
    for p in pieces {
        match out.last_mut() {
            Some(last) if last.1 >= p.0 => last.1 = last.1.max(p.1),
            _ => out.push(p),
        }
    }
    out
}

/// Hands free pieces shorter than [`SLIVER`] (rounding debris left between
/// frozen territories) to the territory they touch; returns the rest.
fn absorb_slivers(
    pieces: Vec<(f64, f64)>,
    terr: &mut [Vec<(f64, f64)>],
    side: f64,
) -> Vec<(f64, f64)> {
    let mut keep = Vec::new();
    let mut slivers = Vec::new();
    for p in pieces {
        if p.1 - p.0 < SLIVER {
            slivers.push(p);
        } else {
            keep.push(p);
        }
    }
    if slivers.is_empty() {
        return normalise(keep);
    }
    let mut ends: Vec<(f64, usize)> = Vec::new();
    let mut starts: Vec<(f64, usize)> = Vec::new();
    for (k, t) in terr.iter().enumerate() {
        for &(l, r) in t {
            ends.push((r % side, k));
            starts.push((l, k));
        }
    }
    let by_pos = |v: &mut Vec<(f64, usize)>| v.sort_by(|a, b| a.0.total_cmp(&b.0));
    by_pos(&mut ends);
    by_pos(&mut starts);
    let near = |v: &[(f64, usize)], y: f64| {
        let i = v.partition_point(|e| e.0 < y - SLIVER);
        [i, 0]
            .into_iter()
            .filter_map(|j| v.get(j))
            .find(|e| axis_gap(e.0, y, side) < SLIVER)
            .map(|e| e.1)
    };
    for (u, v) in slivers {
        match near(&ends, u).or_else(|| near(&starts, v % side)) {
            Some(k) => terr[k].push((u, v)),
            None => keep.push((u, v)),
        }
    }
    normalise(keep)
}

/// Stable allocation with appetite `alpha` of the circle of length
/// `centers.side()` to the (one-dimensional) configuration `centers`.
pub fn solve_1d(centers: &CenterSet, alpha: f64) -> Result<IntervalAllocation> {
    if centers.dim() != 1 {
        return invalid("solve_1d needs a one-dimensional configuration");
    }
    if centers.is_empty() {
        return invalid("no centers");
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return invalid(format!("appetite must be positive, got {alpha}"));
    }
    let side = centers.side();
    let n = centers.len();
    let positions: Vec<f64> = centers.points().map(|p| p[0]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| positions[a].total_cmp(&positions[b]));
    if order.windows(2).any(|w| positions[w[0]] == positions[w[1]]) {
        return invalid("duplicate center positions");
    }
    let x: Vec<f64> = order.iter().map(|&i| positions[i]).collect();

    let mut free = FreeSet::new(side);
    let mut prev: Vec<usize> = (0..n).map(|k| (k + n - 1) % n).collect();
    let mut next: Vec<usize> = (0..n).map(|k| (k + 1) % n).collect();
    let mut active = vec![true; n];
    let mut n_active = n;
    // volume already claimed by each active center at radius `cache_t`
    let mut cache_t = vec![0.0; n];
    let mut cache_v = vec![0.0; n];
    let mut version = vec![0u32; n];
    let mut sate_time: Vec<Option<f64>> = vec![None; n];
    let mut terr: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
    let mut heap: BinaryHeap<Reverse<(Pos, usize, u32)>> = BinaryHeap::new();

    let extents = |k: usize, prev: &[usize], next: &[usize], n_active: usize| -> (f64, f64) {
        if n_active == 1 {
            return (side / 2.0, side / 2.0);
        }
        let gl = wrap(x[k] - x[prev[k]], side);
        let gr = wrap(x[next[k]] - x[k], side);
        let gl = if gl == 0.0 { side } else { gl };
        let gr = if gr == 0.0 { side } else { gr };
        (gl / 2.0, gr / 2.0)
    };

    for k in 0..n {
        let (a, b) = extents(k, &prev, &next, n_active);
        let (t, v) = satiation_time(&free, x[k], a, b, 0.0, 0.0, alpha, 0.0);
        cache_v[k] = v;
        if t.is_finite() {
            heap.push(Reverse((Pos(t), k, 0)));
        }
    }

    while let Some(Reverse((Pos(t), k, ver))) = heap.pop() {
        if !active[k] || ver != version[k] {
            continue;
        }
        let (a, b) = extents(k, &prev, &next, n_active);
        terr[k] = free.take_arc(x[k], a.min(t), b.min(t));
        sate_time[k] = Some(t);
        active[k] = false;
        n_active -= 1;
        if n_active == 0 {
            break;
        }
        let (p, q) = (prev[k], next[k]);
        next[p] = q;
        prev[q] = p;
        let mut touched = vec![p];
        if q != p {
            touched.push(q);
        }
        for j in touched {
            let (a, b) = extents(j, &prev, &next, n_active);
            let (tj, vj) = satiation_time(&free, x[j], a, b, cache_t[j], cache_v[j], alpha, t);
            cache_t[j] = t;
            cache_v[j] = vj;
            version[j] += 1;
            if tj.is_finite() {
                heap.push(Reverse((Pos(tj), j, version[j])));
            }
        }
    }

    // centers that never reach their appetite keep their whole cell
    for k in 0..n {
        if active[k] {
            let (a, b) = extents(k, &prev, &next, n_active);
            terr[k] = free.take_arc(x[k], a, b);
        }
    }
    let unclaimed = absorb_slivers(free.pieces(), &mut terr, side);

    let mut territories = vec![Vec::new(); n];
    let mut satiation = vec![None; n];
    let mut sated = vec![false; n];
    for (k, &orig) in order.iter().enumerate() {
        let pieces = normalise(std::mem::take(&mut terr[k]));
        let vol: f64 = pieces.iter().map(|p| p.1 - p.0).sum();
        sated[orig] = sate_time[k].is_some() || vol >= alpha * (1.0 - SATED_TOL);
        satiation[orig] = sate_time[k];
        territories[orig] = pieces;
    }
    let mut alloc = IntervalAllocation {
        side,
        alpha,
        positions,
        territories,
        sated,
        satiation,
        unclaimed,
        lookup: Vec::new(),
    };
    alloc.build_lookup();
    Ok(alloc)
}

impl IntervalAllocation {
    /// Builds an allocation from explicit territories (in `[0, side)`
    /// coordinates, pieces may wrap past `side`). Territories must be
    /// pairwise disjoint and no larger than `alpha`.
    pub fn from_territories(
        side: f64,
        alpha: f64,
        positions: Vec<f64>,
        territories: Vec<Vec<(f64, f64)>>,
    ) -> Result<Self> {
        if positions.len() != territories.len() {
            return invalid("one territory per center required");
        }
        let mut free = FreeSet::new(side);
        let mut terr = Vec::with_capacity(territories.len());
        for t in territories {
            let mut pieces = Vec::new();
            for (l, r) in t {
                if !(l < r && r - l <= side) {
                    return invalid(format!("bad territory piece [{l}, {r})"));
                }
                let taken = free.take_arc(l, 0.0, r - l);
                if (taken.iter().map(|p| p.1 - p.0).sum::<f64>() - (r - l)).abs() > 1e-12 * side {
                    return invalid("territories overlap");
                }
                pieces.extend(taken);
            }
            let pieces = normalise(pieces);
            if pieces.iter().map(|p| p.1 - p.0).sum::<f64>() > alpha * (1.0 + SATED_TOL) {
                return invalid("territory exceeds the appetite");
            }
            terr.push(pieces);
        }
        let sated = terr
            .iter()
            .map(|t| t.iter().map(|p| p.1 - p.0).sum::<f64>() >= alpha * (1.0 - SATED_TOL))
            .collect();
        let mut alloc = IntervalAllocation {
            side,
            alpha,
            satiation: vec![None; positions.len()],
            positions: positions.into_iter().map(|p| wrap(p, side)).collect(),
            territories: terr,
            sated,
            unclaimed: normalise(free.pieces()),
            lookup: Vec::new(),
        };
        alloc.build_lookup();
        Ok(alloc)
    }

    fn build_lookup(&mut self) {
        let mut lookup: Vec<(f64, f64, usize)> = self
            .territories
            .iter()
            .enumerate()
            .flat_map(|(i, t)| t.iter().map(move |&(l, r)| (l, r, i)))
            .collect();
        lookup.sort_by(|a, b| a.0.total_cmp(&b.0));
        self.lookup = lookup;
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Center owning site `y`, or `None` when `y` is unclaimed.
    pub fn owner_at(&self, y: f64) -> Option<usize> {
        let y = wrap(y, self.side);
        let i = self.lookup.partition_point(|p| p.0 <= y);
        if i == 0 {
            return None;
        }
        let (l, r, c) = self.lookup[i - 1];
        (l <= y && y < r).then_some(c)
    }

    pub fn territory_volume(&self, center: usize) -> f64 {
        self.territories[center].iter().map(|p| p.1 - p.0).sum()
    }

    pub fn claimed_volume(&self) -> f64 {
        (0..self.len()).map(|i| self.territory_volume(i)).sum()
    }

    /// Supremum distance from a center to its territory (0 when empty).
    pub fn radius(&self, center: usize) -> f64 {
        let x = self.positions[center];
        let half = self.side / 2.0;
        self.territories[center]
            .iter()
            .map(|&(l, r)| {
                let contains_antipode = {
                    let a = wrap(x + half, self.side);
                    l < a && a < r
                };
                if contains_antipode {
                    half
                } else {
                    axis_gap(l, x, self.side).max(axis_gap(r, x, self.side))
                }
            })
            .fold(0.0, f64::max)
    }

    /// Distance from the origin site to its center; `None` if unclaimed.
    pub fn x_distance(&self) -> Option<f64> {
        self.owner_at(0.0)
            .map(|c| axis_gap(self.positions[c], 0.0, self.side))
    }

    /// Territories in line coordinates `[-side/2, side/2)` around the origin.
    /// Entries are `None` for centers whose territory straddles the seam at
    /// `+-side/2`, where the circle is cut open.
    pub fn line_territories(&self) -> Vec<Option<Vec<(f64, f64)>>> {
        let half = self.side / 2.0;
        (0..self.len())
            .map(|i| {
                let c = signed(self.positions[i], self.side);
                let mut out = Vec::new();
                for &(l, r) in &self.territories[i] {
                    let u = c + signed(l - self.positions[i], self.side);
                    let v = u + (r - l);
                    if u < -half || v > half {
                        return None;
                    }
                    out.push((u, v));
                }
                Some(normalise(out))
            })
            .collect()
    }

    /// Center positions in line coordinates.
    pub fn line_positions(&self) -> Vec<f64> {
        self.positions
            .iter()
            .map(|&p| signed(p, self.side))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut a: IntervalAllocation = serde_json::from_str(s)?;
        a.satiation = vec![None; a.positions.len()];
        a.build_lookup();
        Ok(a)
    }
}
