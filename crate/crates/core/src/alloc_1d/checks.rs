//! Certificates for one-dimensional allocations at appetite one: sites sit on
//! the level band of their center, and `F` pushes each territory forward to
//! Lebesgue measure on that band.
//!
//! Everything is evaluated in line coordinates around the origin, exactly at
//! the finitely many points where the piecewise-linear quantities can peak:
//! piece endpoints and both sides of every jump. Centers whose territory
//! crosses the seam of the circle are skipped.

use crate::error::{not_applicable, Result};

use super::fpath::FPath;
use super::solver::IntervalAllocation;

/// Values of `F` over a half-open piece `[u, v)`: at `u`, at `v-`, and on
/// both sides of each jump strictly inside.
fn piece_values(f: &FPath, u: f64, v: f64) -> impl Iterator<Item = f64> + '_ {
    let inner = f
        .jumps_between(u, v)
        .iter()
        .flat_map(move |&a| [f.left_limit(a), f.value(a)]);
    [f.value(u), f.left_limit(v)].into_iter().chain(inner)
}

/// Number of centers whose territory crosses the seam and so is skipped by
/// the checks.
pub fn seam_crossings(alloc: &IntervalAllocation) -> usize {
    alloc
        .line_territories()
        .iter()
        .filter(|t| t.is_none())
        .count()
}

/// Largest distance from `F(x)` to `[F(xi-), F(xi)]` over allocated sites `x`
/// with center `xi`. Zero when every site sits on its center's level band.
pub fn check_same_level(alloc: &IntervalAllocation, f: &FPath) -> f64 {
    let centers = alloc.line_positions();
    let mut worst: f64 = 0.0;
    for (i, terr) in alloc.line_territories().into_iter().enumerate() {
        let Some(terr) = terr else { continue };
        let (lo, hi) = (f.left_limit(centers[i]), f.value(centers[i]));
        for &(u, v) in &terr {
            for y in piece_values(f, u, v) {
                worst = worst.max(lo - y).max(y - hi);
            }
        }
    }
    worst
}

/// Splits pieces at the jumps of `F` so that `F` is linear with slope `-1`
/// on each part.
fn linear_parts(f: &FPath, pieces: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut parts = Vec::new();
    for &(u, v) in pieces {
        let mut a = u;
        for &j in f.jumps_between(u, v) {
            parts.push((a, j));
            a = j;
        }
        parts.push((a, v));
    }
    parts
}

/// Total-variation distance between the push-forward of Lebesgue measure on
/// the territory of `center` under `F` and Lebesgue measure on
/// `[F(xi-), F(xi)]`.
pub fn check_measure_preserving(
    alloc: &IntervalAllocation,
    f: &FPath,
    center: usize,
) -> Result<f64> {
    if !alloc.sated[center] {
        return not_applicable(format!("center {center} is unsated"));
    }
    let Some(terr) = alloc.line_territories().swap_remove(center) else {
        return not_applicable(format!("territory of center {center} crosses the seam"));
    };
    let xi = alloc.line_positions()[center];
    // +1 / -1 density events of the image measure and the target band
    let mut events: Vec<(f64, i32, i32)> = Vec::new();
    for (p, q) in linear_parts(f, &terr) {
        let top = f.value(p);
        let bottom = f.left_limit(q);
        events.push((bottom, 1, 0));
        events.push((top, -1, 0));
    }
    events.push((f.left_limit(xi), 0, 1));
    events.push((f.value(xi), 0, -1));
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut image, mut band) = (0i32, 0i32);
    let (mut over, mut under) = (0.0, 0.0);
    let mut prev = events[0].0;
    for (y, di, db) in events {
        let w = y - prev;
        let gap = image - band;
        if gap > 0 {
            over += gap as f64 * w;
        } else {
            under += -gap as f64 * w;
        }
        image += di;
        band += db;
        prev = y;
    }
    Ok(f64::max(over, under))
}

/// Largest residual of the level identities: for a site `t > xi` of center
/// `xi`, `F(t) = F(xi) - beta` with `beta` the territory mass in `[xi, t]`,
/// and for `s < xi`, `F(s) = F(xi-) + gamma` with `gamma` the mass in
/// `[s, xi]`.
pub fn level_residuals(alloc: &IntervalAllocation, f: &FPath) -> f64 {
    let centers = alloc.line_positions();
    let mut worst: f64 = 0.0;
    for (i, terr) in alloc.line_territories().into_iter().enumerate() {
        let Some(terr) = terr else { continue };
        let c = centers[i];
        let top = f.value(c);
        let mut beta = 0.0;
        for &(u, v) in terr.iter().filter(|p| p.1 > c) {
            let u = u.max(c);
            let mut check = |t: f64, y: f64| {
                worst = worst.max((y - (top - (beta + (t - u)))).abs());
            };
            check(u, f.value(u));
            for &a in f.jumps_between(u, v) {
                check(a, f.left_limit(a));
                check(a, f.value(a));
            }
            check(v, f.left_limit(v));
            beta += v - u;
        }
        let bottom = f.left_limit(c);
        let mut gamma = 0.0;
        for &(u, v) in terr.iter().rev().filter(|p| p.0 < c) {
            let v = v.min(c);
            let mut check = |s: f64, y: f64| {
                worst = worst.max((y - (bottom + gamma + (v - s))).abs());
            };
            check(v, f.left_limit(v));
            for &a in f.jumps_between(u, v) {
                check(a, f.left_limit(a));
                check(a, f.value(a));
            }
            check(u, f.value(u));
            gamma += v - u;
        }
    }
    worst
}
