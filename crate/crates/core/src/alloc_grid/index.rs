//! Bucket grid over centers with ring-expansion queries on the torus.

use std::cmp::Ordering;

use crate::geometry::torus_distance2;

/// Preference key of a center as seen from a cell: squared distance, then
/// center index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Key {
    pub d2: f64,
    pub id: u32,
}

impl Key {
    #[inline]
    pub fn cmp(&self, other: &Key) -> Ordering {
        self.d2.total_cmp(&other.d2).then(self.id.cmp(&other.id))
    }

    #[inline]
    pub fn lt(&self, other: &Key) -> bool {
        self.cmp(other) == Ordering::Less
    }
}

pub(crate) struct CenterIndex<'a> {
    d: usize,
    side: f64,
    coords: &'a [f64],
    nb: usize,
    bside: f64,
    /// CSR layout: bucket b holds `items[start[b]..start[b + 1]]`.
    start: Vec<u32>,
    items: Vec<u32>,
}

impl<'a> CenterIndex<'a> {
    /// Indexes the centers `ids` (indices into `coords`, stride `d`).
    pub fn new(coords: &'a [f64], d: usize, side: f64, ids: &[u32]) -> Self {
        let count = ids.len().max(1) as f64;
        let target = (side.powi(d as i32) / count).powf(1.0 / d as f64);
        let max_buckets = (4 * ids.len() + 1).min(1 << 22) as f64;
        let cap = max_buckets.powf(1.0 / d as f64).floor().max(1.0);
        let nb = ((side / target).floor().max(1.0)).min(cap) as usize;
        let bside = side / nb as f64;
        let nbuckets = nb.pow(d as u32);

        let mut counts = vec![0u32; nbuckets + 1];
        let bucket: Vec<usize> = ids
            .iter()
            .map(|&id| {
                let p = &coords[id as usize * d..(id as usize + 1) * d];
                p.iter()
                    .fold(0, |acc, &x| acc * nb + ((x / bside) as usize).min(nb - 1))
            })
            .collect();
        for &b in &bucket {
            counts[b + 1] += 1;
        }
        for b in 0..nbuckets {
            counts[b + 1] += counts[b];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; ids.len()];
        for (&id, &b) in ids.iter().zip(&bucket) {
            items[fill[b] as usize] = id;
            fill[b] += 1;
        }
        CenterIndex {
            d,
            side,
            coords,
            nb,
            bside,
            start: counts,
            items,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    #[inline]
    fn point(&self, id: u32) -> &[f64] {
        &self.coords[id as usize * self.d..(id as usize + 1) * self.d]
    }

    fn home_bucket(&self, p: &[f64]) -> Vec<i64> {
        p.iter()
            .map(|&x| ((x / self.bside) as i64).min(self.nb as i64 - 1))
            .collect()
    }

    #[inline]
    fn bucket_items(&self, b: usize) -> &[u32] {
        &self.items[self.start[b] as usize..self.start[b + 1] as usize]
    }

    /// Calls `f` on every center whose bucket is at Chebyshev bucket distance
    /// exactly `r` from `home`. Requires `2r + 1 <= nb` so buckets are distinct.
    fn visit_ring(&self, home: &[i64], r: i64, f: &mut impl FnMut(u32)) {
        let d = self.d;
        let nb = self.nb as i64;
        if d == 1 {
            let mut visit = |o: i64| {
                let b = (home[0] + o).rem_euclid(nb) as usize;
                self.bucket_items(b).iter().for_each(|&id| f(id));
            };
            visit(-r);
            if r > 0 {
                visit(r);
            }
            return;
        }
        let mut off = vec![-r; d];
        // odometer over the first d-1 axes; the last axis is restricted to
        // +-r unless an earlier axis already sits on the ring
        loop {
            let on_ring = off[..d - 1].iter().any(|o| o.abs() == r);
            let mut prefix = 0usize;
            for k in 0..d - 1 {
                prefix = prefix * self.nb + (home[k] + off[k]).rem_euclid(nb) as usize;
            }
            let mut visit_last = |o: i64| {
                let b = prefix * self.nb + (home[d - 1] + o).rem_euclid(nb) as usize;
                self.bucket_items(b).iter().for_each(|&id| f(id));
            };
            if on_ring {
                for o in -r..=r {
                    visit_last(o);
                }
            } else if r == 0 {
                visit_last(0);
            } else {
                visit_last(-r);
                visit_last(r);
            }
            let mut k = d - 1;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                off[k] += 1;
                if off[k] <= r {
                    break;
                }
                off[k] = -r;
            }
        }
    }

    /// Smallest key strictly greater than `after` (or the smallest key
    /// overall when `after` is `None`).
    #[cfg(test)]
    pub fn next_after(&self, p: &[f64], after: Option<Key>) -> Option<Key> {
        if self.is_empty() {
            return None;
        }
        let admissible = |k: &Key| after.is_none_or(|a| a.lt(k));
        let mut best: Option<Key> = None;
        let consider = |id: u32, best: &mut Option<Key>| {
            let k = Key {
                d2: torus_distance2(p, self.point(id), self.side),
                id,
            };
            if admissible(&k) && best.is_none_or(|b| k.lt(&b)) {
                *best = Some(k);
            }
        };
        let diag = self.bside * (self.d as f64).sqrt();
        let r0 = match after {
            None => 0,
            Some(a) => ((a.d2.sqrt() / diag).ceil() as i64 - 1).max(0),
        };
        let home = self.home_bucket(p);
        let mut r = r0;
        loop {
            if 2 * r + 1 > self.nb as i64 {
                let mut best = None;
                for &id in &self.items {
                    consider(id, &mut best);
                }
                return best;
            }
            self.visit_ring(&home, r, &mut |id| consider(id, &mut best));
            if let Some(b) = best {
                if b.d2.sqrt() < r as f64 * self.bside {
                    return best;
                }
            }
            r += 1;
        }
    }

    /// Fills `out` with every key strictly greater than `after` up to the
    /// first completed ring radius that contains one, sorted descending so
    /// that `pop` yields them in increasing order. Empty when none remain.
    pub fn batch_after(&self, p: &[f64], after: Option<Key>, out: &mut Vec<Key>) {
        out.clear();
        if self.is_empty() {
            return;
        }
        let admissible = |k: &Key| after.is_none_or(|a| a.lt(k));
        let diag = self.bside * (self.d as f64).sqrt();
        let r0 = match after {
            None => 0,
            Some(a) => ((a.d2.sqrt() / diag).ceil() as i64 - 1).max(0),
        };
        let home = self.home_bucket(p);
        let mut r = r0;
        loop {
            if 2 * r + 1 > self.nb as i64 {
                out.clear();
                for &id in &self.items {
                    let k = Key {
                        d2: torus_distance2(p, self.point(id), self.side),
                        id,
                    };
                    if admissible(&k) {
                        out.push(k);
                    }
                }
                break;
            }
            self.visit_ring(&home, r, &mut |id| {
                let k = Key {
                    d2: torus_distance2(p, self.point(id), self.side),
                    id,
                };
                if admissible(&k) {
                    out.push(k);
                }
            });
            // centers in rings beyond r are at distance >= r * bside
            let reach = r as f64 * self.bside;
            let reach2 = reach * reach;
            if out.iter().any(|k| k.d2 < reach2) {
                out.retain(|k| k.d2 < reach2);
                break;
            }
            r += 1;
        }
        out.sort_unstable_by(|a, b| b.cmp(a));
    }

    /// Calls `f(id, d2)` for every center within distance `radius` of `p`
    /// (and possibly a few slightly beyond; callers filter).
    pub fn for_each_within(&self, p: &[f64], radius: f64, mut f: impl FnMut(u32, f64)) {
        let reach = (radius / self.bside).floor() as i64 + 1;
        let r2 = radius * radius;
        let mut emit = |id: u32| {
            let d2 = torus_distance2(p, self.point(id), self.side);
            if d2 <= r2 {
                f(id, d2);
            }
        };
        if 2 * reach + 1 > self.nb as i64 {
            self.items.iter().for_each(|&id| emit(id));
            return;
        }
        let home = self.home_bucket(p);
        for r in 0..=reach {
            self.visit_ring(&home, r, &mut emit);
        }
    }
}
