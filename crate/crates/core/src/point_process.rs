//! Center configurations: homogeneous Poisson samples on the torus, Palm
//! augmentation, two-sided renewal processes and monotone couplings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{signed, wrap};

/// One splitmix64 output step.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `i` derived from a base seed.
pub fn replicate_seed(base: u64, i: u64) -> u64 {
    splitmix64(base ^ i)
}

pub(crate) fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Metadata attached to renewal samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalMeta {
    pub law: IncrementLaw,
    /// Half-length of the window the walk was generated on.
    pub half_window: f64,
    /// Length of the artificial gap that closes the circle at the seam.
    pub seam_gap: f64,
    /// Zero-variance increments (deterministic law).
    pub degenerate: bool,
}

/// A finite configuration of centers in `[0, L)^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterSet {
    d: usize,
    side: f64,
    intensity: f64,
    palm: bool,
    seed: u64,
    coords: Vec<f64>,
    renewal: Option<RenewalMeta>,
}

#[derive(Serialize, Deserialize)]
struct CenterSetDoc {
    d: usize,
    #[serde(rename = "L")]
    side: f64,
    lambda: f64,
    palm: bool,
    seed: u64,
    points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    renewal: Option<RenewalMeta>,
}

impl CenterSet {
    /// Builds a configuration from explicit points, which are wrapped into
    /// the window. `palm` requires the origin to be the first point.
    pub fn from_points(
        d: usize,
        side: f64,
        intensity: f64,
        points: &[Vec<f64>],
        palm: bool,
        seed: u64,
    ) -> Result<Self> {
        if d == 0 || !(side > 0.0) {
            return invalid("window needs positive dimension and side");
        }
        let mut coords = Vec::with_capacity(points.len() * d);
        for p in points {
            if p.len() != d {
                return invalid(format!("point {p:?} does not have {d} coordinates"));
            }
            coords.extend(p.iter().map(|&x| wrap(x, side)));
        }
        let cs = CenterSet {
            d,
            side,
            intensity,
            palm,
            seed,
            coords,
            renewal: None,
        };
        if palm && (cs.is_empty() || cs.point(0).iter().any(|&x| x != 0.0)) {
            return invalid("palm configuration must start with the origin");
        }
        Ok(cs)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn is_palm(&self) -> bool {
        self.palm
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.d)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn renewal(&self) -> Option<&RenewalMeta> {
        self.renewal.as_ref()
    }

    /// True when the point lies in the box `[-half, half)^d` around the origin.
    pub fn in_box(&self, i: usize, half: f64) -> bool {
        self.point(i).iter().all(|&x| {
            let s = signed(x, self.side);
            -half <= s && s < half
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = CenterSetDoc {
            d: self.d,
            side: self.side,
            lambda: self.intensity,
            palm: self.palm,
            seed: self.seed,
            points: self.points().map(<[f64]>::to_vec).collect(),
            renewal: self.renewal.clone(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: CenterSetDoc = serde_json::from_str(s)?;
        let mut cs =
            CenterSet::from_points(doc.d, doc.side, doc.lambda, &doc.points, doc.palm, doc.seed)?;
        cs.renewal = doc.renewal;
        Ok(cs)
    }
}

fn check_rate(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return invalid(format!("intensity must be positive, got {lambda}"));
    }
    Ok(())
}

fn push_uniform(rng: &mut ChaCha8Rng, d: usize, side: f64, count: usize, out: &mut Vec<f64>) {
    out.reserve(count * d);
    for _ in 0..count * d {
        out.push(wrap(rng.random::<f64>() * side, side));
    }
}

fn poisson_count(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .expect("positive finite mean")
        .sample(rng) as usize
}

/// Homogeneous Poisson process of intensity `lambda` on the torus `[0, side)^d`.
pub fn sample_poisson(d: usize, side: f64, lambda: f64, seed: u64) -> Result<CenterSet> {
    check_rate(lambda)?;
    if d == 0 || !(side > 0.0) {
        return invalid("window needs positive dimension and side");
    }
    let mut rng = rng_from(seed);
    let n = poisson_count(&mut rng, lambda * side.powi(d as i32));
    let mut coords = Vec::new();
    push_uniform(&mut rng, d, side, n, &mut coords);
    Ok(CenterSet {
        d,
        side,
        intensity: lambda,
        palm: false,
        seed,
        coords,
        renewal: None,
    })
}

/// Adds a center at the origin (the Palm version of a Poisson process).
pub fn palm_augment(cs: &CenterSet) -> Result<CenterSet> {
    if cs.palm || cs.points().any(|p| p.iter().all(|&x| x == 0.0)) {
        return invalid("configuration already contains the origin");
    }
    let mut coords = vec![0.0; cs.d];
    coords.extend_from_slice(&cs.coords);
    Ok(CenterSet {
        palm: true,
        coords,
        ..cs.clone()
    })
}

/// Superposition of independent Poisson layers of intensities
/// `rates[0], rates[1] - rates[0], ...`; element `k` of the result is a
/// Poisson process of intensity `rates[k]` containing all earlier ones.
pub fn sample_nested(d: usize, side: f64, rates: &[f64], seed: u64) -> Result<Vec<CenterSet>> {
    if rates.is_empty() {
        return invalid("need at least one rate");
    }
    check_rate(rates[0])?;
    if rates.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("rates must be strictly increasing");
    }
    let mut out: Vec<CenterSet> = Vec::with_capacity(rates.len());
    let mut coords = Vec::new();
    let mut prev = 0.0;
    for (k, &rate) in rates.iter().enumerate() {
        let mut rng = rng_from(replicate_seed(seed, k as u64));
        let n = poisson_count(&mut rng, (rate - prev) * side.powi(d as i32));
        push_uniform(&mut rng, d, side, n, &mut coords);
        prev = rate;
        out.push(CenterSet {
            d,
            side,
            intensity: rate,
            palm: false,
            seed,
            coords: coords.clone(),
            renewal: None,
        });
    }
    Ok(out)
}

/// Monotone coupling `(Pi_1, Pi_lambda)` with `Pi_lambda = Pi_1 + Pi_(lambda-1)`.
pub fn sample_coupled(
    d: usize,
    side: f64,
    lambda: f64,
    seed: u64,
) -> Result<(CenterSet, CenterSet)> {
    if !(lambda > 1.0) {
        return invalid(format!("coupling needs lambda > 1, got {lambda}"));
    }
    let mut layers = sample_nested(d, side, &[1.0, lambda], seed)?;
    let top = layers.pop().expect("two layers");
    let base = layers.pop().expect("two layers");
    Ok((base, top))
}

/// Keeps the centers inside `[-half, half)^d` and replaces everything
/// outside by a fresh Poisson process of intensity `lambda`. Kept centers
/// come first, in their original order; a palm origin stays at index 0.
pub fn resample_outside(cs: &CenterSet, half: f64, lambda: f64, seed: u64) -> Result<CenterSet> {
    check_rate(lambda)?;
    let mut coords: Vec<f64> = (0..cs.len())
        .filter(|&i| cs.in_box(i, half))
        .flat_map(|i| cs.point(i).to_vec())
        .collect();
    let fresh = sample_poisson(cs.d, cs.side, lambda, seed)?;
    for i in 0..fresh.len() {
        if !fresh.in_box(i, half) {
            coords.extend_from_slice(fresh.point(i));
        }
    }
    Ok(CenterSet {
        coords,
        renewal: None,
        ..cs.clone()
    })
}

/// Law of the gaps of a renewal process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum IncrementLaw {
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
    Gamma { shape: f64, scale: f64 },
    Deterministic { value: f64 },
    Normal { mean: f64, sd: f64 },
}

impl IncrementLaw {
    pub fn exponential() -> Self {
        IncrementLaw::Exponential { rate: 1.0 }
    }

    pub fn uniform_0_2() -> Self {
        IncrementLaw::Uniform { lo: 0.0, hi: 2.0 }
    }

    /// Gamma(k, 1/k): unit mean, variance 1/k.
    pub fn gamma(k: f64) -> Self {
        IncrementLaw::Gamma {
            shape: k,
            scale: 1.0 / k,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            IncrementLaw::Exponential { rate } => 1.0 / rate,
            IncrementLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            IncrementLaw::Gamma { shape, scale } => shape * scale,
            IncrementLaw::Deterministic { value } => value,
            IncrementLaw::Normal { mean, .. } => mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            IncrementLaw::Exponential { rate } => 1.0 / (rate * rate),
            IncrementLaw::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            IncrementLaw::Gamma { shape, scale } => shape * scale * scale,
            IncrementLaw::Deterministic { .. } => 0.0,
            IncrementLaw::Normal { sd, .. } => sd * sd,
        }
    }

    /// Infimum of the support.
    pub fn support_min(&self) -> f64 {
        match *self {
            IncrementLaw::Uniform { lo, .. } => lo,
            IncrementLaw::Deterministic { value } => value,
            IncrementLaw::Normal { .. } => f64::NEG_INFINITY,
            _ => 0.0,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.variance() == 0.0
    }

    /// Accepts only non-negative laws with unit mean and valid parameters.
    pub fn validate_unit_mean(&self) -> Result<()> {
        let ok = match *self {
            IncrementLaw::Exponential { rate } => rate > 0.0,
            IncrementLaw::Uniform { lo, hi } => hi > lo,
            IncrementLaw::Gamma { shape, scale } => shape > 0.0 && scale > 0.0,
            IncrementLaw::Deterministic { value } => value > 0.0,
            IncrementLaw::Normal { sd, .. } => sd >= 0.0,
        };
        if !ok {
            return invalid(format!("bad parameters for {self:?}"));
        }
        if (self.mean() - 1.0).abs() > 1e-12 {
            return invalid(format!(
                "increment law must have unit mean, got {}",
                self.mean()
            ));
        }
        if self.support_min() < 0.0 {
            return invalid(format!("increment law {self:?} can take negative values"));
        }
        Ok(())
    }

    /// A sampler for this law; parameters must already be valid.
    pub fn sampler(&self) -> IncrementSampler {
        match *self {
            IncrementLaw::Exponential { rate } => IncrementSampler::Exp(Exp::new(rate).unwrap()),
            IncrementLaw::Uniform { lo, hi } => IncrementSampler::Uniform(lo, hi),
            IncrementLaw::Gamma { shape, scale } => {
                IncrementSampler::Gamma(Gamma::new(shape, scale).unwrap())
            }
            IncrementLaw::Deterministic { value } => IncrementSampler::Const(value),
            IncrementLaw::Normal { mean, sd } => {
                IncrementSampler::Normal(Normal::new(mean, sd).unwrap())
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum IncrementSampler {
    Exp(Exp<f64>),
    Uniform(f64, f64),
    Gamma(Gamma<f64>),
    Const(f64),
    Normal(Normal<f64>),
}

impl Distribution<f64> for IncrementSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            IncrementSampler::Exp(e) => e.sample(rng),
            IncrementSampler::Uniform(lo, hi) => lo + (hi - lo) * rng.random::<f64>(),
            IncrementSampler::Gamma(g) => g.sample(rng),
            IncrementSampler::Const(v) => *v,
            IncrementSampler::Normal(n) => n.sample(rng),
        }
    }
}

/// Palm version of a stationary renewal process on `[-half, half)`: a
/// two-sided walk from a center at 0 with i.i.d. unit-mean gaps, stored on
/// the circle of length `2 * half` (the seam sits at `+-half`).
pub fn sample_renewal_palm(half: f64, law: IncrementLaw, seed: u64) -> Result<CenterSet> {
    if !(half > 0.0) {
        return invalid("window half-length must be positive");
    }
    law.validate_unit_mean()?;
    if law.is_degenerate() {
        log::warn!("renewal sample with zero-variance increments {law:?}");
    }
    let sampler = law.sampler();
    let mut rng = rng_from(seed);
    let side = 2.0 * half;
    let mut pos = vec![0.0];
    let mut x = 0.0;
    loop {
        x += sampler.sample(&mut rng);
        if x >= half {
            break;
        }
        pos.push(x);
    }
    let right_end = pos.last().copied().unwrap_or(0.0);
    let mut y = 0.0;
    let mut left_end = 0.0;
    loop {
        y -= sampler.sample(&mut rng);
        if y < -half {
            break;
        }
        pos.push(y);
        left_end = y;
    }
    let seam_gap = (half - right_end) + (left_end + half);
    let coords = pos.iter().map(|&p| wrap(p, side)).collect();
    Ok(CenterSet {
        d: 1,
        side,
        intensity: 1.0,
        palm: true,
        seed,
        coords,
        renewal: Some(RenewalMeta {
            law,
            half_window: half,
            seam_gap,
            degenerate: law.is_degenerate(),
        }),
    })
}
