//! Uniform ball distributions, seeded sampling streams, and the explicit
//! polynomial feature map.

use std::io::{Read, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::specfun::{ln_ball_volume, ln_gamma};

/// Random stream used by every Monte Carlo routine.
pub type StreamRng = ChaCha8Rng;

/// Independent stream `stream` of the generator keyed by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform distribution on the ball `B_d(radius, center)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallSpec {
    center: Vec<f64>,
    radius: f64,
}

impl BallSpec {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::invalid("ball dimension must be at least 1"));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("ball center must be finite"));
        }
        Ok(Self { center, radius })
    }

    /// Unit ball centred at the origin of `R^d`.
    pub fn unit(d: usize) -> Result<Self> {
        Self::new(vec![0.0; d], 1.0)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Writes one uniform draw into `out`: a normalised Gaussian direction
    /// scaled by `radius · U^{1/d}`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim());
        let d = self.dim();
        let norm = loop {
            let mut n2 = 0.0;
            for o in out.iter_mut() {
                let g: f64 = rng.sample(StandardNormal);
                *o = g;
                n2 += g * g;
            }
            if n2 > 0.0 {
                break n2.sqrt();
            }
        };
        let u: f64 = rng.random();
        let r = if d == 1 { u } else { u.powf(1.0 / d as f64) } * self.radius;
        for (o, c) in out.iter_mut().zip(&self.center) {
            *o = c + *o / norm * r;
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.sample_into(rng, &mut out);
        out
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Parameters of the polynomial kernel `κ(x, y) = (b² + x·y)^deg` on `R^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub deg: u32,
    pub bias: f64,
    pub dim: usize,
}

impl KernelSpec {
    pub fn new(deg: u32, bias: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("kernel dimension must be at least 1"));
        }
        if !(bias >= 1.0) || !bias.is_finite() {
            return Err(Error::invalid(format!(
                "kernel bias must satisfy b >= 1, got {bias}"
            )));
        }
        if bias == 1.0 {
            log::warn!("kernel bias b = 1 sits on the boundary of the admissible range b >= 1");
        }
        Ok(Self { deg, bias, dim })
    }

    /// Dimension of the feature space, `C(dim + deg, deg)`, or `None` on overflow.
    pub fn feature_count(&self) -> Option<u64> {
        binomial(self.dim as u64 + self.deg as u64, self.deg as u64)
    }
}

fn binomial(n: u64, k: u64) -> Option<u64> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// `(b² + x·y)^deg`.
pub fn kernel(x: &[f64], y: &[f64], spec: &KernelSpec) -> f64 {
    (spec.bias * spec.bias + dot(x, y)).powi(spec.deg as i32)
}

/// Coordinates of `φ(x)` for a [`FeatureMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub coords: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        dot(&self.coords, &other.coords)
    }
}

#[derive(Debug, Clone)]
struct Monomial {
    coef: f64,
    // exponent of the bias coordinate, then of x_1..x_d
    exps: Vec<u32>,
}

/// Explicit feature map with `⟨φ(x), φ(y)⟩ = (b² + x·y)^deg`.
///
/// Coordinates are indexed by multi-indices `(j₀, j₁, …, j_d)` with
/// `|j| = deg`, where `j₀` is the power of the bias. They are ordered
/// lexicographically with larger exponents first, so the first coordinate
/// is the pure bias monomial `b^deg` and the last is `x_d^deg`. Coordinate
/// `j` equals `√(deg! / ∏ j_i!) · b^{j₀} · ∏ x_i^{j_i}`.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    spec: KernelSpec,
    terms: Vec<Monomial>,
}

impl FeatureMap {
    /// Default cap on the feature dimension.
    pub const DEFAULT_MAX_FEATURES: u64 = 1 << 20;

    pub fn new(spec: KernelSpec) -> Result<Self> {
        Self::with_cap(spec, Self::DEFAULT_MAX_FEATURES)
    }

    pub fn with_cap(spec: KernelSpec, max_features: u64) -> Result<Self> {
        let n = spec.feature_count().unwrap_or(u64::MAX);
        if n > max_features {
            return Err(Error::Resource(format!(
                "feature dimension C({} + {}, {}) = {n} exceeds the cap {max_features}",
                spec.dim, spec.deg, spec.deg
            )));
        }
        let mut indices = Vec::with_capacity(n as usize);
        let mut current = vec![0u32; spec.dim + 1];
        push_multi_indices(spec.deg, 0, &mut current, &mut indices);

        let ln_fact = |k: u32| ln_gamma(k as f64 + 1.0);
        let terms = indices
            .into_iter()
            .map(|exps| {
                let ln_multinomial =
                    ln_fact(spec.deg) - exps.iter().map(|&j| ln_fact(j)).sum::<f64>();
                let coef = (0.5 * ln_multinomial).exp() * spec.bias.powi(exps[0] as i32);
                Monomial { coef, exps }
            })
            .collect();
        Ok(Self { spec, terms })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Multi-index `(j₀, …, j_d)` of coordinate `i`.
    pub fn multi_index(&self, i: usize) -> &[u32] {
        &self.terms[i].exps
    }

    pub fn map(&self, x: &[f64]) -> Result<FeatureVector> {
        if x.len() != self.spec.dim {
            return Err(Error::DimensionMismatch {
                expected: self.spec.dim,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.len()];
        self.map_into(x, &mut out);
        Ok(FeatureVector { coords: out })
    }

    /// Unchecked variant of [`FeatureMap::map`] writing into a buffer.
    pub fn map_into(&self, x: &[f64], out: &mut [f64]) {
        let deg = self.spec.deg as usize;
        // powers[i * (deg + 1) + p] = x_i^p
        let mut powers = vec![1.0; x.len() * (deg + 1)];
        for (i, xi) in x.iter().enumerate() {
            for p in 1..=deg {
                powers[i * (deg + 1) + p] = powers[i * (deg + 1) + p - 1] * xi;
            }
        }
        for (o, term) in out.iter_mut().zip(&self.terms) {
            let mut v = term.coef;
            for (i, &j) in term.exps[1..].iter().enumerate() {
                if j > 0 {
                    v *= powers[i * (deg + 1) + j as usize];
                }
            }
            *o = v;
        }
    }

    /// Mean of `φ` over the uniform distribution on the unit ball at the
    /// origin, from the closed-form monomial moments
    /// `∫_B x^α dx = 2 ∏Γ((α_i + 1)/2) / ((|α| + d) Γ((|α| + d)/2))`.
    pub fn unit_ball_mean(&self) -> FeatureVector {
        let d = self.spec.dim as f64;
        let ln_vol = ln_ball_volume(d, 1.0);
        let coords = self
            .terms
            .iter()
            .map(|term| {
                let alpha = &term.exps[1..];
                if alpha.iter().any(|j| j % 2 == 1) {
                    return 0.0;
                }
                let total: u32 = alpha.iter().sum();
                let s = (total as f64 + d) / 2.0;
                let ln_moment = std::f64::consts::LN_2
                    + alpha
                        .iter()
                        .map(|&j| ln_gamma((j as f64 + 1.0) / 2.0))
                        .sum::<f64>()
                    - (total as f64 + d).ln()
                    - ln_gamma(s);
                term.coef * (ln_moment - ln_vol).exp()
            })
            .collect();
        FeatureVector { coords }
    }
}

fn push_multi_indices(remaining: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if pos == current.len() - 1 {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for j in (0..=remaining).rev() {
        current[pos] = j;
        push_multi_indices(remaining - j, pos + 1, current, out);
    }
    current[pos] = 0;
}

/// Writes points as CSV with header `x0,...,x{d-1}`.
pub fn write_points_csv<W: Write>(writer: W, points: &[Vec<f64>]) -> Result<()> {
    let d = points.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(writer);
    w.write_record((0..d).map(|i| format!("x{i}")))?;
    for p in points {
        if p.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
        w.write_record(p.iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV point cloud written by [`write_points_csv`].
pub fn read_points_csv<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = r.headers()?.clone();
    for (i, h) in headers.iter().enumerate() {
        if h.trim() != format!("x{i}") {
            return Err(Error::invalid(format!(
                "unexpected column header {h:?} at position {i}"
            )));
        }
    }
    let mut points = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let p = rec
            .iter()
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::invalid(format!("bad coordinate {v:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        points.push(p);
    }
    Ok(points)
}
