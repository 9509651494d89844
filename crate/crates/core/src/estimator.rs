//! Monte Carlo estimation of separability probabilities and of (relative)
//! intrinsic dimension.
//!
//! Pairs are drawn in fixed chunks of [`CHUNK_SIZE`]; chunk `i` uses stream
//! `i` of the generator keyed by the seed. Chunks run in parallel and their
//! integer counts are summed, so a result depends only on the seed and the
//! number of pairs.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::dimension::{dim_of_prob, DimensionSource, DimensionValue};
use crate::error::{Error, Result};
use crate::geometry::{stream_rng, BallSpec, FeatureMap, StreamRng};
use crate::stats::clopper_pearson;

/// Number of pairs (or trials) drawn from one random stream.
pub const CHUNK_SIZE: u64 = 1 << 16;

/// A distribution that can be sampled: a uniform ball, or the image of one
/// under a polynomial feature map.
#[derive(Debug, Clone)]
pub enum Distribution {
    Ball(BallSpec),
    Feature {
        ball: BallSpec,
        map: Arc<FeatureMap>,
    },
}

impl Distribution {
    pub fn feature(ball: BallSpec, map: FeatureMap) -> Result<Self> {
        if ball.dim() != map.spec().dim {
            return Err(Error::DimensionMismatch {
                expected: map.spec().dim,
                got: ball.dim(),
            });
        }
        Ok(Distribution::Feature {
            ball,
            map: Arc::new(map),
        })
    }

    /// Dimension of the space the samples live in.
    pub fn ambient_dim(&self) -> usize {
        match self {
            Distribution::Ball(b) => b.dim(),
            Distribution::Feature { map, .. } => map.len(),
        }
    }

    pub(crate) fn scratch_len(&self) -> usize {
        match self {
            Distribution::Ball(_) => 0,
            Distribution::Feature { ball, .. } => ball.dim(),
        }
    }

    pub(crate) fn sample_into(&self, rng: &mut StreamRng, scratch: &mut [f64], out: &mut [f64]) {
        match self {
            Distribution::Ball(b) => b.sample_into(rng, out),
            Distribution::Feature { ball, map } => {
                ball.sample_into(rng, scratch);
                map.map_into(scratch, out);
            }
        }
    }
}

/// The event `(x − y, y − c) ≥ θ` with `y ~ D` and `x ~ D′`.
///
/// `y_dist` is the distribution whose (relative) dimension is measured and
/// `x_dist` the one it is measured against; a self-query uses the same
/// distribution for both.
#[derive(Debug, Clone)]
pub struct SepQuery {
    pub y_dist: Distribution,
    pub x_dist: Distribution,
    pub centre: Vec<f64>,
    pub theta: f64,
}

impl SepQuery {
    pub fn new(
        y_dist: Distribution,
        x_dist: Distribution,
        centre: Vec<f64>,
        theta: f64,
    ) -> Result<Self> {
        let dim = y_dist.ambient_dim();
        for got in [x_dist.ambient_dim(), centre.len()] {
            if got != dim {
                return Err(Error::DimensionMismatch { expected: dim, got });
            }
        }
        if theta.is_nan() {
            return Err(Error::invalid("theta is NaN"));
        }
        Ok(Self {
            y_dist,
            x_dist,
            centre,
            theta,
        })
    }

    pub fn self_query(dist: Distribution, centre: Vec<f64>, theta: f64) -> Result<Self> {
        Self::new(dist.clone(), dist, centre, theta)
    }

    pub fn dim(&self) -> usize {
        self.centre.len()
    }
}

/// A Monte Carlo probability with its Clopper–Pearson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbEstimate {
    pub p_hat: f64,
    pub successes: u64,
    pub n_pairs: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    pub seed: u64,
}

impl ProbEstimate {
    pub fn from_counts(successes: u64, n_pairs: u64, confidence: f64, seed: u64) -> Result<Self> {
        let (lo, hi) = clopper_pearson(successes, n_pairs, confidence)?;
        let p_hat = successes as f64 / n_pairs as f64;
        Ok(Self {
            p_hat,
            successes,
            n_pairs,
            ci_low: lo.min(p_hat),
            ci_high: hi.max(p_hat),
            confidence,
            seed,
        })
    }

    /// Binomial standard error at the estimate itself.
    pub fn std_error(&self) -> f64 {
        (self.p_hat * (1.0 - self.p_hat) / self.n_pairs as f64).sqrt()
    }

    /// Binomial standard error at a reference probability `p`.
    pub fn std_error_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.n_pairs as f64).sqrt()
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

fn check_common(n: u64, confidence: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("the number of samples must be at least 1"));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::invalid(format!(
            "confidence must lie in (0, 1), got {confidence}"
        )));
    }
    Ok(())
}

/// Runs `count` Bernoulli experiments in parallel chunks. `init` builds a
/// per-chunk experiment closure, which is called once per experiment with the
/// chunk's stream and reports the outcome of each of `K` tracked events.
pub(crate) fn chunked_counts<const K: usize, S, T>(count: u64, seed: u64, init: S) -> [u64; K]
where
    S: Fn() -> T + Sync,
    T: FnMut(&mut StreamRng) -> [bool; K],
{
    let chunks = count.div_ceil(CHUNK_SIZE);
    (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream_rng(seed, chunk);
            let n = CHUNK_SIZE.min(count - chunk * CHUNK_SIZE);
            let mut run = init();
            let mut hits = [0u64; K];
            for _ in 0..n {
                for (h, ok) in hits.iter_mut().zip(run(&mut rng)) {
                    *h += ok as u64;
                }
            }
            hits
        })
        .reduce(
            || [0u64; K],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

/// Estimates `P(x ~ D′, y ~ D : (x − y, y − c) ≥ θ)` from `n_pairs`
/// independent pairs.
pub fn estimate_sep_prob(
    query: &SepQuery,
    n_pairs: u64,
    confidence: f64,
    seed: u64,
) -> Result<ProbEstimate> {
    check_common(n_pairs, confidence)?;
    let q = query;
    let [hits] = chunked_counts(n_pairs, seed, || {
        let dim = q.dim();
        let mut x = vec![0.0; dim];
        let mut y = vec![0.0; dim];
        let mut sx = vec![0.0; q.x_dist.scratch_len()];
        let mut sy = vec![0.0; q.y_dist.scratch_len()];
        move |rng: &mut StreamRng| {
            q.x_dist.sample_into(rng, &mut sx, &mut x);
            q.y_dist.sample_into(rng, &mut sy, &mut y);
            [separation(&x, &y, &q.centre) >= q.theta]
        }
    });
    ProbEstimate::from_counts(hits, n_pairs, confidence, seed)
}

/// `(x − y, y − c)`.
pub fn separation(x: &[f64], y: &[f64], c: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(c)
        .map(|((xi, yi), ci)| (xi - yi) * (yi - ci))
        .sum()
}

/// A dimension estimate with the interval mapped from the probability's
/// confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimEstimate {
    pub prob: ProbEstimate,
    pub dim: DimensionValue,
    pub dim_low: f64,
    pub dim_high: f64,
}

/// Estimates the (relative) intrinsic dimension defined by a `θ = 0` query.
///
/// `p ↦ −log₂ p − 1` is decreasing, so the upper probability bound gives
/// the lower dimension bound. An estimate of `p̂ = 0` gives `+∞` with a
/// finite lower bound.
pub fn estimate_dim(
    query: &SepQuery,
    n_pairs: u64,
    confidence: f64,
    seed: u64,
) -> Result<DimEstimate> {
    if query.theta != 0.0 {
        return Err(Error::domain(format!(
            "intrinsic dimension is defined at theta = 0 (got {}); use estimate_sep_prob for other margins",
            query.theta
        )));
    }
    let prob = estimate_sep_prob(query, n_pairs, confidence, seed)?;
    dim_estimate_from(prob)
}

pub fn dim_estimate_from(prob: ProbEstimate) -> Result<DimEstimate> {
    Ok(DimEstimate {
        dim: DimensionValue {
            value: dim_of_prob(prob.p_hat)?,
            source: DimensionSource::Estimated,
        },
        dim_low: dim_of_prob(prob.ci_high)?,
        dim_high: dim_of_prob(prob.ci_low)?,
        prob,
    })
}

/// Fraction of ordered pairs satisfying `(x − y, y − c) ≥ θ` in finite
/// samples.
///
/// With `xs = None` this is the self-query over all ordered pairs of
/// distinct points of `ys`; otherwise every `y` in `ys` is paired with
/// every `x` in `xs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseEstimate {
    pub p_hat: f64,
    pub pairs: u64,
    pub dim: f64,
}

pub fn pairwise_estimate(
    ys: &[Vec<f64>],
    xs: Option<&[Vec<f64>]>,
    centre: &[f64],
    theta: f64,
) -> Result<PairwiseEstimate> {
    let dim = centre.len();
    let check = |p: &Vec<f64>| {
        if p.len() != dim {
            Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            })
        } else {
            Ok(())
        }
    };
    ys.iter().try_for_each(check)?;
    if let Some(xs) = xs {
        xs.iter().try_for_each(check)?;
    }
    let (hits, pairs) = match xs {
        None => {
            if ys.len() < 2 {
                return Err(Error::invalid("a self-query needs at least two points"));
            }
            let hits: u64 = ys
                .par_iter()
                .enumerate()
                .map(|(j, y)| {
                    ys.iter()
                        .enumerate()
                        .filter(|&(i, x)| i != j && separation(x, y, centre) >= theta)
                        .count() as u64
                })
                .sum();
            (hits, (ys.len() * (ys.len() - 1)) as u64)
        }
        Some(xs) => {
            if ys.is_empty() || xs.is_empty() {
                return Err(Error::invalid("both samples must be non-empty"));
            }
            let hits: u64 = ys
                .par_iter()
                .map(|y| {
                    xs.iter()
                        .filter(|x| separation(x, y, centre) >= theta)
                        .count() as u64
                })
                .sum();
            (hits, (ys.len() * xs.len()) as u64)
        }
    };
    let p_hat = hits as f64 / pairs as f64;
    Ok(PairwiseEstimate {
        p_hat,
        pairs,
        dim: dim_of_prob(p_hat)?,
    })
}

/// Mean of `φ` over `n` draws from `ball`.
pub fn feature_mean_mc(ball: &BallSpec, map: &FeatureMap, n: u64, seed: u64) -> Vec<f64> {
    let len = map.len();
    let chunks = n.div_ceil(CHUNK_SIZE);
    let sum = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream_rng(seed, chunk);
            let m = CHUNK_SIZE.min(n - chunk * CHUNK_SIZE);
            let mut acc = vec![0.0; len];
            let mut x = vec![0.0; ball.dim()];
            let mut phi = vec![0.0; len];
            for _ in 0..m {
                ball.sample_into(&mut rng, &mut x);
                map.map_into(&x, &mut phi);
                for (a, p) in acc.iter_mut().zip(&phi) {
                    *a += p;
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(vec![0.0; len], |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        });
    sum.into_iter().map(|s| s / n as f64).collect()
}

/// JSON record of an estimate.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateRecord {
    pub p_hat: f64,
    pub n_pairs: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    #[serde(serialize_with = "extended_real")]
    pub dim: f64,
    #[serde(serialize_with = "extended_interval")]
    pub dim_ci: [f64; 2],
}

impl From<&DimEstimate> for EstimateRecord {
    fn from(e: &DimEstimate) -> Self {
        Self {
            p_hat: e.prob.p_hat,
            n_pairs: e.prob.n_pairs,
            ci_low: e.prob.ci_low,
            ci_high: e.prob.ci_high,
            seed: e.prob.seed,
            dim: e.dim.value,
            dim_ci: [e.dim_low, e.dim_high],
        }
    }
}

/// Serialises non-finite values as the strings `"inf"`, `"-inf"`, `"nan"`.
pub fn extended_real<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

fn extended_interval<S: Serializer>(v: &[f64; 2], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    struct Ext(f64);
    impl Serialize for Ext {
        fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            extended_real(&self.0, s)
        }
    }
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&Ext(v[0]))?;
    t.serialize_element(&Ext(v[1]))?;
    t.end()
}
