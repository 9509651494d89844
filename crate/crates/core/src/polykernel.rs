//! Separability of `U(B_d)` in the feature space of the polynomial kernel
//! `κ(x, y) = (b² + x·y)^deg`, with the centre at the feature-space mean.
//!
//! Writing `s = ‖x‖`, `t = ‖y‖` and `β` for the angle between `x` and `y`,
//! the event `(φ(x) − φ(y), φ(y) − c) ≥ θ` reads
//!
//! ```text
//! (b² + st cos β)^deg ≥ θ + (b² + t²)^deg + q(s) − q(t)
//! ```
//!
//! where `q(s) = E_z κ(x, z)` depends only on `‖x‖`. Its probability is a
//! double integral over the two radii of a sphere-cap fraction.

use rayon::prelude::*;
use serde::Serialize;

use crate::dimension::{intrinsic_dim_from_prob, DimensionValue};
use crate::error::{Error, Result};
use crate::estimator::{estimate_sep_prob, Distribution, ProbEstimate, SepQuery};
use crate::geometry::{BallSpec, FeatureMap, KernelSpec};
use crate::quadrature::{integrate_2d_with_breaks, QuadSpec};
use crate::specfun::{cap_area_fraction, hyp2f1_terminating};

/// Tolerance of the double integral.
pub const POLY_TOL: f64 = 1e-8;

// radial grid used to locate where the cap threshold crosses ±1
const SCAN_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyQuery {
    pub spec: KernelSpec,
    pub theta: f64,
}

impl PolyQuery {
    pub fn new(spec: KernelSpec, theta: f64) -> Result<Self> {
        if spec.deg == 0 {
            return Err(Error::invalid("polynomial degree must be at least 1"));
        }
        if !(spec.bias >= 1.0) || !spec.bias.is_finite() {
            return Err(Error::invalid(format!(
                "kernel bias must satisfy b >= 1, got {}",
                spec.bias
            )));
        }
        if spec.dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if theta.is_nan() {
            return Err(Error::invalid("theta is NaN"));
        }
        Ok(Self { spec, theta })
    }

    fn b2(&self) -> f64 {
        self.spec.bias * self.spec.bias
    }
}

/// `q(s) = b^{2 deg} ₂F₁((1 − deg)/2, −deg/2; d/2 + 1; s²/b⁴)`, the mean of
/// `κ(x, z)` over `z ~ U(B_d)` for `‖x‖ = s`.
pub fn q_mean_kernel(s: f64, query: &PolyQuery) -> f64 {
    let b2 = query.b2();
    let deg = query.spec.deg;
    b2.powi(deg as i32) * hyp2f1_terminating(deg, query.spec.dim as f64, s * s / (b2 * b2))
}

/// Cosine threshold `Q(s, t)`: the event holds iff `cos β ≥ Q`.
///
/// Returns `−∞` when the event holds for every angle and `+∞` when it holds
/// for none at zero radius.
pub fn decision_threshold(s: f64, t: f64, query: &PolyQuery) -> f64 {
    let b2 = query.b2();
    let deg = query.spec.deg as i32;
    let rhs =
        query.theta + (b2 + t * t).powi(deg) + q_mean_kernel(s, query) - q_mean_kernel(t, query);
    if rhs <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let root = rhs.powf(1.0 / deg as f64);
    let st = s * t;
    if st > 0.0 {
        (root - b2) / st
    } else if b2 >= root {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    }
}

// which side of the interval (−1, 1] the threshold falls on
fn region(q: f64) -> u8 {
    if q <= -1.0 {
        0
    } else if q <= 1.0 {
        1
    } else {
        2
    }
}

/// `P((φ(x) − φ(y), φ(y) − c) ≥ θ)` for `x, y ~ U(B_d)` and `c = E φ`.
pub fn poly_sep_prob(query: &PolyQuery) -> Result<f64> {
    poly_sep_prob_with(query, QuadSpec::with_tol(POLY_TOL)?)
}

pub fn poly_sep_prob_with(query: &PolyQuery, spec: QuadSpec) -> Result<f64> {
    let d = query.spec.dim;
    let inv_d = 1.0 / d as f64;
    // u = s^d and v = t^d have uniform densities on [0, 1]
    let integrand = |u: f64, v: f64| {
        let q = decision_threshold(u.powf(inv_d), v.powf(inv_d), query);
        cap_area_fraction(d, q)
    };
    let inner_breaks = |v: f64| radial_breaks(v.powf(inv_d), query);
    integrate_2d_with_breaks(integrand, inner_breaks, &[0.0, 1.0], spec)
        .into_result()
        .map(|p| p.clamp(0.0, 1.0))
}

// Values of u = s^d where Q(s, t) crosses ±1, located by scanning a uniform
// grid in s and bisecting every cell whose end points differ in region.
fn radial_breaks(t: f64, query: &PolyQuery) -> Vec<f64> {
    let d = query.spec.dim as i32;
    let reg = |s: f64| region(decision_threshold(s, t, query));
    let mut out = vec![0.0, 1.0];
    let mut s0 = 0.0;
    let mut r0 = reg(s0);
    for i in 1..=SCAN_POINTS {
        let s1 = i as f64 / SCAN_POINTS as f64;
        let r1 = reg(s1);
        if r1 != r0 {
            let (mut lo, mut hi) = (s0, s1);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if reg(mid) == r0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push((0.5 * (lo + hi)).powi(d));
        }
        s0 = s1;
        r0 = r1;
    }
    out
}

/// Intrinsic dimension of the image of `U(B_d)` under the feature map.
pub fn poly_intrinsic_dim(spec: KernelSpec) -> Result<DimensionValue> {
    let p = poly_sep_prob(&PolyQuery::new(spec, 0.0)?)?;
    intrinsic_dim_from_prob(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegreeRow {
    pub d: usize,
    pub b: f64,
    pub deg: u32,
    pub p0: f64,
    pub intrinsic_dim: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeSweep {
    pub best: u32,
    pub rows: Vec<DegreeRow>,
}

/// Sweeps `deg = 1..=deg_max` and returns the degree of largest intrinsic
/// dimension, the smallest such degree on ties.
pub fn optimal_degree(d: usize, b: f64, deg_max: u32) -> Result<DegreeSweep> {
    optimal_degree_with(d, b, deg_max, QuadSpec::with_tol(POLY_TOL)?)
}

pub fn optimal_degree_with(d: usize, b: f64, deg_max: u32, spec: QuadSpec) -> Result<DegreeSweep> {
    if deg_max == 0 {
        return Err(Error::invalid("deg_max must be at least 1"));
    }
    let rows = (1..=deg_max)
        .into_par_iter()
        .map(|deg| {
            let query = PolyQuery::new(KernelSpec::new(deg, b, d)?, 0.0)?;
            let p0 = poly_sep_prob_with(&query, spec)?;
            Ok(DegreeRow {
                d,
                b,
                deg,
                p0,
                intrinsic_dim: intrinsic_dim_from_prob(p0)?.value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = &rows[0];
    for r in &rows[1..] {
        if r.intrinsic_dim > best.intrinsic_dim {
            best = r;
        }
    }
    Ok(DegreeSweep {
        best: best.deg,
        rows,
    })
}

/// Monte Carlo estimate of the same probability with explicit feature
/// vectors: `x, y ~ U(B_d)` are mapped through `φ` and the centre is the
/// exact feature-space mean.
pub fn feature_space_estimate(
    query: &PolyQuery,
    n_pairs: u64,
    confidence: f64,
    seed: u64,
) -> Result<ProbEstimate> {
    let map = FeatureMap::new(query.spec)?;
    let centre = map.unit_ball_mean().coords;
    let dist = Distribution::feature(BallSpec::unit(query.spec.dim)?, map)?;
    let sq = SepQuery::self_query(dist, centre, query.theta)?;
    estimate_sep_prob(&sq, n_pairs, confidence, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimension::f_theta;
    use crate::geometry::{kernel, stream_rng};

    fn query(deg: u32, b: f64, d: usize, theta: f64) -> PolyQuery {
        PolyQuery::new(KernelSpec::new(deg, b, d).unwrap(), theta).unwrap()
    }

    #[test]
    fn q_closed_forms() {
        for d in [1, 3, 7] {
            for b in [1.0, 1.5, 3.0] {
                let q1 = query(1, b, d, 0.0);
                let q2 = query(2, b, d, 0.0);
                for s in [0.0, 0.2, 0.9, 1.0] {
                    assert!((q_mean_kernel(s, &q1) - b * b).abs() < 1e-14);
                    let want = b.powi(4) + s * s / (d as f64 + 2.0);
                    assert!((q_mean_kernel(s, &q2) - want).abs() < 1e-12);
                }
                assert_eq!(q_mean_kernel(0.0, &query(5, b, d, 0.0)), (b * b).powi(5));
            }
        }
    }

    #[test]
    fn q_is_mean_kernel() {
        let mut rng = stream_rng(21, 0);
        let d = 3;
        let q = query(3, 1.5, d, 0.0);
        let ball = BallSpec::unit(d).unwrap();
        let x = [0.5, -0.3, 0.4];
        let s = (0.5f64 * 0.5 + 0.09 + 0.16).sqrt();
        let n = 400_000;
        let vals: Vec<f64> = (0..n)
            .map(|_| kernel(&x, &ball.sample(&mut rng), &q.spec))
            .collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - q_mean_kernel(s, &q)).abs() < 4.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn q_grows_with_radius() {
        for deg in 2..=8 {
            let q = query(deg, 1.2, 4, 0.0);
            let mut prev = q_mean_kernel(0.0, &q);
            for i in 1..=100 {
                let v = q_mean_kernel(i as f64 / 100.0, &q);
                assert!(v >= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn threshold_cases() {
        let q = query(1, 5.0, 3, 0.0);
        for t in [0.1, 0.5, 1.0] {
            assert!((decision_threshold(t, t, &q) - 1.0).abs() < 1e-12);
        }
        let q = query(2, 1.5, 3, 0.1);
        let b2: f64 = 2.25;
        let (s, t) = (0.7, 0.4);
        let rhs = 0.1 + (b2 + t * t).powi(2) + q_mean_kernel(s, &q) - q_mean_kernel(t, &q);
        assert!((decision_threshold(s, t, &q) - (rhs.sqrt() - b2) / (s * t)).abs() < 1e-12);
        // event certain
        let deep = query(3, 1.5, 2, -(2.25f64 + 1.0).powi(3) - 2.25f64.powi(3));
        for (s, t) in [(0.0, 0.0), (1.0, 1.0), (0.3, 0.8)] {
            assert_eq!(decision_threshold(s, t, &deep), f64::NEG_INFINITY);
        }
        // zero radius with RHS above b^{2 deg}
        let q = query(2, 1.0, 2, 0.5);
        assert_eq!(decision_threshold(0.0, 0.5, &q), f64::INFINITY);
    }

    #[test]
    fn linear_kernel_reduces_to_ball() {
        for d in [1, 2, 5] {
            for theta in [-1.0, 0.0, 0.1] {
                let p = poly_sep_prob(&query(1, 2.0, d, theta)).unwrap();
                let f = f_theta(theta, d).unwrap();
                assert!((p - f).abs() < 1e-6, "d={d} θ={theta}: {p} vs {f}");
            }
        }
        let v = poly_intrinsic_dim(KernelSpec::new(1, 1.5, 4).unwrap()).unwrap();
        assert!((v.value - 4.0).abs() < 1e-5);
    }

    #[test]
    fn impossible_and_certain_events() {
        let spec = KernelSpec::new(2, 1.5, 3).unwrap();
        let hi = (2.25f64 + 1.0).powi(2) * 2.0;
        assert_eq!(
            poly_sep_prob(&PolyQuery::new(spec, hi).unwrap()).unwrap(),
            0.0
        );
        let lo = -(2.25f64 + 1.0).powi(2) - 2.25f64.powi(2);
        assert!((poly_sep_prob(&PolyQuery::new(spec, lo).unwrap()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_increasing_in_theta() {
        let mut prev = 1.0;
        for theta in [-3.0, -1.0, -0.3, 0.0, 0.2, 1.0] {
            let p = poly_sep_prob(&query(3, 1.5, 3, theta)).unwrap();
            assert!(p <= prev + 1e-9, "{theta}: {p} > {prev}");
            prev = p;
        }
    }

    #[test]
    fn matches_feature_space_sampling() {
        let q = query(2, 1.5, 3, 0.0);
        let p = poly_sep_prob(&q).unwrap();
        let mc = feature_space_estimate(&q, 1 << 20, 0.999, 3).unwrap();
        assert!(
            (mc.p_hat - p).abs() < 4.0 * mc.std_error_at(p),
            "{p} vs {mc:?}"
        );
    }

    #[test]
    fn sweep_shape() {
        let sweep = optimal_degree(3, 1.5, 4).unwrap();
        assert_eq!(sweep.rows.len(), 4);
        assert!(sweep.rows.iter().all(|r| r.intrinsic_dim >= -1.0));
        let best = sweep
            .rows
            .iter()
            .map(|r| r.intrinsic_dim)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(sweep.rows[sweep.best as usize - 1].intrinsic_dim, best);
        assert_eq!(optimal_degree(3, 1.5, 1).unwrap().best, 1);
        assert!(optimal_degree(3, 1.5, 0).is_err());
        assert!(PolyQuery::new(KernelSpec::new(0, 1.5, 3).unwrap(), 0.0).is_err());
    }
}
