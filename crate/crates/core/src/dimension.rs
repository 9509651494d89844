//! Separability probabilities and intrinsic dimension for uniform balls.
//!
//! For `x, y` uniform in the unit ball `B_d`, the event
//! `(y − x, x − c) ≥ θ` says that `x` lies in the ball of radius
//! `R_θ(‖y‖)` around `y/2`. Its probability given `‖y‖ = t` is the volume of
//! the lens formed with `B_d`, which splits into two spherical caps, and
//! `f_θ(d)` averages that over the radial density `d t^{d−1}`.
//!
//! Every integral against the radial density is taken in the variable
//! `u = t^d`, under which the density is uniform on `[0, 1]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{Distribution, SepQuery};
use crate::geometry::BallSpec;
use crate::quadrature::{integrate_1d_with_breaks, QuadSpec};
use crate::specfun::cap_volume_fraction;

/// Lengths describing the lens `B_d ∩ B(y/2, R_θ(t))` for `‖y‖ = t`.
///
/// `a` is the signed distance from `y/2` to the plane through the
/// intersection of the two spheres and `b_len` the height of the cap this
/// plane cuts from the unit ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SepGeometry {
    pub theta: f64,
    pub t: f64,
    pub r: f64,
    pub a: f64,
    pub b_len: f64,
}

impl SepGeometry {
    pub fn new(theta: f64, t: f64) -> Self {
        let r2 = (0.25 * t * t - theta).max(0.0);
        let a = (1.0 - r2) / t - 0.25 * t;
        Self {
            theta,
            t,
            r: r2.sqrt(),
            a,
            b_len: 1.0 - a - 0.5 * t,
        }
    }

    /// `P(x : (y − x, x) ≥ θ | ‖y‖ = t)` for `x` uniform in `B_d`.
    pub fn conditional_prob(&self, d: f64) -> f64 {
        let outer = cap_volume_fraction(d, 1.0, self.b_len);
        let inner = if self.r > 0.0 {
            self.r.powf(d) * cap_volume_fraction(d, self.r, self.r + self.a)
        } else {
            0.0
        };
        (outer + inner).clamp(0.0, 1.0)
    }
}

/// Where a dimension value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DimensionSource {
    Analytic,
    Inverted,
    Estimated,
}

/// An intrinsic dimension, possibly `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionValue {
    pub value: f64,
    pub source: DimensionSource,
}

impl DimensionValue {
    pub fn is_infinite(&self) -> bool {
        self.value.is_infinite()
    }
}

fn check_dim(d: f64) -> Result<()> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::domain(format!(
            "dimension must be positive and finite, got {d}"
        )));
    }
    Ok(())
}

/// `f_θ(d) = P(x, y ~ U(B_d) : (y − x, x − c) ≥ θ)` for integer `d`.
pub fn f_theta(theta: f64, d: usize) -> Result<f64> {
    f_theta_real(theta, d as f64)
}

/// `f_θ(d)` extended to real `d > 0`.
///
/// Closed forms are used for `θ ≤ −2`, `θ = 0` and `θ ≥ 1/4`, the
/// single-cap integral for `0 < θ < 1/4`, and the two-cap integral
/// otherwise.
pub fn f_theta_real(theta: f64, d: f64) -> Result<f64> {
    check_dim(d)?;
    if theta.is_nan() {
        return Err(Error::domain("theta is NaN"));
    }
    if theta <= -2.0 {
        Ok(1.0)
    } else if theta == 0.0 {
        Ok((-(d + 1.0)).exp2())
    } else if theta >= 0.25 {
        Ok(0.0)
    } else if theta > 0.0 {
        f_theta_single_cap(theta, d)
    } else {
        f_theta_two_cap(theta, d)
    }
}

/// `f_θ(d)` from the general two-cap integral, valid for every `θ`.
pub fn f_theta_two_cap(theta: f64, d: f64) -> Result<f64> {
    f_theta_two_cap_with(theta, d, QuadSpec::default())
}

pub fn f_theta_two_cap_with(theta: f64, d: f64, spec: QuadSpec) -> Result<f64> {
    check_dim(d)?;
    // The lens changes shape where one sphere becomes internally tangent to
    // the other (t = |1 + θ|) and where R_θ vanishes (t = 2√θ).
    let mut breaks = vec![0.0, 1.0];
    let tangency = (1.0 + theta).abs();
    if tangency > 0.0 && tangency < 1.0 {
        breaks.push(tangency.powf(d));
    }
    if theta > 0.0 && theta < 0.25 {
        breaks.push((2.0 * theta.sqrt()).powf(d));
    }
    let inv_d = 1.0 / d;
    integrate_1d_with_breaks(
        |u| {
            let t = u.powf(inv_d);
            if t <= 0.0 {
                return 0.0;
            }
            SepGeometry::new(theta, t).conditional_prob(d)
        },
        &breaks,
        spec,
    )
    .into_result()
    .map(|p| p.clamp(0.0, 1.0))
}

/// `∫_{2√θ}^1 d t^{d−1} (t²/4 − θ)^{d/2} dt` for `0 < θ < 1/4`.
pub fn f_theta_single_cap(theta: f64, d: f64) -> Result<f64> {
    check_dim(d)?;
    if !(theta > 0.0 && theta < 0.25) {
        return Err(Error::domain(format!(
            "the single-cap form needs 0 < theta < 1/4, got {theta}"
        )));
    }
    let lo = (2.0 * theta.sqrt()).powf(d);
    let inv_d = 1.0 / d;
    integrate_1d_with_breaks(
        |u| {
            let t2 = u.powf(2.0 * inv_d);
            (0.25 * t2 - theta).max(0.0).powf(0.5 * d)
        },
        &[lo, 1.0],
        QuadSpec::default(),
    )
    .into_result()
}

/// Intrinsic dimension `n` with `p = 2^{−(n + 1)}`.
pub fn intrinsic_dim_from_prob(p: f64) -> Result<DimensionValue> {
    Ok(DimensionValue {
        value: dim_of_prob(p)?,
        source: DimensionSource::Analytic,
    })
}

pub(crate) fn dim_of_prob(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!(
            "probability must lie in [0, 1], got {p}"
        )));
    }
    if p == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(-p.log2() - 1.0)
    }
}

/// Real `d` in `[d_lo, d_hi]` with `f_θ(d) = p`, by bisection on the
/// continuous-dimension extension. Only `θ ∈ [−1, 0]` is admitted, where
/// `f_θ` is monotone in `d`.
pub fn invert_f(theta: f64, p: f64, bracket: (f64, f64)) -> Result<DimensionValue> {
    if !(-1.0..=0.0).contains(&theta) {
        return Err(Error::domain(format!(
            "f_theta is invertible in d only for -1 <= theta <= 0, got {theta}"
        )));
    }
    let (mut lo, mut hi) = bracket;
    check_dim(lo)?;
    check_dim(hi)?;
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let f_lo = f_theta_real(theta, lo)? - p;
    let f_hi = f_theta_real(theta, hi)? - p;
    if f_lo == 0.0 {
        return Ok(inverted(lo));
    }
    if f_hi == 0.0 {
        return Ok(inverted(hi));
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Bracket { lo, hi, target: p });
    }
    let lo_sign = f_lo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let g = f_theta_real(theta, mid)? - p;
        if g.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
        if g.abs() <= 1e-9 && hi - lo <= 1e-10 * mid.max(1.0) {
            break;
        }
    }
    Ok(inverted(0.5 * (lo + hi)))
}

fn inverted(value: f64) -> DimensionValue {
    DimensionValue {
        value,
        source: DimensionSource::Inverted,
    }
}

/// Balanced accuracy of the midpoint hyperplane separating two unit balls
/// in `R^d` whose centres are `eps` apart.
pub fn two_ball_accuracy(d: usize, eps: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    if !(eps >= 0.0) {
        return Err(Error::domain(format!(
            "centre separation must be non-negative, got {eps}"
        )));
    }
    if eps >= 2.0 {
        return Ok(1.0);
    }
    Ok(1.0 - cap_volume_fraction(d as f64, 1.0, 1.0 - 0.5 * eps))
}

/// Which relative dimension of the two-ball pair a query measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelativePair {
    /// `n(Y, X)`: `y ~ Y`, `x ~ X`.
    YX,
    /// `n(X, Y)`: `y ~ X`, `x ~ Y`.
    XY,
}

/// Separability query for the two-ball example: `X = U(B_d(1, c₁))` with
/// `c₁ = 0`, `Y = U(B_d(1, c₂))` with `c₂ = eps·e₁`, centre `c = c₁` and
/// `θ = 0`.
pub fn two_ball_relative_dim_query(d: usize, eps: f64, which: RelativePair) -> Result<SepQuery> {
    if d == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::domain(format!(
            "centre separation must be non-negative, got {eps}"
        )));
    }
    let c1 = vec![0.0; d];
    let mut c2 = vec![0.0; d];
    c2[0] = eps;
    let x_ball = Distribution::Ball(BallSpec::new(c1.clone(), 1.0)?);
    let y_ball = Distribution::Ball(BallSpec::new(c2, 1.0)?);
    match which {
        RelativePair::YX => SepQuery::new(y_ball, x_ball, c1, 0.0),
        RelativePair::XY => SepQuery::new(x_ball, y_ball, c1, 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::stream_rng;

    #[test]
    fn geometry_lengths() {
        let g = SepGeometry::new(-0.5, 0.6);
        assert!((g.r - (0.09f64 + 0.5).sqrt()).abs() < 1e-15);
        assert!((g.a - ((1.0 - g.r * g.r) / 0.6 - 0.15)).abs() < 1e-15);
        assert!((g.b_len - (1.0 - g.a - 0.3)).abs() < 1e-15);
        // the two caps meet on a common plane: distance from the origin is
        // t/2 + a and both spheres pass through it
        let q = 0.3 + g.a;
        let p2_outer = 1.0 - q * q;
        let p2_inner = g.r * g.r - g.a * g.a;
        assert!((p2_outer - p2_inner).abs() < 1e-14);
    }

    #[test]
    fn closed_form_branches() {
        for d in 1..=20 {
            assert_eq!(f_theta(0.0, d).unwrap(), 0.5f64.powi(d as i32 + 1));
            assert_eq!(f_theta(-2.5, d).unwrap(), 1.0);
            assert_eq!(f_theta(0.3, d).unwrap(), 0.0);
        }
        assert_eq!(f_theta(0.0, 10).unwrap(), 1.0 / 2048.0);
    }

    #[test]
    fn two_cap_path_reproduces_closed_forms() {
        for d in 1..=12 {
            let df = d as f64;
            assert!((f_theta_two_cap(0.0, df).unwrap() - 0.5f64.powi(d + 1)).abs() < 1e-12);
            assert!((f_theta_two_cap(-2.0, df).unwrap() - 1.0).abs() < 1e-12);
            assert!(f_theta_two_cap(0.25, df).unwrap().abs() < 1e-12);
            for theta in [0.01, 0.1, 0.2] {
                let a = f_theta_two_cap(theta, df).unwrap();
                let b = f_theta_single_cap(theta, df).unwrap();
                assert!((a - b).abs() < 1e-9, "d={d} theta={theta}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn one_dimensional_brute_force() {
        // d = 1: exact double integral over [−1, 1]² on a fine midpoint grid
        let n = 20_000;
        for theta in [-1.5, -1.0, -0.5, -0.1, 0.1] {
            let mut hits = 0.0;
            for i in 0..n {
                let y = -1.0 + (i as f64 + 0.5) * 2.0 / n as f64;
                // (y − x) x ≥ θ  ⇔  x ∈ [y/2 − R, y/2 + R] with R² = y²/4 − θ
                let r2 = 0.25 * y * y - theta;
                if r2 > 0.0 {
                    let r = r2.sqrt();
                    let lo = (0.5 * y - r).max(-1.0);
                    let hi = (0.5 * y + r).min(1.0);
                    hits += (hi - lo).max(0.0) / 2.0;
                }
            }
            let brute = hits / n as f64;
            let analytic = f_theta(theta, 1).unwrap();
            assert!(
                (brute - analytic).abs() < 1e-6,
                "theta={theta}: {brute} vs {analytic}"
            );
        }
    }

    #[test]
    fn monte_carlo_theta_positive_d2() {
        let ball = BallSpec::unit(2).unwrap();
        let mut rng = stream_rng(77, 0);
        let n = 2_000_000;
        let mut hits = 0u64;
        for _ in 0..n {
            let x = ball.sample(&mut rng);
            let y = ball.sample(&mut rng);
            let v = (y[0] - x[0]) * x[0] + (y[1] - x[1]) * x[1];
            if v >= 0.1 {
                hits += 1;
            }
        }
        let p = f_theta(0.1, 2).unwrap();
        let se = (p * (1.0 - p) / n as f64).sqrt();
        let phat = hits as f64 / n as f64;
        assert!((phat - p).abs() < 4.0 * se, "{phat} vs {p} (se {se})");
    }

    #[test]
    fn conditional_matches_sampled_lens() {
        let d = 4;
        let ball = BallSpec::unit(d).unwrap();
        let mut rng = stream_rng(8, 0);
        for (theta, t) in [(-0.5, 0.7), (-1.2, 0.4), (0.05, 0.9)] {
            let mut y = vec![0.0; d];
            y[0] = t;
            let n = 1_000_000;
            let mut hits = 0u64;
            for _ in 0..n {
                let x = ball.sample(&mut rng);
                let v: f64 = x.iter().zip(&y).map(|(xi, yi)| (yi - xi) * xi).sum();
                if v >= theta {
                    hits += 1;
                }
            }
            let p = SepGeometry::new(theta, t).conditional_prob(d as f64);
            let se = (p * (1.0 - p) / n as f64).sqrt().max(1e-7);
            let phat = hits as f64 / n as f64;
            assert!(
                (phat - p).abs() < 4.0 * se,
                "theta={theta} t={t}: {phat} vs {p}"
            );
        }
    }

    #[test]
    fn monotone_in_theta() {
        for d in 1..=10 {
            let mut prev = f64::INFINITY;
            for i in 0..50 {
                let theta = -2.2 + 2.5 * i as f64 / 49.0;
                let f = f_theta(theta, d).unwrap();
                assert!(f <= prev + 1e-12, "d={d} theta={theta}");
                prev = f;
            }
        }
    }

    #[test]
    fn intrinsic_dim_transform() {
        assert_eq!(intrinsic_dim_from_prob(1.0 / 64.0).unwrap().value, 5.0);
        assert_eq!(intrinsic_dim_from_prob(1.0).unwrap().value, -1.0);
        assert!(intrinsic_dim_from_prob(0.0).unwrap().is_infinite());
        assert!(intrinsic_dim_from_prob(1.5).is_err());
    }

    #[test]
    fn inversion_round_trips() {
        let d = invert_f(0.0, 0.5f64.powi(6), (0.5, 30.0)).unwrap();
        assert!((d.value - 5.0).abs() < 1e-8);
        assert_eq!(d.source, DimensionSource::Inverted);
        let p = f_theta(-0.5, 8).unwrap();
        let d = invert_f(-0.5, p, (1.0, 20.0)).unwrap();
        assert!((d.value - 8.0).abs() < 1e-6, "{}", d.value);
        assert!(matches!(
            invert_f(0.2, 0.1, (1.0, 5.0)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            invert_f(0.0, 0.9, (1.0, 5.0)),
            Err(Error::Bracket { .. })
        ));
    }

    #[test]
    fn two_ball_accuracy_values() {
        for d in [1, 2, 5, 10] {
            assert!((two_ball_accuracy(d, 0.0).unwrap() - 0.5).abs() < 1e-15);
            assert_eq!(two_ball_accuracy(d, 2.0).unwrap(), 1.0);
        }
        // {x ∈ [−1, 1] : x < 1/2} has measure 3/2 of 2
        assert!((two_ball_accuracy(1, 1.0).unwrap() - 0.75).abs() < 1e-14);
        for eps in [0.2, 0.7, 1.3] {
            let mut prev = 0.0;
            for d in 1..30 {
                let acc = two_ball_accuracy(d, eps).unwrap();
                assert!(acc >= prev - 1e-15);
                prev = acc;
            }
        }
        assert!(two_ball_accuracy(2, -0.1).is_err());
    }
}
