//! The few-shot linear classifier
//!
//! ```text
//! F_θ(z) = ℓ_Y  if  L(z) = (1/k) Σ_i (z − y_i, y_i − c) ≥ θ,  else ℓ_X
//! ```
//!
//! trained on `k` points of `Y`, its Fisher discriminant form, and the
//! success-probability bounds in terms of pairwise separability.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{
    chunked_counts, estimate_sep_prob, separation, Distribution, ProbEstimate, SepQuery,
};
use crate::geometry::{dot, BallSpec, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Label {
    X,
    Y,
}

/// Training data and parameters of `F_θ`.
///
/// Only the `Y` sample enters the decision; the `X` sample is kept as a
/// count, and its mean serves as the default centre.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    train_y: Vec<Vec<f64>>,
    centre: Vec<f64>,
    theta: f64,
    train_x_len: usize,
}

impl ClassifierModel {
    pub fn new(train_y: Vec<Vec<f64>>, centre: Vec<f64>, theta: f64) -> Result<Self> {
        if train_y.is_empty() {
            return Err(Error::invalid("the training sample of Y must be non-empty"));
        }
        if theta.is_nan() {
            return Err(Error::invalid("theta is NaN"));
        }
        let dim = centre.len();
        if dim == 0 {
            return Err(Error::invalid(
                "the centre must have at least one coordinate",
            ));
        }
        for y in &train_y {
            if y.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: y.len(),
                });
            }
        }
        Ok(Self {
            train_y,
            centre,
            theta,
            train_x_len: 0,
        })
    }

    /// Builds a model from both training samples. Without an explicit
    /// `centre` the mean of `train_x` is used.
    pub fn with_train_x(
        train_y: Vec<Vec<f64>>,
        train_x: &[Vec<f64>],
        centre: Option<Vec<f64>>,
        theta: f64,
    ) -> Result<Self> {
        let centre = match centre {
            Some(c) => c,
            None => {
                let first = train_x
                    .first()
                    .ok_or_else(|| Error::invalid("no centre given and the X sample is empty"))?;
                let mut c = vec![0.0; first.len()];
                for x in train_x {
                    if x.len() != c.len() {
                        return Err(Error::DimensionMismatch {
                            expected: c.len(),
                            got: x.len(),
                        });
                    }
                    for (ci, xi) in c.iter_mut().zip(x) {
                        *ci += xi;
                    }
                }
                c.iter_mut().for_each(|ci| *ci /= train_x.len() as f64);
                c
            }
        };
        let mut model = Self::new(train_y, centre, theta)?;
        if let Some(x) = train_x.iter().find(|x| x.len() != model.dim()) {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                got: x.len(),
            });
        }
        model.train_x_len = train_x.len();
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.centre.len()
    }

    pub fn k_train(&self) -> usize {
        self.train_y.len()
    }

    pub fn train_y(&self) -> &[Vec<f64>] {
        &self.train_y
    }

    pub fn train_x_len(&self) -> usize {
        self.train_x_len
    }

    pub fn centre(&self) -> &[f64] {
        &self.centre
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `L(z)`.
    pub fn score(&self, z: &[f64]) -> Result<f64> {
        self.check(z)?;
        Ok(score(&self.train_y, z, &self.centre))
    }

    pub fn classify(&self, z: &[f64]) -> Result<Label> {
        Ok(if self.score(z)? >= self.theta {
            Label::Y
        } else {
            Label::X
        })
    }

    fn check(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        Ok(())
    }
}

fn score<Y: AsRef<[f64]>>(train_y: &[Y], z: &[f64], c: &[f64]) -> f64 {
    let sum: f64 = train_y.iter().map(|y| separation(z, y.as_ref(), c)).sum();
    sum / train_y.len() as f64
}

/// The classifier rewritten as `(z − μ, μ − c) ≥ θ + Θ` with `μ` the mean of
/// the training points and `Θ` their total variance.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherForm {
    pub mu: Vec<f64>,
    pub offset: f64,
    pub centre: Vec<f64>,
    pub theta: f64,
}

impl FisherForm {
    pub fn threshold(&self) -> f64 {
        self.theta + self.offset
    }

    pub fn classify(&self, z: &[f64]) -> Result<Label> {
        if z.len() != self.mu.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mu.len(),
                got: z.len(),
            });
        }
        let v = separation(z, &self.mu, &self.centre);
        Ok(if v >= self.threshold() {
            Label::Y
        } else {
            Label::X
        })
    }
}

pub fn fisher_form(model: &ClassifierModel) -> FisherForm {
    let k = model.k_train() as f64;
    let mut mu = vec![0.0; model.dim()];
    let mut sq = 0.0;
    for y in &model.train_y {
        for (m, yi) in mu.iter_mut().zip(y) {
            *m += yi;
        }
        sq += dot(y, y);
    }
    mu.iter_mut().for_each(|m| *m /= k);
    let offset = (sq / k - dot(&mu, &mu)).max(0.0);
    FisherForm {
        mu,
        offset,
        centre: model.centre.clone(),
        theta: model.theta,
    }
}

/// Which success probability a bound refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnSide {
    /// `P(F_θ(y) = ℓ_Y)`, bounded through `p = p_θ(Y)`.
    LearnY,
    /// `P(F_θ(x) = ℓ_X)`, bounded through `p = p_θ(Y, X)`.
    LearnX,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LearningBounds {
    pub lower: f64,
    pub upper: f64,
}

impl LearningBounds {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

/// Bounds on a success probability after `k_train` training points, given
/// the pairwise separability probability `p`.
pub fn learning_bounds(p: f64, k_train: u32, side: LearnSide) -> Result<LearningBounds> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!(
            "probability must lie in [0, 1], got {p}"
        )));
    }
    if k_train == 0 {
        return Err(Error::invalid("k_train must be at least 1"));
    }
    let k = k_train as i32;
    let q = 1.0 - p;
    let (lower, upper) = match side {
        LearnSide::LearnY => (p.powi(k), 1.0 - q.powi(k)),
        LearnSide::LearnX => (q.powi(k), 1.0 - p.powi(k)),
    };
    Ok(LearningBounds {
        lower: lower.min(upper),
        upper: upper.max(lower),
    })
}

/// Empirical success frequencies of `F_θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningSim {
    pub y_side: ProbEstimate,
    pub x_side: ProbEstimate,
}

/// Runs `trials` independent trials. Each draws `k_train` training points
/// from `y`, then one evaluation point from each of `y` and `x`, and records
/// whether `y`'s point is labelled `ℓ_Y` and `x`'s point `ℓ_X`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_learning(
    y: &BallSpec,
    x: &BallSpec,
    centre: &[f64],
    theta: f64,
    k_train: u32,
    trials: u64,
    confidence: f64,
    seed: u64,
) -> Result<LearningSim> {
    check_sim(y, x, centre, theta, k_train, trials)?;
    let [hy, hx] = chunked_counts(trials, seed, || {
        let dim = centre.len();
        let mut train = vec![vec![0.0; dim]; k_train as usize];
        let mut zy = vec![0.0; dim];
        let mut zx = vec![0.0; dim];
        move |rng: &mut StreamRng| {
            for t in train.iter_mut() {
                y.sample_into(rng, t);
            }
            y.sample_into(rng, &mut zy);
            x.sample_into(rng, &mut zx);
            [
                score(&train, &zy, centre) >= theta,
                score(&train, &zx, centre) < theta,
            ]
        }
    });
    Ok(LearningSim {
        y_side: ProbEstimate::from_counts(hy, trials, confidence, seed)?,
        x_side: ProbEstimate::from_counts(hx, trials, confidence, seed)?,
    })
}

fn check_sim(
    y: &BallSpec,
    x: &BallSpec,
    centre: &[f64],
    theta: f64,
    k_train: u32,
    trials: u64,
) -> Result<()> {
    if k_train == 0 {
        return Err(Error::invalid("k_train must be at least 1"));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    if theta.is_nan() {
        return Err(Error::invalid("theta is NaN"));
    }
    for got in [x.dim(), centre.len()] {
        if got != y.dim() {
            return Err(Error::DimensionMismatch {
                expected: y.dim(),
                got,
            });
        }
    }
    Ok(())
}

/// One row of a learning-simulation report.
#[derive(Debug, Clone, Serialize)]
pub struct LearningRecord {
    pub d: usize,
    pub eps: f64,
    pub theta: f64,
    pub k_train: u32,
    pub trials: u64,
    #[serde(rename = "P_hat_Y")]
    pub p_hat_y: f64,
    #[serde(rename = "ciY_low")]
    pub ci_y_low: f64,
    #[serde(rename = "ciY_high")]
    pub ci_y_high: f64,
    #[serde(rename = "boundY_low")]
    pub bound_y_low: f64,
    #[serde(rename = "boundY_high")]
    pub bound_y_high: f64,
    #[serde(rename = "P_hat_X")]
    pub p_hat_x: f64,
    #[serde(rename = "ciX_low")]
    pub ci_x_low: f64,
    #[serde(rename = "ciX_high")]
    pub ci_x_high: f64,
    #[serde(rename = "boundX_low")]
    pub bound_x_low: f64,
    #[serde(rename = "boundX_high")]
    pub bound_x_high: f64,
    pub seed: u64,
}

/// Simulation plus bounds for the two-ball pair `X = U(B_d)`,
/// `Y = U(B_d(1, eps·e₁))`.
///
/// The bounds are evaluated at separability probabilities estimated from
/// `pairs` pairs each, on streams keyed by `seed + 1` and `seed + 2`.
#[derive(Debug, Clone)]
pub struct TwoBallLearning {
    pub d: usize,
    pub eps: f64,
    pub theta: f64,
    pub k_train: u32,
    pub centre: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TwoBallReport {
    pub sim: LearningSim,
    pub p_y: ProbEstimate,
    pub p_yx: ProbEstimate,
    pub bounds_y: LearningBounds,
    pub bounds_x: LearningBounds,
}

impl TwoBallLearning {
    pub fn balls(&self) -> Result<(BallSpec, BallSpec)> {
        if self.d == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(Error::invalid(format!(
                "eps must be non-negative, got {}",
                self.eps
            )));
        }
        let mut c2 = vec![0.0; self.d];
        c2[0] = self.eps;
        Ok((BallSpec::new(c2, 1.0)?, BallSpec::unit(self.d)?))
    }

    pub fn run(
        &self,
        trials: u64,
        pairs: u64,
        confidence: f64,
        seed: u64,
    ) -> Result<TwoBallReport> {
        let (y, x) = self.balls()?;
        let sim = simulate_learning(
            &y,
            &x,
            &self.centre,
            self.theta,
            self.k_train,
            trials,
            confidence,
            seed,
        )?;
        let yq = SepQuery::self_query(
            Distribution::Ball(y.clone()),
            self.centre.clone(),
            self.theta,
        )?;
        let yxq = SepQuery::new(
            Distribution::Ball(y),
            Distribution::Ball(x),
            self.centre.clone(),
            self.theta,
        )?;
        let p_y = estimate_sep_prob(&yq, pairs, confidence, seed.wrapping_add(1))?;
        let p_yx = estimate_sep_prob(&yxq, pairs, confidence, seed.wrapping_add(2))?;
        Ok(TwoBallReport {
            sim,
            bounds_y: learning_bounds(p_y.p_hat, self.k_train, LearnSide::LearnY)?,
            bounds_x: learning_bounds(p_yx.p_hat, self.k_train, LearnSide::LearnX)?,
            p_y,
            p_yx,
        })
    }

    pub fn record(&self, report: &TwoBallReport, seed: u64) -> LearningRecord {
        let s = &report.sim;
        LearningRecord {
            d: self.d,
            eps: self.eps,
            theta: self.theta,
            k_train: self.k_train,
            trials: s.y_side.n_pairs,
            p_hat_y: s.y_side.p_hat,
            ci_y_low: s.y_side.ci_low,
            ci_y_high: s.y_side.ci_high,
            bound_y_low: report.bounds_y.lower,
            bound_y_high: report.bounds_y.upper,
            p_hat_x: s.x_side.p_hat,
            ci_x_low: s.x_side.ci_low,
            ci_x_high: s.x_side.ci_high,
            bound_x_low: report.bounds_x.lower,
            bound_x_high: report.bounds_x.upper,
            seed,
        }
    }
}
