//! Intrinsic and relative intrinsic dimension of data distributions.
//!
//! The intrinsic dimension `n(D)` of a distribution `D` with respect to a
//! centre `c` is the number satisfying
//!
//! ```text
//! P(x, y ~ D : (x − y, y − c) ≥ 0) = 2^{−(n(D) + 1)}
//! ```
//!
//! and the relative dimension `n(D, D′)` draws `x` from `D′` instead. The
//! crate computes these quantities analytically for uniform balls and their
//! images under polynomial feature maps, estimates them by Monte Carlo, and
//! evaluates the few-shot learning bounds they control.
//!
//! Modules, bottom-up:
//!
//! - [`specfun`]: gamma, incomplete beta, ball volumes, spherical caps.
//! - [`quadrature`]: adaptive Gauss–Legendre integration.
//! - [`geometry`]: ball sampling, seeded streams, polynomial feature map.
//! - [`dimension`]: the separability probability `f_θ(d)` and its inverse.
//! - [`estimator`]: Monte Carlo separability probabilities with
//!   Clopper–Pearson intervals.
//! - [`learning`]: the few-shot classifier and its success bounds.
//! - [`polykernel`]: separability in polynomial feature space.
//! - [`cli`]: figure tables and reports behind the `reldim` binary.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::excessive_precision)]

pub mod cli;
pub mod dimension;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod learning;
pub mod polykernel;
pub mod quadrature;
pub mod specfun;
pub mod stats;

pub use error::{Error, Result};
