//! Globally adaptive Gauss–Legendre quadrature in one and two dimensions.
//!
//! Each panel is integrated with a 10-point Gauss–Legendre rule on the whole
//! panel and on its two halves; the difference is the panel's error
//! estimate. The panel with the largest estimate is split until the total
//! estimate meets the tolerance or the panel budget is spent.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const RULE_ORDER: usize = 10;

/// Tolerances and panel budget for an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_panels: 4096,
        }
    }
}

impl QuadSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_panels: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || !(rel_tol > 0.0) {
            return Err(Error::invalid(format!(
                "quadrature tolerances must be positive, got abs_tol = {abs_tol}, rel_tol = {rel_tol}"
            )));
        }
        if max_panels == 0 {
            return Err(Error::invalid("max_panels must be at least 1"));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_panels,
        })
    }

    /// Same spec with both tolerances set to `tol`.
    pub fn with_tol(tol: f64) -> Result<Self> {
        Self::new(tol, tol, QuadSpec::default().max_panels)
    }

    fn tightened(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            max_panels: self.max_panels,
        }
    }
}

/// Value of an integral together with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
    pub converged: bool,
}

impl QuadResult {
    /// Converts a non-converged result into [`Error::NonConvergence`].
    pub fn into_result(self) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::NonConvergence {
                value: self.value,
                error: self.error,
                panels: self.panels,
            })
        }
    }
}

struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| {
        let (nodes, weights) = gauss_legendre(RULE_ORDER);
        Rule { nodes, weights }
    })
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gl_panel<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> f64 {
    let r = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut s = 0.0;
    for (x, w) in r.nodes.iter().zip(&r.weights) {
        s += w * f(mid + half * x);
    }
    s * half
}

struct Panel {
    a: f64,
    b: f64,
    left: f64,
    right: f64,
    error: f64,
}

impl Panel {
    fn build<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, whole: f64) -> Self {
        let mid = 0.5 * (a + b);
        let left = gl_panel(f, a, mid);
        let right = gl_panel(f, mid, b);
        let error = (left + right - whole).abs();
        Panel {
            a,
            b,
            left,
            right,
            error,
        }
    }

    fn value(&self) -> f64 {
        self.left + self.right
    }

    fn splittable(&self) -> bool {
        let mid = 0.5 * (self.a + self.b);
        mid > self.a && mid < self.b && (self.b - self.a) > 1e-15 * self.a.abs().max(self.b.abs())
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over `[a, b]`.
pub fn integrate_1d<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, spec: QuadSpec) -> QuadResult {
    integrate_1d_with_breaks(f, &[a, b], spec)
}

/// Integrates `f` over `[points[0], points[last]]`, starting from one panel
/// per interval between consecutive break points.
///
/// Break points should sit where the integrand has kinks or jumps; they are
/// sorted and deduplicated here.
pub fn integrate_1d_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    spec: QuadSpec,
) -> QuadResult {
    let mut pts: Vec<f64> = points.iter().copied().filter(|p| p.is_finite()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    if pts.len() < 2 {
        return QuadResult {
            value: 0.0,
            error: 0.0,
            panels: 0,
            converged: true,
        };
    }

    let mut heap = BinaryHeap::new();
    let mut finished = Vec::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in pts.windows(2) {
        let whole = gl_panel(&mut f, w[0], w[1]);
        let p = Panel::build(&mut f, w[0], w[1], whole);
        total += p.value();
        total_err += p.error;
        heap.push(p);
    }
    let mut count = heap.len();

    loop {
        if total_err <= spec.abs_tol.max(spec.rel_tol * total.abs()) {
            break;
        }
        if count >= spec.max_panels {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        if !worst.splittable() {
            finished.push(worst);
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let lp = Panel::build(&mut f, worst.a, mid, worst.left);
        let rp = Panel::build(&mut f, mid, worst.b, worst.right);
        total += lp.value() + rp.value() - worst.value();
        total_err += lp.error + rp.error - worst.error;
        heap.push(lp);
        heap.push(rp);
        count += 1;
    }

    // re-sum from the panels to shed the drift of the running totals
    let mut value = 0.0;
    let mut error = 0.0;
    for p in heap.iter().chain(finished.iter()) {
        value += p.value();
        error += p.error;
    }
    QuadResult {
        value,
        error,
        panels: count,
        converged: error <= spec.abs_tol.max(spec.rel_tol * value.abs()),
    }
}

/// Integrates `f(x, y)` over the unit square.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(f: F, spec: QuadSpec) -> QuadResult {
    integrate_2d_with_breaks(f, |_| vec![0.0, 1.0], &[0.0, 1.0], spec)
}

/// Integrates `f(x, y)` over the unit square as an adaptive outer integral
/// in `y` of adaptive inner integrals in `x`.
///
/// `inner_breaks(y)` supplies break points for the inner integral at a given
/// `y`; `outer_breaks` those of the outer one. The inner integrals run at a
/// tolerance ten times tighter than `spec`.
pub fn integrate_2d_with_breaks<F, B>(
    f: F,
    inner_breaks: B,
    outer_breaks: &[f64],
    spec: QuadSpec,
) -> QuadResult
where
    F: Fn(f64, f64) -> f64,
    B: Fn(f64) -> Vec<f64>,
{
    let inner_spec = spec.tightened(0.1);
    let inner_ok = Cell::new(true);
    let inner_err = Cell::new(0.0f64);
    let outer = integrate_1d_with_breaks(
        |y| {
            let pts = inner_breaks(y);
            let r = integrate_1d_with_breaks(|x| f(x, y), &pts, inner_spec);
            if !r.converged {
                inner_ok.set(false);
            }
            inner_err.set(inner_err.get().max(r.error));
            r.value
        },
        outer_breaks,
        spec,
    );
    let error = outer.error + inner_err.get();
    QuadResult {
        value: outer.value,
        error,
        panels: outer.panels,
        converged: outer.converged && inner_ok.get(),
    }
}
