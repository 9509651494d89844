//! Special functions and spherical geometry primitives.
//!
//! Every ratio of volumes or areas is formed in log space and exponentiated
//! at the end, since `Γ(d/2 + 1)` overflows long before the ratios do.
//! Dimensions are taken as `f64` so that the same formulas serve the
//! continuous-dimension extension used when inverting `f_θ(d)`.

use crate::error::{Error, Result};

const LN_PI: f64 = 1.144_729_885_849_400_2;

// Lanczos approximation, g = 671/128, 14 terms.
const LANCZOS_G: f64 = 5.242_187_5;
const LANCZOS_COF: [f64; 14] = [
    57.156_235_665_862_923_5,
    -59.597_960_355_475_491_2,
    14.136_097_974_741_747_1,
    -0.491_913_816_097_620_199,
    0.339_946_499_848_118_887e-4,
    0.465_236_289_270_485_756e-4,
    -0.983_744_753_048_795_646e-4,
    0.158_088_703_224_912_494e-3,
    -0.210_264_441_724_104_883e-3,
    0.217_439_618_115_212_643e-3,
    -0.164_318_106_536_763_890e-3,
    0.844_182_239_838_527_433e-4,
    -0.261_908_384_015_814_087e-4,
    0.368_991_826_595_316_234e-5,
];

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma(x))
}

/// Unchecked `ln Γ(x)`; the caller guarantees `x > 0`.
pub(crate) fn ln_gamma(x: f64) -> f64 {
    // Γ(1) = Γ(2) = 1 exactly; the series leaves ~1e-16 residue there.
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if x < 0.5 {
        // Γ(x) = Γ(x + 1) / x keeps the series in its accurate range.
        return ln_gamma(x + 1.0) - x.ln();
    }
    let mut y = x;
    let tmp = x + LANCZOS_G;
    let tmp = (x + 0.5) * tmp.ln() - tmp;
    let mut ser = 0.999_999_999_999_997_092;
    for c in LANCZOS_COF {
        y += 1.0;
        ser += c / y;
    }
    tmp + (2.506_628_274_631_000_5 * ser / x).ln()
}

/// `ln B(a, b)`.
pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularised incomplete beta function `I_x(a, b)`.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!(
            "reg_inc_beta requires 0 <= x <= 1, got {x}"
        )));
    }
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::domain(format!(
            "reg_inc_beta requires a, b > 0, got a = {a}, b = {b}"
        )));
    }
    Ok(inc_beta(x, a, b))
}

/// Unchecked `I_x(a, b)`.
pub(crate) fn inc_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(x, a, b) / a
    } else {
        1.0 - front * beta_cf(1.0 - x, b, a) / b
    }
}

/// Continued fraction for the incomplete beta function, modified Lentz.
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let max_iter = 1000 + (10.0 * a.max(b).sqrt()) as usize;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=max_iter {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// `ln V_d(r)`, the log-volume of a `d`-ball of radius `r`.
pub fn ln_ball_volume(d: f64, r: f64) -> f64 {
    0.5 * d * LN_PI + d * r.ln() - ln_gamma(0.5 * d + 1.0)
}

/// Volume of a `d`-ball of radius `r`: `π^{d/2} r^d / Γ(d/2 + 1)`.
pub fn ball_volume(d: f64, r: f64) -> f64 {
    debug_assert!(d > 0.0 && r > 0.0);
    ln_ball_volume(d, r).exp()
}

/// Surface area of a `d`-ball of radius `r`: `d π^{d/2} r^{d-1} / Γ(d/2 + 1)`.
pub fn ball_area(d: f64, r: f64) -> f64 {
    debug_assert!(d > 0.0 && r > 0.0);
    (d.ln() + 0.5 * d * LN_PI + (d - 1.0) * r.ln() - ln_gamma(0.5 * d + 1.0)).exp()
}

/// Fraction of the volume of a `d`-ball of radius `r` lying in the cap of
/// height `h`, i.e. `{x : ‖x‖ ≤ r, x₀ ≥ r − h}`.
pub fn cap_volume_fraction(d: f64, r: f64, h: f64) -> f64 {
    debug_assert!(d > 0.0 && r > 0.0);
    if h <= 0.0 {
        0.0
    } else if h <= r {
        let z = ((2.0 * r * h - h * h) / (r * r)).clamp(0.0, 1.0);
        0.5 * inc_beta(z, 0.5 * (d + 1.0), 0.5)
    } else if h <= 2.0 * r {
        1.0 - cap_volume_fraction(d, r, 2.0 * r - h)
    } else {
        1.0
    }
}

/// Fraction of the unit sphere in `R^d` whose points make cosine at least
/// `alpha` with a fixed direction.
///
/// For `d = 1` the sphere is two points and the fraction is `1/2` on the
/// half-open interval `(-1, 1]`.
pub fn cap_area_fraction(d: usize, alpha: f64) -> f64 {
    debug_assert!(d >= 1);
    if alpha > 1.0 {
        return 0.0;
    }
    if alpha <= -1.0 {
        return 1.0;
    }
    if d == 1 {
        return 0.5;
    }
    if alpha >= 0.0 {
        // sin²(arccos α) = 1 − α²
        let z = (1.0 - alpha * alpha).clamp(0.0, 1.0);
        0.5 * inc_beta(z, 0.5 * (d as f64 - 1.0), 0.5)
    } else {
        1.0 - cap_area_fraction(d, -alpha)
    }
}

/// `₂F₁((1 − deg)/2, −deg/2; d/2 + 1; x)`.
///
/// One of the two upper parameters is a non-positive integer for every
/// integer `deg ≥ 1`, so the series terminates after at most
/// `⌊deg/2⌋ + 1` terms and is summed exactly.
pub fn hyp2f1_degree(deg: u32, d: f64, x: f64) -> Result<f64> {
    if deg == 0 {
        return Err(Error::domain("hyp2f1_degree requires deg >= 1"));
    }
    if !(d > 0.0) {
        return Err(Error::domain(format!(
            "hyp2f1_degree requires d > 0, got {d}"
        )));
    }
    Ok(hyp2f1_terminating(deg, d, x))
}

pub(crate) fn hyp2f1_terminating(deg: u32, d: f64, x: f64) -> f64 {
    let k = deg as f64;
    let a = 0.5 * (1.0 - k);
    let b = -0.5 * k;
    let c = 0.5 * d + 1.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 0..=(deg / 2) {
        let m = m as f64;
        let num = (a + m) * (b + m);
        if num == 0.0 {
            break;
        }
        term *= num / ((c + m) * (m + 1.0)) * x;
        sum += term;
    }
    sum
}

/// Spherical cap of a `dim`-ball: radius and height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapGeometry {
    dim: usize,
    radius: f64,
    height: f64,
}

impl CapGeometry {
    pub fn new(dim: usize, radius: f64, height: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("cap dimension must be at least 1"));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid(format!(
                "cap radius must be positive, got {radius}"
            )));
        }
        if height.is_nan() {
            return Err(Error::invalid("cap height is NaN"));
        }
        Ok(Self {
            dim,
            radius,
            height,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn volume_fraction(&self) -> f64 {
        cap_volume_fraction(self.dim as f64, self.radius, self.height)
    }

    pub fn volume(&self) -> f64 {
        ball_volume(self.dim as f64, self.radius) * self.volume_fraction()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn log_gamma_known_values() {
        assert_eq!(log_gamma(1.0).unwrap(), 0.0);
        assert!((log_gamma(0.5).unwrap() - 0.5 * PI.ln()).abs() < 1e-14);
        assert!((log_gamma(5.0).unwrap() - 24f64.ln()).abs() < 1e-13);
        // mpmath.loggamma at 30 digits
        let table = [
            (1.5, -0.12078223763524522),
            (2.5, 0.2846828704729192),
            (10.3, 13.482036786138359),
            (37.25, 96.6198845882781),
            (100.0, 359.1342053695754),
            (199.5, 855.2863892734525),
        ];
        for (x, want) in table {
            let got = log_gamma(x).unwrap();
            assert!(
                ((got - want) / want).abs() < 1e-12,
                "x={x}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn log_gamma_domain() {
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
        assert!(log_gamma(f64::NAN).is_err());
    }

    #[test]
    fn inc_beta_endpoints_and_closed_form() {
        assert_eq!(reg_inc_beta(0.0, 2.0, 3.0).unwrap(), 0.0);
        assert_eq!(reg_inc_beta(1.0, 2.0, 3.0).unwrap(), 1.0);
        // I_x(1, 1/2) = 1 − √(1 − x)
        assert!((reg_inc_beta(0.75, 1.0, 0.5).unwrap() - 0.5).abs() < 1e-14);
        // direct quadrature of t^{a−1}(1 − t)^{b−1} / B(a, b), B(1, 1/2) = 2
        let direct = simpson(|t| (1.0 - t).powf(-0.5), 0.0, 0.75, 2000) / 2.0;
        assert!((direct - 0.5).abs() < 1e-12);
        // t = w² makes t^{3/2}(1 − t)^{−1/2} dt = 2w⁴(1 − w²)^{−1/2} dw smooth
        let direct = simpson(
            |w| 2.0 * w.powi(4) / (1.0 - w * w).sqrt(),
            0.0,
            0.6f64.sqrt(),
            2000,
        ) / ln_beta(2.5, 0.5).exp();
        assert!((reg_inc_beta(0.6, 2.5, 0.5).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn inc_beta_reference_values() {
        // mpmath.betainc(a, b, 0, x, regularized=True)
        let table = [
            (0.3, 2.5, 0.5, 0.01892712407194565),
            (0.9, 10.5, 0.5, 0.141553091812887),
            (0.01, 0.5, 0.5, 0.06376856085851985),
            (0.6, 30.0, 40.0, 0.998074111202461),
            (0.999, 3.0, 0.5, 0.9407468104840537),
            (0.2, 1000.0, 3000.0, 8.069693549528041e-15),
            (0.5, 25.5, 0.5, 3.2540433295050476e-09),
        ];
        for (x, a, b, want) in table {
            let got = reg_inc_beta(x, a, b).unwrap();
            assert!(
                (got - want).abs() < 1e-12,
                "I_{x}({a},{b}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn inc_beta_domain() {
        assert!(reg_inc_beta(-0.1, 1.0, 1.0).is_err());
        assert!(reg_inc_beta(1.1, 1.0, 1.0).is_err());
        assert!(reg_inc_beta(0.5, 0.0, 1.0).is_err());
        assert!(reg_inc_beta(0.5, 1.0, -2.0).is_err());
    }

    #[test]
    fn ball_volume_and_area() {
        assert!((ball_volume(1.0, 1.0) - 2.0).abs() < 1e-14);
        assert!((ball_volume(2.0, 1.0) - PI).abs() < 1e-14);
        assert!((ball_volume(3.0, 2.0) - 32.0 * PI / 3.0).abs() < 1e-12);
        assert!((ball_area(2.0, 1.0) - 2.0 * PI).abs() < 1e-14);
        assert!((ball_area(3.0, 1.0) - 4.0 * PI).abs() < 1e-13);
        assert!((ball_area(1.0, 1.0) - 2.0).abs() < 1e-14);
        // large d stays finite in log space
        assert!(ball_volume(400.0, 1.0) > 0.0);
    }

    #[test]
    fn cap_volume_branches() {
        for d in 1..=12 {
            let d = d as f64;
            assert_eq!(cap_volume_fraction(d, 1.0, -0.1), 0.0);
            assert!((cap_volume_fraction(d, 1.0, 1.0) - 0.5).abs() < 1e-15);
            assert_eq!(cap_volume_fraction(d, 1.0, 2.5), 1.0);
        }
        // a cap of [−1, 1] of height h has length h
        for h in [0.1, 0.5, 0.9, 1.3, 1.75] {
            assert!((cap_volume_fraction(1.0, 1.0, h) - h / 2.0).abs() < 1e-13);
        }
        // disc segment: (r² acos((r−h)/r) − (r−h)√(2rh − h²)) / (π r²)
        let (r, h) = (2.0f64, 0.7f64);
        let seg =
            (r * r * ((r - h) / r).acos() - (r - h) * (2.0 * r * h - h * h).sqrt()) / (PI * r * r);
        assert!((cap_volume_fraction(2.0, r, h) - seg).abs() < 1e-13);
        // ball: π h² (3r − h) / 3 over 4π r³ / 3
        let cap3 = h * h * (3.0 * r - h) / (4.0 * r * r * r);
        assert!((cap_volume_fraction(3.0, r, h) - cap3).abs() < 1e-13);
    }

    #[test]
    fn cap_geometry_validation() {
        assert!(CapGeometry::new(0, 1.0, 0.5).is_err());
        assert!(CapGeometry::new(2, 0.0, 0.5).is_err());
        let cap = CapGeometry::new(3, 1.0, 2.0).unwrap();
        assert!((cap.volume() - 4.0 * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn cap_area_branches() {
        for d in 1..=10 {
            assert!((cap_area_fraction(d, 0.0) - 0.5).abs() < 1e-15);
            assert_eq!(cap_area_fraction(d, -1.5), 1.0);
            assert_eq!(cap_area_fraction(d, -1.0), 1.0);
            assert_eq!(cap_area_fraction(d, 1.2), 0.0);
        }
        assert_eq!(cap_area_fraction(1, 0.3), 0.5);
        assert_eq!(cap_area_fraction(1, 1.0), 0.5);
        assert_eq!(cap_area_fraction(1, -0.999), 0.5);
        // circle: arccos(α)/π
        for a in [-0.9, -0.3, 0.2, 0.77] {
            assert!((cap_area_fraction(2, a) - f64::acos(a) / PI).abs() < 1e-13);
        }
        // sphere in R³: (1 − α)/2 (Archimedes)
        for a in [-0.9, -0.3, 0.2, 0.77] {
            assert!((cap_area_fraction(3, a) - (1.0 - a) / 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn hyp2f1_terminating_series() {
        for d in 1..=6 {
            let d = d as f64;
            assert_eq!(hyp2f1_degree(1, d, 0.7).unwrap(), 1.0);
            for deg in 1..8 {
                assert_eq!(hyp2f1_degree(deg, d, 0.0).unwrap(), 1.0);
            }
            let x = 0.37;
            assert!((hyp2f1_degree(2, d, x).unwrap() - (1.0 + x / (d + 2.0))).abs() < 1e-15);
        }
        assert!(hyp2f1_degree(0, 3.0, 0.5).is_err());
    }

    #[test]
    fn hyp2f1_matches_moment_quadrature() {
        // ∫_{-1}^{1} V_{d−1}(√(1−t²))/V_d(1) (1 + t√x)^deg dt, substituting t = sin φ
        for d in 2..=6usize {
            let df = d as f64;
            let norm = (ln_ball_volume(df - 1.0, 1.0) - ln_ball_volume(df, 1.0)).exp();
            for deg in 1..=6u32 {
                for x in [0.0, 0.3, 0.81, 1.0] {
                    let f = |phi: f64| {
                        let t = phi.sin();
                        norm * phi.cos().powf(df) * (1.0 + t * f64::sqrt(x)).powi(deg as i32)
                    };
                    let quad = simpson(f, -PI / 2.0, PI / 2.0, 4000);
                    let series = hyp2f1_degree(deg, df, x).unwrap();
                    assert!(
                        (quad - series).abs() < 1e-9,
                        "d={d} deg={deg} x={x}: {quad} vs {series}"
                    );
                }
            }
        }
    }
}
