//! Bessel-Kingman hypergroups `K_α` on the half-line and Laguerre hypergroups
//! on `ℝ₊ × ℝ`: translations, characters, the dual fan, and the Hankel-type
//! Fourier transform.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quad::{gauss_jacobi, QuadValue, QuadratureSpec};
use crate::specfun::{j_norm_unchecked, laguerre_unchecked, log_gamma_unchecked};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselKingmanParams {
    alpha: f64,
}

impl BesselKingmanParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return Err(invalid(format!(
                "Bessel-Kingman order must satisfy alpha >= 1, got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Exponent of the Haar weight `x^{α-1}`.
    pub fn haar_exponent(&self) -> f64 {
        self.alpha - 1.0
    }

    /// Order `ν = α/2 - 1` of the normalized Bessel function in the characters.
    pub fn bessel_order(&self) -> f64 {
        0.5 * self.alpha - 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaguerreParams {
    alpha: f64,
}

impl LaguerreParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(invalid(format!(
                "Laguerre hypergroup order must satisfy alpha >= 0, got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    /// Character evaluation only; skips the hypergroup range check.
    pub(crate) fn unchecked(alpha: f64) -> Self {
        Self { alpha }
    }

    /// Order matching the process dimension `δ = α + 1`.
    pub fn for_dimension(delta: f64) -> Result<Self> {
        Self::new(delta - 1.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Exponent of the radial Haar weight `x^{2α+1} dx ds`.
    pub fn haar_exponent(&self) -> f64 {
        2.0 * self.alpha + 1.0
    }
}

/// A point `(x, w)` of the Laguerre hypergroup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeisPoint {
    pub x: f64,
    pub w: f64,
}

impl HeisPoint {
    pub fn new(x: f64, w: f64) -> Result<Self> {
        if !(x >= 0.0 && x.is_finite() && w.is_finite()) {
            return Err(invalid(format!(
                "Laguerre point needs finite x >= 0 and finite w, got ({x}, {w})"
            )));
        }
        Ok(Self { x, w })
    }

    pub const fn origin() -> Self {
        Self { x: 0.0, w: 0.0 }
    }

    /// The involution `(x, w) ↦ (x, -w)`.
    pub fn involution(self) -> Self {
        Self {
            x: self.x,
            w: -self.w,
        }
    }
}

/// A point of the dual fan `{(τ, k|τ|)} ∪ {(0, y₁)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FanRecord", into = "FanRecord")]
pub enum FanPoint {
    Discrete { tau: f64, k: u32 },
    Continuous { y1: f64 },
}

impl FanPoint {
    pub fn discrete(tau: f64, k: u32) -> Result<Self> {
        if !(tau != 0.0 && tau.is_finite()) {
            return Err(invalid(format!(
                "discrete fan point needs finite nonzero tau, got {tau}"
            )));
        }
        Ok(Self::Discrete { tau, k })
    }

    pub fn continuous(y1: f64) -> Result<Self> {
        if !(y1 >= 0.0 && y1.is_finite()) {
            return Err(invalid(format!(
                "continuous fan point needs finite y1 >= 0, got {y1}"
            )));
        }
        Ok(Self::Continuous { y1 })
    }

    /// First plane coordinate; zero on the continuous ray.
    pub fn tau(&self) -> f64 {
        match *self {
            FanPoint::Discrete { tau, .. } => tau,
            FanPoint::Continuous { .. } => 0.0,
        }
    }

    /// The embedded plane point `(τ, k|τ|)` or `(0, y₁)`.
    pub fn plane(&self) -> (f64, f64) {
        match *self {
            FanPoint::Discrete { tau, k } => (tau, k as f64 * tau.abs()),
            FanPoint::Continuous { y1 } => (0.0, y1),
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, FanPoint::Discrete { .. })
    }
}

/// Flat serialized form: `k = -1` and `tau = 0` mark the continuous ray.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct FanRecord {
    tau: f64,
    k: i64,
    y1: f64,
}

impl From<FanPoint> for FanRecord {
    fn from(p: FanPoint) -> Self {
        let (tau, y1) = p.plane();
        let k = match p {
            FanPoint::Discrete { k, .. } => i64::from(k),
            FanPoint::Continuous { .. } => -1,
        };
        FanRecord { tau, k, y1 }
    }
}

impl TryFrom<FanRecord> for FanPoint {
    type Error = crate::Error;

    fn try_from(r: FanRecord) -> Result<Self> {
        if r.k < 0 {
            if r.tau != 0.0 {
                return Err(invalid("continuous fan point must have tau = 0"));
            }
            FanPoint::continuous(r.y1)
        } else {
            let k = u32::try_from(r.k).map_err(|_| invalid(format!("level {} too large", r.k)))?;
            FanPoint::discrete(r.tau, k)
        }
    }
}

/// `f(x ∗_α x′)`: the Bessel-Kingman translation of `f`.
pub fn bk_translate(
    f: impl Fn(f64) -> f64,
    x: f64,
    xp: f64,
    p: &BesselKingmanParams,
    q: &QuadratureSpec,
) -> Result<f64> {
    if !(x >= 0.0 && xp >= 0.0) {
        return Err(invalid(format!(
            "translation needs x, x' >= 0, got ({x}, {xp})"
        )));
    }
    if x == 0.0 {
        return Ok(f(xp));
    }
    if xp == 0.0 {
        return Ok(f(x));
    }
    let alpha = p.alpha();
    if alpha == 1.0 {
        return Ok(0.5 * (f(x + xp) + f((x - xp).abs())));
    }
    // With c = cos θ the weight sin^{α-2}θ dθ becomes (1-c²)^{(α-3)/2} dc.
    let a = 0.5 * (alpha - 3.0);
    let norm = log_gamma_unchecked(0.5 * alpha)
        - 0.5 * PI.ln()
        - log_gamma_unchecked(0.5 * (alpha - 1.0));
    let d2 = (x - xp) * (x - xp);
    let xx = 2.0 * x * xp;
    let integral = q.integrate_jacobi(|c| f((d2 + xx * (1.0 - c)).max(0.0).sqrt()), a, a)?;
    Ok(norm.exp() * integral)
}

/// `f(a ∗_α b)`: the Laguerre hypergroup translation of `f`.
pub fn lag_translate(
    f: impl Fn(HeisPoint) -> Complex64,
    a: HeisPoint,
    b: HeisPoint,
    p: &LaguerreParams,
    q: &QuadratureSpec,
) -> Result<Complex64> {
    let xx = a.x * b.x;
    let s = a.w + b.w;
    if xx == 0.0 {
        return Ok(f(HeisPoint {
            x: a.x.max(b.x),
            w: s,
        }));
    }
    let r2 = a.x * a.x + b.x * b.x;
    let at = |r: f64, theta: f64| {
        let (sin, cos) = theta.sin_cos();
        let x = (r2 + 2.0 * xx * r * cos).max(0.0).sqrt();
        f(HeisPoint {
            x,
            w: s + xx * r * sin,
        })
    };
    let alpha = p.alpha();
    if alpha == 0.0 {
        return q.circle_mean(|theta| at(1.0, theta));
    }
    // The θ-integral is 2π times a mean; r = (1+y)/2 turns r(1-r²)^{α-1} dr into (1-y)^{α-1} · 2^{-α} r (1+r)^{α-1} dy.
    let a_exp = alpha - 1.0;
    let scale = 2.0 * alpha * 2f64.powf(-alpha);
    q.refine_by_doubling(|n| {
        let rule = gauss_jacobi(n, a_exp, 0.0);
        let h = 2.0 * PI / n as f64;
        let mut total = Complex64::zero();
        for (&y, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let r = 0.5 * (1.0 + y);
            let radial = wt * r * (1.0 + r).powf(a_exp);
            let ring = (0..n).fold(Complex64::zero(), |acc, j| acc + at(r, h * j as f64));
            total = total + ring * (radial / n as f64);
        }
        total * scale
    })
}

/// `η_u(x) = j_{α/2-1}(u x)`.
pub fn bk_character(u: f64, x: f64, p: &BesselKingmanParams) -> f64 {
    j_norm_unchecked(p.bessel_order(), u * x)
}

/// The Laguerre hypergroup character indexed by a fan point.
pub fn lag_character(c: FanPoint, a: HeisPoint, p: &LaguerreParams) -> Complex64 {
    let alpha = p.alpha();
    match c {
        FanPoint::Discrete { tau, k } => {
            let kf = f64::from(k);
            let ln_pref = log_gamma_unchecked(kf + 1.0) + log_gamma_unchecked(alpha + 1.0)
                - log_gamma_unchecked(kf + alpha + 1.0);
            let r = tau.abs() * a.x * a.x;
            let modulus = (ln_pref - 0.5 * r).exp() * laguerre_unchecked(k, alpha, r);
            Complex64::from_polar(1.0, tau * a.w) * modulus
        }
        FanPoint::Continuous { y1 } => {
            Complex64::new(j_norm_unchecked(alpha, 2.0 * a.x * y1.sqrt()), 0.0)
        }
    }
}

/// `ψ(x, w) = -i w - x²/2`.
pub fn psi_heis(a: HeisPoint) -> Complex64 {
    Complex64::new(-0.5 * a.x * a.x, -a.w)
}

/// Result of a truncated Hankel-type transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierValue {
    pub value: f64,
    /// `|f(cutoff)| · cutoff^{α-1}`, a proxy for the neglected tail.
    pub tail_bound: f64,
    pub tail_warning: bool,
}

/// `∫_0^cutoff f(x) η_u(x) x^{α-1} dx`.
pub fn bk_fourier(
    f: impl Fn(f64) -> f64,
    u: f64,
    p: &BesselKingmanParams,
    q: &QuadratureSpec,
    cutoff: f64,
) -> Result<FourierValue> {
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(invalid(format!("cutoff must be positive, got {cutoff}")));
    }
    if !(u >= 0.0) {
        return Err(invalid(format!("transform variable must be >= 0, got {u}")));
    }
    let e = p.haar_exponent();
    let value = q.integrate(|x| f(x) * bk_character(u, x, p) * x.powf(e), 0.0, cutoff)?;
    let tail_bound = f(cutoff).abs() * cutoff.powf(e);
    Ok(FourierValue {
        value,
        tail_bound,
        tail_warning: tail_bound > q.abs_tol(),
    })
}

/// Gram matrix `G_mn = E[e^{-tX²/2}]`, `X ~ δ_{x_m} ∗ δ_{x_n}`, on `K_α`.
pub fn bk_gaussian_gram(
    points: &[f64],
    t: f64,
    p: &BesselKingmanParams,
    q: &QuadratureSpec,
) -> Result<Vec<Vec<f64>>> {
    points
        .iter()
        .map(|&xm| {
            points
                .iter()
                .map(|&xn| bk_translate(|y| (-0.5 * t * y * y).exp(), xm, xn, p, q))
                .collect()
        })
        .collect()
}

/// Gram matrix `G_mn = e^{tψ}(a_m ∗ ā_n)` on the Laguerre hypergroup.
pub fn lag_gaussian_gram(
    points: &[HeisPoint],
    t: f64,
    p: &LaguerreParams,
    q: &QuadratureSpec,
) -> Result<Vec<Vec<Complex64>>> {
    points
        .iter()
        .map(|&am| {
            points
                .iter()
                .map(|&an| lag_translate(|z| (psi_heis(z) * t).exp(), am, an.involution(), p, q))
                .collect()
        })
        .collect()
}
