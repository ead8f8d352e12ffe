//! Numerical certificates for the identities behind the hypergroup
//! constructions and the transition kernels.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hypergroup::{
    bk_character, bk_gaussian_gram, bk_translate, lag_character, lag_gaussian_gram,
    lag_translate, psi_heis, BesselKingmanParams, FanPoint, HeisPoint, LaguerreParams,
};
use crate::kernels::{
    bes_density, chapman_kolmogorov_qbes, qbes_transition, BesDensity, KernelCase, TransitionLaw,
};
use crate::linalg::{min_eigenvalue_hermitian, symmetric_eigenvalues};
use crate::quad::QuadratureSpec;
use crate::sampling::RngState;
use crate::specfun::{
    hyp0f1, hyp1f1, j_norm_unchecked, laguerre_unchecked, ln_i_norm_unchecked,
    log_gamma_unchecked, pochhammer, SeriesPolicy,
};

/// Tolerance for checks resting on quadrature.
pub const TOL_QUADRATURE: f64 = 1e-8;
/// Tolerance for checks resting on series summation only.
pub const TOL_SERIES: f64 = 1e-10;
/// Tolerance for algebraically exact cases.
pub const TOL_EXACT: f64 = 1e-12;

const MAX_SERIES_TERMS: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub params: BTreeMap<String, f64>,
    pub max_abs_err: f64,
    pub tol: f64,
    pub pass: bool,
    #[serde(default)]
    pub notes: String,
}

impl VerificationReport {
    pub fn new(
        check: impl Into<String>,
        params: &[(&str, f64)],
        max_abs_err: f64,
        tol: f64,
        notes: impl Into<String>,
    ) -> Self {
        let mut notes = notes.into();
        let max_abs_err = if max_abs_err.is_finite() {
            max_abs_err.abs()
        } else {
            append(&mut notes, "error was not finite");
            f64::MAX
        };
        Self {
            check: check.into(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            max_abs_err,
            tol,
            pass: max_abs_err <= tol,
            notes,
        }
    }

    /// A failed report for a check whose evaluation raised an error.
    pub fn failed(check: impl Into<String>, params: &[(&str, f64)], tol: f64, err: &Error) -> Self {
        Self::new(check, params, f64::MAX, tol, err.to_string())
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self.pass = self.max_abs_err <= tol;
        self
    }
}

fn append(notes: &mut String, more: &str) {
    if !notes.is_empty() {
        notes.push_str("; ");
    }
    notes.push_str(more);
}

// Point where a log-envelope has dropped 16 decades below its running peak.
fn envelope_cutoff(log_env: impl Fn(f64) -> f64, step: f64) -> f64 {
    let drop = 16.0 * std::f64::consts::LN_10;
    let mut v = step;
    let mut peak = f64::NEG_INFINITY;
    loop {
        let e = log_env(v);
        peak = peak.max(e);
        if e < peak - drop && v > 4.0 * step {
            return v;
        }
        v += step;
        if v > 1e6 {
            return v;
        }
    }
}

/// `∫_0^∞ e^{-αv²} j_ν(iβv) j_ν(γv) v^{2ν+1}/(2^ν Γ(ν+1)) dv
///   = (2α)^{-(ν+1)} e^{(β²-γ²)/4α} j_ν(βγ/2α)`.
pub fn weber_schafheitlin_check(
    nu: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    q: &QuadratureSpec,
) -> Result<VerificationReport> {
    if !(nu > -1.0 && alpha > 0.0 && beta >= 0.0 && gamma >= 0.0) {
        return Err(invalid(format!(
            "Weber-Schafheitlin needs nu > -1, alpha > 0, beta, gamma >= 0; got ({nu}, {alpha}, {beta}, {gamma})"
        )));
    }
    let p = 2.0 * nu + 1.0;
    let cutoff = envelope_cutoff(
        |v| -alpha * v * v + beta * v + p * v.ln(),
        0.05 / alpha.sqrt(),
    );
    let ln_norm = -nu * std::f64::consts::LN_2 - log_gamma_unchecked(nu + 1.0);
    let lhs = q.integrate_power_weighted(
        |v| {
            let ln_i = ln_i_norm_unchecked(nu, beta * v);
            (ln_i - alpha * v * v + ln_norm).exp() * j_norm_unchecked(nu, gamma * v)
        },
        p,
        cutoff,
    )?;
    let rhs = (-(nu + 1.0) * (2.0 * alpha).ln() + (beta * beta - gamma * gamma) / (4.0 * alpha))
        .exp()
        * j_norm_unchecked(nu, beta * gamma / (2.0 * alpha));
    Ok(VerificationReport::new(
        "weber_schafheitlin",
        &[("nu", nu), ("alpha", alpha), ("beta", beta), ("gamma", gamma)],
        lhs - rhs,
        1e-9,
        format!("cutoff {cutoff:.3}"),
    ))
}

fn laguerre_order(delta: f64) -> Result<LaguerreParams> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid(format!("dimension delta must be positive, got {delta}")));
    }
    Ok(LaguerreParams::unchecked(delta - 1.0))
}

/// `∫ χ_y(a) law(dy)`, with `χ` the Laguerre characters of order `α`.
pub fn integrate_characters(
    law: &TransitionLaw,
    a: HeisPoint,
    p: &LaguerreParams,
    q: &QuadratureSpec,
) -> Result<Complex64> {
    if let Some(g) = law.gamma {
        let alpha = p.alpha();
        let v = q.expect_gamma(
            |y: f64| j_norm_unchecked(alpha, 2.0 * a.x * (g.scale * y).sqrt()),
            g.shape,
        )?;
        return Ok(Complex64::new(v, 0.0));
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for atom in &law.atoms {
        sum += lag_character(atom.point, a, p) * atom.prob;
    }
    Ok(sum)
}

/// `e^{tψ(x,w)} χ_start(x,-w) = ∫ χ_y(x,-w) q_t(start, dy)` with characters of order `δ-1`.
pub fn glowne3_check(
    start: FanPoint,
    a: HeisPoint,
    t: f64,
    delta: f64,
    trunc_eps: f64,
    q: &QuadratureSpec,
) -> Result<VerificationReport> {
    let p = laguerre_order(delta)?;
    let law = qbes_transition(start, t, delta, trunc_eps)?;
    let mirrored = a.involution();
    let lhs = (psi_heis(a) * t).exp() * lag_character(start, mirrored, &p);
    let rhs = integrate_characters(&law, mirrored, &p, q)?;
    let (s, y) = start.plane();
    let mut notes = format!("case {}, tail mass {:.1e}", law.case.number(), law.tail_mass);
    if delta < 1.0 {
        append(&mut notes, "informative: below the hypergroup range");
    }
    Ok(VerificationReport::new(
        "glowne3",
        &[
            ("case", f64::from(law.case.number())),
            ("delta", delta),
            ("start_tau", s),
            ("start_y", y),
            ("t", t),
            ("x", a.x),
            ("w", a.w),
        ],
        (lhs - rhs).norm(),
        TOL_QUADRATURE,
        notes,
    ))
}

/// `e^{-tx²/2} η_u(x) = ∫ η_v(x) p_t(u, dv)` on `K_δ`.
pub fn bk_spectral_check(
    u: f64,
    x: f64,
    t: f64,
    delta: f64,
    q: &QuadratureSpec,
) -> Result<VerificationReport> {
    let p = BesselKingmanParams::new(delta)?;
    let d = BesDensity::new(delta, t, u)?;
    if !(x >= 0.0) {
        return Err(invalid(format!("x must be >= 0, got {x}")));
    }
    let lhs = (-0.5 * t * x * x).exp() * bk_character(u, x, &p);
    let cutoff = u + envelope_cutoff(
        |r| -0.5 * r * r / t + (delta - 1.0).max(0.0) * (u + r).ln(),
        0.05 * t.sqrt(),
    );
    let rhs = q.integrate(|v| bk_character(v, x, &p) * bes_density(&d, v), 0.0, cutoff)?;
    Ok(VerificationReport::new(
        "bk_spectral",
        &[("delta", delta), ("t", t), ("u", u), ("x", x)],
        lhs - rhs,
        TOL_QUADRATURE,
        format!("cutoff {cutoff:.3}"),
    ))
}

/// Parameter grid for the Laguerre identity suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaguerreGrid {
    pub ks: Vec<u32>,
    pub vs: Vec<f64>,
    /// Must satisfy `|τ| < 1`.
    pub taus: Vec<f64>,
    /// `c` values for the `(c)_l/(α+1)_l` generating function.
    pub cs: Vec<f64>,
    /// Dilation factors for the binomial expansion.
    pub dilations: Vec<f64>,
}

impl Default for LaguerreGrid {
    fn default() -> Self {
        Self {
            ks: (0..=10).collect(),
            vs: vec![0.5, 2.1, 4.0],
            taus: vec![-0.4, 0.3, 0.6],
            cs: vec![0.7, 2.5],
            dilations: vec![0.3, 0.8, 1.7],
        }
    }
}

// Σ_{i≥0} coef_i L^{(α)}_{n0+i}(v) τ^i with coef_0 = 1 and coef_{i+1} = coef_i · ratio(i).
fn laguerre_series(
    alpha: f64,
    v: f64,
    n0: u32,
    tau: f64,
    ratio: impl Fn(u32) -> f64,
) -> Result<f64> {
    let mut prev = if n0 == 0 {
        0.0
    } else {
        laguerre_unchecked(n0 - 1, alpha, v)
    };
    let mut cur = laguerre_unchecked(n0, alpha, v);
    let mut coef = 1.0;
    let mut sum = cur;
    let mut small = 0;
    for i in 0..MAX_SERIES_TERMS as u32 {
        let n = f64::from(n0 + i);
        let next = ((2.0 * n + alpha + 1.0 - v) * cur - (n + alpha) * prev) / (n + 1.0);
        prev = cur;
        cur = next;
        coef *= ratio(i) * tau;
        let term = coef * cur;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) {
            small += 1;
            if small >= 8 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
    }
    Err(Error::NonConvergence {
        what: "Laguerre generating series",
        iterations: MAX_SERIES_TERMS,
    })
}

fn scaled_err(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / rhs.abs().max(1.0)
}

/// The Laguerre polynomial identities behind the five kernel cases.
pub fn laguerre_identity_suite(
    alpha: f64,
    grid: &LaguerreGrid,
    q: &QuadratureSpec,
) -> Result<Vec<VerificationReport>> {
    if !(alpha > -1.0 && alpha.is_finite()) {
        return Err(invalid(format!("Laguerre order must exceed -1, got {alpha}")));
    }
    if grid.taus.iter().any(|t| !(t.abs() < 1.0)) {
        return Err(invalid("generating-function grid needs |tau| < 1"));
    }
    let policy = SeriesPolicy::default();
    let scale_note = "errors scaled by max(1, |rhs|)";
    let mut reports = Vec::new();

    // (i) Σ_i C(i+j, i) L_{i+j}(v) τ^i = (1-τ)^{-α-1-j} e^{-vτ/(1-τ)} L_j(v/(1-τ)).
    let mut err: f64 = 0.0;
    for &j in &grid.ks {
        for &v in &grid.vs {
            for &tau in &grid.taus {
                let jf = f64::from(j);
                let lhs = laguerre_series(alpha, v, j, tau, |i| {
                    (f64::from(i) + jf + 1.0) / (f64::from(i) + 1.0)
                })?;
                let rhs = (-(alpha + 1.0 + jf) * (1.0 - tau).ln() - v * tau / (1.0 - tau)).exp()
                    * laguerre_unchecked(j, alpha, v / (1.0 - tau));
                err = err.max(scaled_err(lhs, rhs));
            }
        }
    }
    reports.push(VerificationReport::new(
        "laguerre_i_generating",
        &[("alpha", alpha)],
        err,
        TOL_SERIES,
        scale_note,
    ));

    // (ii) k! L_k(u) = u^{-α/2} ∫ e^{u-v} v^{k+α/2} J_α(2√(uv)) dv, written as
    // L_k(u) = e^u (α+1)_k / k! · E[j_α(2√(uV))], V ~ Gamma(k+α+1).
    let mut err: f64 = 0.0;
    for &k in &grid.ks {
        for &u in &grid.vs {
            let kf = f64::from(k);
            let factor = (u + log_gamma_unchecked(kf + alpha + 1.0)
                - log_gamma_unchecked(alpha + 1.0)
                - log_gamma_unchecked(kf + 1.0))
            .exp();
            let lhs = laguerre_unchecked(k, alpha, u);
            let qk = q.with_abs_tol((1e-10 / factor).max(1e-14))?;
            let mean = qk.expect_gamma(
                |y: f64| j_norm_unchecked(alpha, 2.0 * (u * y).sqrt()),
                kf + alpha + 1.0,
            )?;
            err = err.max(scaled_err(lhs, factor * mean));
        }
    }
    reports.push(VerificationReport::new(
        "laguerre_ii_integral",
        &[("alpha", alpha)],
        err,
        TOL_QUADRATURE,
        scale_note,
    ));

    // (iii) Σ_l (c)_l/(α+1)_l L_l(v) τ^l = (1-τ)^{-c} ₁F₁(c; α+1; -vτ/(1-τ)).
    let mut err: f64 = 0.0;
    for &c in &grid.cs {
        for &v in &grid.vs {
            for &tau in &grid.taus {
                let lhs = laguerre_series(alpha, v, 0, tau, |l| {
                    (c + f64::from(l)) / (alpha + 1.0 + f64::from(l))
                })?;
                let z = -v * tau / (1.0 - tau);
                let rhs = (1.0 - tau).powf(-c) * hyp1f1(c, alpha + 1.0, z, &policy)?;
                err = err.max(scaled_err(lhs, rhs));
            }
        }
    }
    reports.push(VerificationReport::new(
        "laguerre_iii_generating",
        &[("alpha", alpha)],
        err,
        TOL_SERIES,
        scale_note,
    ));

    // (iii) at c = α+1+k after Kummer's transform:
    // k!/(α+1)_k e^{-z} L_k(z) = (1-τ)^{α+1+k} Σ_l (α+1+k)_l/(α+1)_l L_l(v) τ^l, z = vτ/(1-τ).
    let mut err: f64 = 0.0;
    for &k in &grid.ks {
        for &v in &grid.vs {
            for &tau in &grid.taus {
                let kf = f64::from(k);
                let c = alpha + 1.0 + kf;
                let sum = laguerre_series(alpha, v, 0, tau, |l| {
                    (c + f64::from(l)) / (alpha + 1.0 + f64::from(l))
                })?;
                let rhs = (1.0 - tau).powf(c) * sum;
                let z = v * tau / (1.0 - tau);
                let lhs = (log_gamma_unchecked(kf + 1.0) - (pochhammer(alpha + 1.0, k)).ln() - z)
                    .exp()
                    * laguerre_unchecked(k, alpha, z);
                err = err.max(scaled_err(lhs, rhs));
            }
        }
    }
    reports.push(VerificationReport::new(
        "laguerre_iii_kummer",
        &[("alpha", alpha)],
        err,
        TOL_SERIES,
        scale_note,
    ));

    // (iv) Σ_l L_l(v)/(α+1)_l τ^l = e^τ ₀F₁(; α+1; -vτ) = e^τ j_α(2√(vτ)).
    let mut err: f64 = 0.0;
    for &v in &grid.vs {
        for tau in grid.taus.iter().map(|t| t.abs()).chain([1.5, 4.0]) {
            let lhs = laguerre_series(alpha, v, 0, tau, |l| 1.0 / (alpha + 1.0 + f64::from(l)))?;
            let via_series = tau.exp() * hyp0f1(alpha + 1.0, -v * tau, &policy)?;
            let via_bessel = tau.exp() * j_norm_unchecked(alpha, 2.0 * (v * tau).sqrt());
            err = err
                .max(scaled_err(lhs, via_series))
                .max(scaled_err(lhs, via_bessel));
        }
    }
    reports.push(VerificationReport::new(
        "laguerre_iv_bessel",
        &[("alpha", alpha)],
        err,
        TOL_SERIES,
        format!("{scale_note}; both the 0F1 series and j_alpha compared"),
    ));

    // (v) L_k(cv) = (α+1)_k Σ_{l≤k} c^l (1-c)^{k-l} / ((k-l)! (α+1)_l) L_l(v).
    // At c = 1 the sum collapses to a single term.
    let mut err: f64 = 0.0;
    let mut err_unit: f64 = 0.0;
    for &k in &grid.ks {
        for &v in &grid.vs {
            for &c in grid.dilations.iter().chain(&[1.0]) {
                let lhs = laguerre_unchecked(k, alpha, c * v);
                let mut sum = 0.0;
                for l in 0..=k {
                    let w = c.powi(l as i32) * (1.0 - c).powi((k - l) as i32)
                        / (log_gamma_unchecked(f64::from(k - l) + 1.0).exp()
                            * pochhammer(alpha + 1.0, l));
                    sum += w * laguerre_unchecked(l, alpha, v);
                }
                let e = scaled_err(lhs, pochhammer(alpha + 1.0, k) * sum);
                if c == 1.0 {
                    err_unit = err_unit.max(e);
                } else {
                    err = err.max(e);
                }
            }
        }
    }
    reports.push(VerificationReport::new(
        "laguerre_v_dilation",
        &[("alpha", alpha)],
        err,
        TOL_SERIES,
        scale_note,
    ));
    reports.push(VerificationReport::new(
        "laguerre_v_dilation_unit",
        &[("alpha", alpha)],
        err_unit,
        1e-13,
        scale_note,
    ));
    Ok(reports)
}

/// Kummer's transform `₁F₁(a;b;z) = e^z ₁F₁(b-a;b;-z)`, relative error.
pub fn kummer_check(a: f64, b: f64, z: f64) -> Result<VerificationReport> {
    let policy = SeriesPolicy::default();
    let lhs = hyp1f1(a, b, z, &policy)?;
    let rhs = z.exp() * hyp1f1(b - a, b, -z, &policy)?;
    Ok(VerificationReport::new(
        "kummer",
        &[("a", a), ("b", b), ("z", z)],
        (lhs - rhs).abs() / lhs.abs().max(f64::MIN_POSITIVE),
        1e-11,
        "relative error",
    ))
}

fn require_product_range(nu: f64) -> Result<()> {
    if !(nu >= -0.5 && nu.is_finite()) {
        return Err(invalid(format!(
            "product formulas need nu > -1/2 (or the degenerate nu = -1/2), got {nu}"
        )));
    }
    Ok(())
}

/// Gegenbauer's product formula, normalized by `2^{2ν}Γ(ν+1)²`:
/// `j_ν(x) j_ν(y) = Γ(ν+1)/(Γ(ν+1/2)√π) ∫_0^π j_ν(R) sin^{2ν}θ dθ`.
pub fn gegenbauer_check(nu: f64, x: f64, y: f64, q: &QuadratureSpec) -> Result<VerificationReport> {
    require_product_range(nu)?;
    if !(x > 0.0 && y > 0.0) {
        return Err(invalid(format!("Gegenbauer's formula needs x, y > 0, got ({x}, {y})")));
    }
    let params = [("nu", nu), ("x", x), ("y", y)];
    let lhs = j_norm_unchecked(nu, x) * j_norm_unchecked(nu, y);
    if nu == -0.5 {
        let rhs = 0.5 * (j_norm_unchecked(nu, x + y) + j_norm_unchecked(nu, (x - y).abs()));
        return Ok(VerificationReport::new(
            "gegenbauer",
            &params,
            lhs - rhs,
            TOL_EXACT,
            "degenerate cosine product",
        ));
    }
    let norm = (log_gamma_unchecked(nu + 1.0)
        - log_gamma_unchecked(nu + 0.5)
        - 0.5 * PI.ln())
    .exp();
    let a = nu - 0.5;
    let d2 = (x - y) * (x - y);
    let integral = q.integrate_jacobi(
        |c| j_norm_unchecked(nu, (d2 + 2.0 * x * y * (1.0 - c)).max(0.0).sqrt()),
        a,
        a,
    )?;
    Ok(VerificationReport::new(
        "gegenbauer",
        &params,
        lhs - norm * integral,
        TOL_QUADRATURE,
        "normalized by 2^(2nu) Gamma(nu+1)^2",
    ))
}

/// Watson's product formula for Laguerre polynomials.
pub fn watson_check(
    nu: f64,
    x: f64,
    y: f64,
    k: u32,
    q: &QuadratureSpec,
) -> Result<VerificationReport> {
    if !(nu > -0.5 && nu.is_finite()) {
        return Err(invalid(format!("Watson's formula needs nu > -1/2, got {nu}")));
    }
    if !(x.is_finite() && y.is_finite()) {
        return Err(invalid("Watson's formula needs finite x, y"));
    }
    let kf = f64::from(k);
    let lhs = laguerre_unchecked(k, nu, x * x) * laguerre_unchecked(k, nu, y * y);
    // J_{ν-1/2}(z)/z^{ν-1/2} = j_{ν-1/2}(z)/(2^{ν-1/2} Γ(ν+1/2)); with c = cos θ
    // the weight sin^{2ν}θ dθ becomes (1-c²)^{ν-1/2} dc.
    let norm = (log_gamma_unchecked(nu + kf + 1.0)
        - log_gamma_unchecked(kf + 1.0)
        - 0.5 * PI.ln()
        - log_gamma_unchecked(nu + 0.5))
    .exp();
    let xy = x * y;
    let r2 = x * x + y * y;
    let a = nu - 0.5;
    let integral = q.integrate_jacobi(
        |c| {
            let s = (1.0 - c * c).max(0.0).sqrt();
            (xy * c).exp()
                * j_norm_unchecked(a, (xy * s).abs())
                * laguerre_unchecked(k, nu, (r2 - 2.0 * xy * c).max(0.0))
        },
        a,
        a,
    )?;
    let rhs = norm * integral;
    Ok(VerificationReport::new(
        "watson",
        &[("k", kf), ("nu", nu), ("x", x), ("y", y)],
        scaled_err(lhs, rhs),
        TOL_QUADRATURE,
        "error scaled by max(1, |rhs|)",
    ))
}

/// `η_u(x ∗ x′) = η_u(x) η_u(x′)` on `K_α`.
pub fn bk_multiplicativity(
    alpha: f64,
    u: f64,
    x: f64,
    xp: f64,
    q: &QuadratureSpec,
) -> Result<f64> {
    let p = BesselKingmanParams::new(alpha)?;
    let lhs = bk_translate(|y| bk_character(u, y, &p), x, xp, &p, q)?;
    Ok((lhs - bk_character(u, x, &p) * bk_character(u, xp, &p)).abs())
}

/// `χ(a ∗ b) = χ(a) χ(b)` on the Laguerre hypergroup.
pub fn lag_multiplicativity(
    alpha: f64,
    c: FanPoint,
    a: HeisPoint,
    b: HeisPoint,
    q: &QuadratureSpec,
) -> Result<f64> {
    let p = LaguerreParams::new(alpha)?;
    let lhs = lag_translate(|z| lag_character(c, z, &p), a, b, &p, q)?;
    Ok((lhs - lag_character(c, a, &p) * lag_character(c, b, &p)).norm())
}

/// Which hypergroup a Gram check runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GramKind {
    /// `K_δ` with `x ↦ e^{-tx²/2}`.
    BesselKingman,
    /// `K_{δ-1}` with `e^{tψ}`.
    Laguerre,
}

/// Smallest eigenvalue of the Gram matrix of `e^{tψ}` on `n` grid points.
pub fn psd_gram_check(
    kind: GramKind,
    delta: f64,
    t: f64,
    n: usize,
    q: &QuadratureSpec,
) -> Result<VerificationReport> {
    if !(1..=12).contains(&n) {
        return Err(invalid(format!("Gram grids hold 1 to 12 points, got {n}")));
    }
    let min_eig = match kind {
        GramKind::BesselKingman => {
            let p = BesselKingmanParams::new(delta)?;
            let points: Vec<f64> = (0..n).map(|i| 0.35 * i as f64).collect();
            let g = bk_gaussian_gram(&points, t, &p, q)?;
            symmetric_eigenvalues(&g)?[0]
        }
        GramKind::Laguerre => {
            let p = LaguerreParams::for_dimension(delta)?;
            let points: Vec<HeisPoint> = (0..n)
                .map(|i| {
                    let f = i as f64;
                    HeisPoint {
                        x: 0.3 * f,
                        w: 0.7 * (1.3 * f).sin(),
                    }
                })
                .collect();
            let g = lag_gaussian_gram(&points, t, &p, q)?;
            min_eigenvalue_hermitian(&g)?
        }
    };
    let name = match kind {
        GramKind::BesselKingman => "psd_gram_bk",
        GramKind::Laguerre => "psd_gram_laguerre",
    };
    Ok(VerificationReport::new(
        name,
        &[("delta", delta), ("n", n as f64), ("t", t)],
        (-min_eig).max(0.0),
        TOL_QUADRATURE,
        format!("min eigenvalue {min_eig:.3e}"),
    ))
}

/// Chapman–Kolmogorov discrepancy as a report.
pub fn chapman_kolmogorov_check(
    start: FanPoint,
    t1: f64,
    t2: f64,
    delta: f64,
    tol: f64,
    q: &QuadratureSpec,
) -> Result<VerificationReport> {
    let r = chapman_kolmogorov_qbes(start, t1, t2, delta, 1e-14, q)?;
    let (s, y) = start.plane();
    Ok(VerificationReport::new(
        "chapman_kolmogorov",
        &[("delta", delta), ("start_tau", s), ("start_y", y), ("t1", t1), ("t2", t2)],
        r.max_abs_err,
        tol,
        format!("{}; truncated mass {:.1e}", r.notes, r.truncated_mass),
    ))
}

/// A random `(start, t, δ)` drawn so that the step falls in `case`.
pub fn random_kernel_tuple(case: KernelCase, rng: &mut RngState) -> (FanPoint, f64, f64) {
    let delta = 0.2 + 4.8 * rng.uniform();
    let k = (rng.uniform() * 20.0) as u32;
    let s = 0.1 + 4.9 * rng.uniform();
    let start = match case {
        KernelCase::Poisson => FanPoint::Continuous {
            y1: 10.0 * rng.uniform(),
        },
        KernelCase::Binomial => FanPoint::Discrete { tau: s, k },
        _ => FanPoint::Discrete { tau: -s, k },
    };
    let t = match case {
        KernelCase::NegativeBinomial => s * (0.05 + 0.9 * rng.uniform()),
        KernelCase::GammaRay => s,
        KernelCase::ShiftedNegativeBinomial => s * (1.05 + 3.0 * rng.uniform()),
        KernelCase::Poisson | KernelCase::Binomial => 0.05 + 3.0 * rng.uniform(),
    };
    (start, t, delta)
}

/// Normalization of `count` random laws spread over the five cases.
pub fn normalization_sweep(count: usize, seed: u64, trunc_eps: f64) -> Result<VerificationReport> {
    let mut rng = RngState::new(seed);
    let mut worst: f64 = 0.0;
    let mut worst_tail: f64 = 0.0;
    let mut seen = [0usize; 5];
    for i in 0..count {
        let case = KernelCase::ALL[i % 5];
        let (start, t, delta) = random_kernel_tuple(case, &mut rng);
        let law = qbes_transition(start, t, delta, trunc_eps)?;
        if law.case != case {
            return Err(invalid(format!("sweep drew case {} for case {}", law.case.number(), case.number())));
        }
        seen[usize::from(case.number()) - 1] += 1;
        worst = worst.max((law.total_mass() - 1.0).abs());
        worst_tail = worst_tail.max(law.tail_mass);
    }
    Ok(VerificationReport::new(
        "normalization",
        &[("count", count as f64), ("trunc_eps", trunc_eps)],
        worst.max(worst_tail),
        TOL_EXACT,
        format!(
            "max |mass - 1| {worst:.1e}, max tail {worst_tail:.1e}, per-case counts {seen:?}"
        ),
    ))
}

/// Names accepted by [`run_suite`].
pub const SUITES: [&str; 11] = [
    "weber_schafheitlin",
    "glowne3",
    "bk_spectral",
    "laguerre_identities",
    "kummer",
    "gegenbauer",
    "watson",
    "multiplicativity",
    "psd_gram",
    "chapman_kolmogorov",
    "normalization",
];

type Task = Box<dyn Fn() -> Vec<VerificationReport> + Send + Sync>;

fn single(
    name: &'static str,
    params: Vec<(&'static str, f64)>,
    tol: f64,
    f: impl Fn() -> Result<VerificationReport> + Send + Sync + 'static,
) -> Task {
    Box::new(move || vec![f().unwrap_or_else(|e| VerificationReport::failed(name, &params, tol, &e))])
}

fn tasks(suite: &str) -> Vec<Task> {
    let q = QuadratureSpec::default();
    let mut out: Vec<Task> = Vec::new();
    match suite {
        "weber_schafheitlin" => {
            for nu in [-0.75, -0.5, 0.5, 2.0] {
                for (a, b, g) in [(0.5, 0.0, 1.0), (1.0, 1.0, 1.0), (0.8, 1.5, 2.2)] {
                    out.push(single(
                        "weber_schafheitlin",
                        vec![("nu", nu), ("alpha", a), ("beta", b), ("gamma", g)],
                        1e-9,
                        move || weber_schafheitlin_check(nu, a, b, g, &q),
                    ));
                }
            }
        }
        "glowne3" => {
            let starts = [
                (FanPoint::Discrete { tau: -2.0, k: 2 }, 0.7),
                (FanPoint::Discrete { tau: -1.0, k: 2 }, 1.0),
                (FanPoint::Discrete { tau: -1.0, k: 2 }, 1.6),
                (FanPoint::Continuous { y1: 0.7 }, 0.9),
                (FanPoint::Discrete { tau: 0.5, k: 3 }, 0.8),
            ];
            for delta in [0.6, 1.0, 1.5, 2.0, 3.7] {
                for (start, t) in starts {
                    for (x, w) in [(0.8, 0.3), (2.0, -1.1)] {
                        let a = HeisPoint { x, w };
                        let (s, y) = start.plane();
                        out.push(single(
                            "glowne3",
                            vec![("delta", delta), ("start_tau", s), ("start_y", y), ("t", t)],
                            TOL_QUADRATURE,
                            move || glowne3_check(start, a, t, delta, 1e-14, &q),
                        ));
                    }
                }
            }
        }
        "bk_spectral" => {
            for delta in [1.0, 2.0, 2.5, 4.0] {
                for (u, x, t) in [(1.0, 1.3, 0.7), (0.0, 0.8, 1.0), (2.0, 0.5, 0.3), (1.5, 0.0, 0.5)] {
                    out.push(single(
                        "bk_spectral",
                        vec![("delta", delta), ("t", t), ("u", u), ("x", x)],
                        TOL_QUADRATURE,
                        move || bk_spectral_check(u, x, t, delta, &q),
                    ));
                }
            }
        }
        "laguerre_identities" => {
            for alpha in [-0.3, 0.0, 0.5, 2.1] {
                out.push(Box::new(move || {
                    laguerre_identity_suite(alpha, &LaguerreGrid::default(), &q).unwrap_or_else(|e| {
                        vec![VerificationReport::failed(
                            "laguerre_identities",
                            &[("alpha", alpha)],
                            TOL_SERIES,
                            &e,
                        )]
                    })
                }));
            }
        }
        "kummer" => {
            for (a, b) in [(0.5, 1.5), (-2.3, 0.7), (1.2, 3.4), (2.5, 1.0)] {
                for z in [-10.0, -3.5, -0.2, 0.0, 1.1, 4.0, 10.0] {
                    out.push(single(
                        "kummer",
                        vec![("a", a), ("b", b), ("z", z)],
                        1e-11,
                        move || kummer_check(a, b, z),
                    ));
                }
            }
        }
        "gegenbauer" => {
            for nu in [-0.5, -0.25, 0.0, 0.75, 2.0] {
                for (x, y) in [(1.3, 0.7), (3.0, 0.1), (5.0, 4.2)] {
                    out.push(single(
                        "gegenbauer",
                        vec![("nu", nu), ("x", x), ("y", y)],
                        TOL_QUADRATURE,
                        move || gegenbauer_check(nu, x, y, &q),
                    ));
                }
            }
        }
        "watson" => {
            for nu in [-0.25, 0.0, 0.5, 1.4] {
                for k in 0..=5 {
                    for (x, y) in [(1.0, 1.0), (0.0, 1.2), (0.7, -1.5), (1.8, 0.9)] {
                        out.push(single(
                            "watson",
                            vec![("k", f64::from(k)), ("nu", nu), ("x", x), ("y", y)],
                            TOL_QUADRATURE,
                            move || watson_check(nu, x, y, k, &q),
                        ));
                    }
                }
            }
        }
        "multiplicativity" => {
            out.push(Box::new(move || vec![multiplicativity_report(true, 50, 17, &q)]));
            out.push(Box::new(move || vec![multiplicativity_report(false, 50, 19, &q)]));
        }
        "psd_gram" => {
            for kind in [GramKind::BesselKingman, GramKind::Laguerre] {
                for delta in [1.0, 2.5] {
                    for t in [0.1, 1.0, 5.0] {
                        for n in [8, 12] {
                            out.push(single(
                                "psd_gram",
                                vec![("delta", delta), ("n", n as f64), ("t", t)],
                                TOL_QUADRATURE,
                                move || psd_gram_check(kind, delta, t, n, &q),
                            ));
                        }
                    }
                }
            }
        }
        "chapman_kolmogorov" => {
            for (start, t1, t2, delta, tol) in ck_scenarios() {
                out.push(single(
                    "chapman_kolmogorov",
                    vec![("delta", delta), ("t1", t1), ("t2", t2)],
                    tol,
                    move || chapman_kolmogorov_check(start, t1, t2, delta, tol, &q),
                ));
            }
        }
        "normalization" => {
            out.push(single(
                "normalization",
                vec![("count", 200.0)],
                TOL_EXACT,
                || normalization_sweep(200, 2024, 1e-12),
            ));
        }
        _ => {}
    }
    out
}

/// Scenario matrix covering every reachable pair of kernel cases:
/// `(start, t1, t2, δ, tol)`.
pub fn ck_scenarios() -> Vec<(FanPoint, f64, f64, f64, f64)> {
    let d = |tau, k| FanPoint::Discrete { tau, k };
    vec![
        // 1 → 1
        (d(-2.0, 0), 0.5, 0.5, 1.7, 1e-10),
        (d(-3.0, 4), 1.0, 0.8, 2.6, 1e-10),
        // 1 → 3
        (d(-1.5, 1), 0.7, 1.3, 2.3, 1e-8),
        // 1 → 2
        (d(-2.0, 1), 0.8, 1.2, 1.4, 1e-8),
        // 3 → 5
        (d(-1.0, 1), 1.0, 1.0, 2.3, 1e-8),
        // 2 → 4 against the direct case 3
        (d(-1.0, 1), 1.0, 0.6, 2.3, 1e-8),
        (d(-0.5, 3), 0.5, 1.5, 0.8, 1e-8),
        // 4 → 5
        (FanPoint::Continuous { y1: 1.3 }, 0.4, 0.9, 1.5, 1e-12),
        // 5 → 5
        (d(1.0, 3), 0.4, 0.6, 0.9, 1e-12),
        (d(0.3, 8), 1.1, 0.2, 3.1, 1e-12),
    ]
}

fn multiplicativity_report(bk: bool, count: usize, seed: u64, q: &QuadratureSpec) -> VerificationReport {
    let mut rng = RngState::new(seed);
    let mut worst: f64 = 0.0;
    let name = if bk { "multiplicativity_bk" } else { "multiplicativity_laguerre" };
    for _ in 0..count {
        let r = if bk {
            let alpha = 1.0 + 4.0 * rng.uniform();
            let u = 3.0 * rng.uniform();
            let x = 3.0 * rng.uniform();
            let xp = 3.0 * rng.uniform();
            bk_multiplicativity(alpha, u, x, xp, q)
        } else {
            let alpha = 3.0 * rng.uniform();
            let c = if rng.uniform() < 0.5 {
                let tau = 0.2 + 1.8 * rng.uniform();
                let tau = if rng.uniform() < 0.5 { -tau } else { tau };
                FanPoint::Discrete {
                    tau,
                    k: (rng.uniform() * 5.0) as u32,
                }
            } else {
                FanPoint::Continuous {
                    y1: 2.0 * rng.uniform(),
                }
            };
            let a = HeisPoint {
                x: 1.5 * rng.uniform(),
                w: 2.0 * rng.uniform() - 1.0,
            };
            let b = HeisPoint {
                x: 1.5 * rng.uniform(),
                w: 2.0 * rng.uniform() - 1.0,
            };
            lag_multiplicativity(alpha, c, a, b, q)
        };
        match r {
            Ok(e) => worst = worst.max(e),
            Err(e) => {
                return VerificationReport::failed(name, &[("count", count as f64)], 1e-6, &e)
            }
        }
    }
    VerificationReport::new(name, &[("count", count as f64)], worst, 1e-6, format!("seed {seed}"))
}

/// Runs one named suite, or all of them for `"all"`, with an optional
/// tolerance override. Reports come back sorted by check name, then params.
pub fn run_suite(name: &str, tol: Option<f64>) -> Result<Vec<VerificationReport>> {
    let names: Vec<&str> = if name == "all" {
        SUITES.to_vec()
    } else if SUITES.contains(&name) {
        vec![name]
    } else {
        return Err(invalid(format!(
            "unknown suite '{name}'; expected one of all, {}",
            SUITES.join(", ")
        )));
    };
    if let Some(t) = tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid(format!("tolerance must be positive, got {t}")));
        }
    }
    let all: Vec<Task> = names.iter().flat_map(|n| tasks(n)).collect();
    let mut reports: Vec<VerificationReport> = all.par_iter().flat_map_iter(|task| task()).collect();
    if let Some(t) = tol {
        reports = reports.into_iter().map(|r| r.with_tol(t)).collect();
    }
    sort_reports(&mut reports);
    Ok(reports)
}

/// Canonical order: check name, then parameters.
pub fn sort_reports(reports: &mut [VerificationReport]) {
    reports.sort_by(|a, b| {
        a.check.cmp(&b.check).then_with(|| {
            let ka: Vec<(&String, f64)> = a.params.iter().map(|(k, v)| (k, *v)).collect();
            let kb: Vec<(&String, f64)> = b.params.iter().map(|(k, v)| (k, *v)).collect();
            ka.iter()
                .zip(&kb)
                .map(|((ka, va), (kb, vb))| ka.cmp(kb).then(va.total_cmp(vb)))
                .find(|o| o.is_ne())
                .unwrap_or(ka.len().cmp(&kb.len()))
        })
    });
}
