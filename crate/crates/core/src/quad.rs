//! Gaussian quadrature.
//!
//! Rules come from the three-term recurrence of the weight's orthogonal
//! polynomials: eigenvalues of the Jacobi matrix give the nodes, a Newton
//! step on the orthonormal recurrence polishes them, and the Christoffel sum
//! gives the weights. Rules are cached per (family, size, exponents).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::log_gamma_unchecked;

/// Largest rule size reached by node doubling.
pub const MAX_RULE_NODES: usize = 1024;

/// How an integral is refined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureKind {
    /// One rule with `nodes` points, no refinement.
    GaussLegendre,
    /// Bisection for plain integrals; node doubling for weighted rules.
    AdaptiveBisection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    nodes: usize,
    kind: QuadratureKind,
    abs_tol: f64,
    max_depth: u32,
}

impl QuadratureSpec {
    pub fn new(nodes: usize, kind: QuadratureKind, abs_tol: f64) -> Result<Self> {
        if nodes < 16 {
            return Err(Error::InvalidParameter(format!(
                "quadrature needs at least 16 nodes per axis, got {nodes}"
            )));
        }
        if nodes > MAX_RULE_NODES {
            return Err(Error::InvalidParameter(format!(
                "quadrature supports at most {MAX_RULE_NODES} nodes, got {nodes}"
            )));
        }
        if !(abs_tol > 0.0 && abs_tol.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "quadrature abs_tol must be positive, got {abs_tol}"
            )));
        }
        Ok(Self {
            nodes,
            kind,
            abs_tol,
            max_depth: 20,
        })
    }

    pub fn fixed(nodes: usize) -> Result<Self> {
        Self::new(nodes, QuadratureKind::GaussLegendre, 1e-10)
    }

    pub fn with_max_depth(mut self, depth: u32) -> Self {
        self.max_depth = depth;
        self
    }

    pub fn with_abs_tol(self, abs_tol: f64) -> Result<Self> {
        Self::new(self.nodes, self.kind, abs_tol).map(|q| Self {
            max_depth: self.max_depth,
            ..q
        })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn kind(&self) -> QuadratureKind {
        self.kind
    }

    pub fn abs_tol(&self) -> f64 {
        self.abs_tol
    }

    /// `∫_a^b f(x) dx`.
    pub fn integrate<T: QuadValue>(&self, f: impl Fn(f64) -> T, a: f64, b: f64) -> Result<T> {
        if a == b {
            return Ok(T::zero());
        }
        let rule = gauss_jacobi(self.nodes, 0.0, 0.0);
        let (whole, _) = panel(&rule, &f, a, b);
        match self.kind {
            QuadratureKind::GaussLegendre => Ok(whole),
            QuadratureKind::AdaptiveBisection => {
                bisect(&rule, &f, a, b, whole, self.abs_tol, 0, self.max_depth)
            }
        }
    }

    /// `∫_{-1}^{1} (1-x)^a (1+x)^b f(x) dx` for `a, b > -1`.
    pub fn integrate_jacobi<T: QuadValue>(
        &self,
        f: impl Fn(f64) -> T,
        a: f64,
        b: f64,
    ) -> Result<T> {
        if !(a > -1.0 && b > -1.0) {
            return Err(Error::InvalidParameter(format!(
                "Jacobi weight exponents must exceed -1, got ({a}, {b})"
            )));
        }
        self.refine_by_doubling(|n| apply(&gauss_jacobi(n, a, b), &f))
    }

    /// `∫_0^c v^p g(v) dv` for `p > -1`, with the power weight handled exactly.
    pub fn integrate_power_weighted<T: QuadValue>(
        &self,
        g: impl Fn(f64) -> T,
        p: f64,
        c: f64,
    ) -> Result<T> {
        let half = 0.5 * c;
        let scale = half.powf(p + 1.0);
        self.integrate_jacobi(|x| g(half * (1.0 + x)), 0.0, p)
            .map(|v| v * scale)
    }

    /// `E[f(Y)]` for `Y ~ Gamma(shape, 1)`.
    pub fn expect_gamma<T: QuadValue>(&self, f: impl Fn(f64) -> T, shape: f64) -> Result<T> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma shape must be positive, got {shape}"
            )));
        }
        self.refine_by_doubling(|n| apply(&gamma_rule(n, shape - 1.0), &f))
    }

    /// `(1/2π) ∫_0^{2π} f(θ) dθ` by the periodic trapezoidal rule.
    pub fn circle_mean<T: QuadValue>(&self, f: impl Fn(f64) -> T) -> Result<T> {
        self.refine_by_doubling(|n| {
            let h = 2.0 * PI / n as f64;
            let sum = (0..n).fold(T::zero(), |acc, j| acc + f(h * j as f64));
            sum * (1.0 / n as f64)
        })
    }

    pub(crate) fn refine_by_doubling<T: QuadValue>(&self, eval: impl Fn(usize) -> T) -> Result<T> {
        let mut n = self.nodes;
        let mut prev = eval(n);
        if self.kind == QuadratureKind::GaussLegendre {
            return Ok(prev);
        }
        let mut steps = 0;
        while 2 * n <= MAX_RULE_NODES {
            n *= 2;
            steps += 1;
            let next = eval(n);
            let diff = (next - prev).magnitude();
            if diff <= self.abs_tol.max(1e-15 * next.magnitude()) {
                return Ok(next);
            }
            prev = next;
        }
        Err(Error::NonConvergence {
            what: "quadrature node doubling",
            iterations: steps,
        })
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes: 64,
            kind: QuadratureKind::AdaptiveBisection,
            abs_tol: 1e-10,
            max_depth: 20,
        }
    }
}

/// Values a quadrature can accumulate.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Nodes and weights of a Gaussian rule on its reference domain.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn apply<T: QuadValue>(rule: &Rule, f: &impl Fn(f64) -> T) -> T {
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .fold(T::zero(), |acc, (&x, &w)| acc + f(x) * w)
}

fn panel<T: QuadValue>(rule: &Rule, f: &impl Fn(f64) -> T, a: f64, b: f64) -> (T, f64) {
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    let mut sum = T::zero();
    let mut abs = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let v = f(c + h * x) * w;
        abs += v.magnitude();
        sum = sum + v;
    }
    (sum * h, abs * h.abs())
}

#[allow(clippy::too_many_arguments)]
fn bisect<T: QuadValue>(
    rule: &Rule,
    f: &impl Fn(f64) -> T,
    a: f64,
    b: f64,
    whole: T,
    tol: f64,
    depth: u32,
    max_depth: u32,
) -> Result<T> {
    let m = 0.5 * (a + b);
    let (left, left_abs) = panel(rule, f, a, m);
    let (right, right_abs) = panel(rule, f, m, b);
    let both = left + right;
    let roundoff = 64.0 * f64::EPSILON * (left_abs + right_abs);
    if (both - whole).magnitude() <= tol.max(roundoff) {
        return Ok(both);
    }
    if depth >= max_depth {
        return Err(Error::NonConvergence {
            what: "adaptive bisection",
            iterations: depth as usize,
        });
    }
    let l = bisect(rule, f, a, m, left, 0.5 * tol, depth + 1, max_depth)?;
    let r = bisect(rule, f, m, b, right, 0.5 * tol, depth + 1, max_depth)?;
    Ok(l + r)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum RuleKey {
    Jacobi { n: usize, a: u64, b: u64 },
    Gamma { n: usize, a: u64 },
}

fn cache() -> &'static Mutex<HashMap<RuleKey, Arc<Rule>>> {
    static RULES: OnceLock<Mutex<HashMap<RuleKey, Arc<Rule>>>> = OnceLock::new();
    RULES.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached(key: RuleKey, build: impl FnOnce() -> Rule) -> Arc<Rule> {
    if let Some(rule) = cache().lock().expect("rule cache poisoned").get(&key) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(build());
    cache()
        .lock()
        .expect("rule cache poisoned")
        .entry(key)
        .or_insert(rule)
        .clone()
}

/// Gauss–Jacobi rule for `(1-x)^a (1+x)^b` on `[-1, 1]`; `a = b = 0` is Gauss–Legendre.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Arc<Rule> {
    let key = RuleKey::Jacobi {
        n,
        a: a.to_bits(),
        b: b.to_bits(),
    };
    cached(key, || {
        let mut alpha = vec![0.0; n];
        let mut beta = vec![0.0; n + 1];
        let ab = a + b;
        for k in 0..n {
            let kf = k as f64;
            alpha[k] = if k == 0 {
                (b - a) / (ab + 2.0)
            } else {
                (b * b - a * a) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
            };
        }
        for (k, slot) in beta.iter_mut().enumerate().skip(1) {
            let kf = k as f64;
            *slot = if k == 1 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                let s = 2.0 * kf + ab;
                4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))
            };
        }
        let ln_mu0 = (ab + 1.0) * std::f64::consts::LN_2 + log_gamma_unchecked(a + 1.0)
            + log_gamma_unchecked(b + 1.0)
            - log_gamma_unchecked(ab + 2.0);
        golub_welsch(&alpha, &beta, ln_mu0.exp())
    })
}

/// Generalized Gauss–Laguerre rule for the Gamma(a+1, 1) probability density.
pub fn gamma_rule(n: usize, a: f64) -> Arc<Rule> {
    let key = RuleKey::Gamma { n, a: a.to_bits() };
    cached(key, || {
        let alpha: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + a + 1.0).collect();
        let beta: Vec<f64> = (0..=n).map(|k| k as f64 * (k as f64 + a)).collect();
        golub_welsch(&alpha, &beta, 1.0)
    })
}

// alpha[0..n], beta[0..=n] (beta[0] unused) of the monic recurrence
// p_{k+1} = (x - alpha_k) p_k - beta_k p_{k-1}; mu0 is the total weight.
fn golub_welsch(alpha: &[f64], beta: &[f64], mu0: f64) -> Rule {
    let n = alpha.len();
    let mut diag = alpha.to_vec();
    let mut off: Vec<f64> = (1..=n).map(|k| if k < n { beta[k].sqrt() } else { 0.0 }).collect();
    tridiagonal_eigenvalues(&mut diag, &mut off).expect("Jacobi matrix eigenvalues");
    diag.sort_by(f64::total_cmp);

    let sqrt_beta: Vec<f64> = beta.iter().map(|b| b.sqrt()).collect();
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &x0 in &diag {
        let mut x = x0;
        for _ in 0..2 {
            let ev = orthonormal_eval(x, alpha, &sqrt_beta, mu0);
            if ev.dp == 0.0 {
                break;
            }
            let dx = ev.p / ev.dp;
            if dx.abs() > 1e-6 * (1.0 + x.abs()) {
                break;
            }
            x -= dx;
        }
        let ev = orthonormal_eval(x, alpha, &sqrt_beta, mu0);
        nodes.push(x);
        weights.push((-ev.ln_sum_sq).exp());
    }
    Rule { nodes, weights }
}

struct OrthoEval {
    p: f64,
    dp: f64,
    ln_sum_sq: f64,
}

// Orthonormal p_n(x), p_n'(x) and ln Σ_{k<n} p_k(x)², rescaled against overflow.
fn orthonormal_eval(x: f64, alpha: &[f64], sqrt_beta: &[f64], mu0: f64) -> OrthoEval {
    let n = alpha.len();
    let (mut p_prev, mut p) = (0.0, 1.0 / mu0.sqrt());
    let (mut dp_prev, mut dp) = (0.0, 0.0);
    let mut sum = p * p;
    let mut ln_scale = 0.0;
    for k in 0..n {
        let sb_k = if k == 0 { 0.0 } else { sqrt_beta[k] };
        let p_next = ((x - alpha[k]) * p - sb_k * p_prev) / sqrt_beta[k + 1];
        let dp_next = (p + (x - alpha[k]) * dp - sb_k * dp_prev) / sqrt_beta[k + 1];
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
        if k + 1 < n {
            sum += p * p;
        }
        if p.abs() > 1e100 || sum > 1e200 {
            p *= 1e-100;
            p_prev *= 1e-100;
            dp *= 1e-100;
            dp_prev *= 1e-100;
            sum *= 1e-200;
            ln_scale += 100.0 * std::f64::consts::LN_10;
        }
    }
    OrthoEval {
        p,
        dp,
        ln_sum_sq: sum.ln() + 2.0 * ln_scale,
    }
}

/// Eigenvalues of a symmetric tridiagonal matrix by the implicit QL method.
///
/// `off[i]` couples rows `i` and `i+1`; `off[n-1]` must be zero. Eigenvalues
/// overwrite `diag` in no particular order.
pub(crate) fn tridiagonal_eigenvalues(diag: &mut [f64], off: &mut [f64]) -> Result<()> {
    let n = diag.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NonConvergence {
                    what: "tridiagonal QL",
                    iterations: iter,
                });
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let rule = gauss_jacobi(16, 0.0, 0.0);
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        // ∫ x^30 = 2/31, exact for 16 nodes.
        let v = apply(&rule, &|x: f64| x.powi(30));
        assert!((v - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn legendre_nodes_known() {
        // Largest node of the 5-point rule: sqrt(5 + 2 sqrt(10/7))/3.
        let rule = gauss_jacobi(5, 0.0, 0.0);
        let expected = (5.0 + 2.0 * (10.0_f64 / 7.0).sqrt()).sqrt() / 3.0;
        assert!((rule.nodes[4] - expected).abs() < 1e-15);
    }

    #[test]
    fn jacobi_rule_moments() {
        // Chebyshev weight: total π, second moment π/2.
        let rule = gauss_jacobi(32, -0.5, -0.5);
        let total: f64 = rule.weights.iter().sum();
        assert!((total - PI).abs() < 1e-13);
        let second = apply(&rule, &|x: f64| x * x);
        assert!((second - PI / 2.0).abs() < 1e-13);
        // (1-x)^{0.3}: ∫ (1-x)^{0.3} dx = 2^{1.3}/1.3
        let r2 = gauss_jacobi(20, 0.3, 0.0);
        let t2: f64 = r2.weights.iter().sum();
        assert!((t2 - 2f64.powf(1.3) / 1.3).abs() < 1e-13);
    }

    #[test]
    fn gamma_rule_moments() {
        // E[Y^2] for Y ~ Gamma(2.7, 1) is 2.7·3.7.
        let rule = gamma_rule(24, 1.7);
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-13);
        let m2 = apply(&rule, &|y: f64| y * y);
        assert!((m2 - 2.7 * 3.7).abs() < 1e-11);
    }

    #[test]
    fn large_gamma_rule_is_finite() {
        let rule = gamma_rule(MAX_RULE_NODES, 0.5);
        assert!(rule.weights.iter().all(|w| w.is_finite() && *w >= 0.0));
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let q = QuadratureSpec::new(16, QuadratureKind::AdaptiveBisection, 1e-12).unwrap();
        let v = q.integrate(|x: f64| (-(x - 3.0).powi(2) / 0.02).exp(), 0.0, 10.0).unwrap();
        assert!((v - (0.02 * PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn adaptive_reports_exhausted_budget() {
        let q = QuadratureSpec::new(16, QuadratureKind::AdaptiveBisection, 1e-14)
            .unwrap()
            .with_max_depth(2);
        let r = q.integrate(|x: f64| x.powf(-0.9), 0.0, 1.0);
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn circle_mean_of_trig_polynomial() {
        let q = QuadratureSpec::default();
        let v = q.circle_mean(|t: f64| (t.cos() + 0.5).powi(4)).unwrap();
        // mean of (cos t + 1/2)^4 = 3/8 + 6·(1/4)·(1/2) + 1/16
        assert!((v - (0.375 + 0.75 + 0.0625)).abs() < 1e-14);
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::new(8, QuadratureKind::GaussLegendre, 1e-10).is_err());
        assert!(QuadratureSpec::new(64, QuadratureKind::GaussLegendre, 0.0).is_err());
    }

    #[test]
    fn tridiagonal_ql_matches_closed_form() {
        // Eigenvalues of tridiag(-1, 2, -1) of size n: 2 - 2 cos(kπ/(n+1)).
        let n = 12;
        let mut d = vec![2.0; n];
        let mut e = vec![-1.0; n];
        e[n - 1] = 0.0;
        tridiagonal_eigenvalues(&mut d, &mut e).unwrap();
        d.sort_by(f64::total_cmp);
        for (k, v) in d.iter().enumerate() {
            let expected = 2.0 - 2.0 * ((k + 1) as f64 * PI / (n + 1) as f64).cos();
            assert!((v - expected).abs() < 1e-13);
        }
    }
}
