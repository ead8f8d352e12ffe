//! Double-precision special functions.
//!
//! Everything the characters, kernels and identity checks need:
//!
//! * `ln Γ(x)` for `x > 0` and the Pochhammer symbol `(a)_k`,
//! * generalized Laguerre polynomials `L_k^{(a)}(x)` by upward recurrence,
//! * the normalized Bessel function `j_ν(z) = Γ(ν+1)(z/2)^{-ν} J_ν(z)` and its
//!   value on the imaginary axis `i_ν(y) = j_ν(iy) = Γ(ν+1)(y/2)^{-ν} I_ν(y)`,
//! * the confluent series `₁F₁(a;b;z)` and `₀F₁(;b;z)`, kept as oracles.
//!
//! Public functions validate their domain and reject NaN; the `*_unchecked`
//! variants are for callers that already hold a validated parameter.

use crate::error::{domain, Error, Result};

/// Truncation control for series evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPolicy {
    max_terms: usize,
    rel_tol: f64,
}

impl SeriesPolicy {
    pub fn new(max_terms: usize, rel_tol: f64) -> Result<Self> {
        if max_terms < 32 {
            return Err(Error::InvalidParameter(format!(
                "series max_terms must be at least 32, got {max_terms}"
            )));
        }
        if !(rel_tol > 0.0 && rel_tol < 1e-6) {
            return Err(Error::InvalidParameter(format!(
                "series rel_tol must lie in (0, 1e-6), got {rel_tol}"
            )));
        }
        Ok(Self { max_terms, rel_tol })
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }
}

impl Default for SeriesPolicy {
    fn default() -> Self {
        Self {
            max_terms: 2000,
            rel_tol: f64::EPSILON,
        }
    }
}

fn check_finite(func: &'static str, name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(domain(func, format!("{name} = {v} is not finite")))
    }
}

// Lanczos approximation, g = 671/128 with 14 terms.
const LANCZOS_G: f64 = 5.242_187_5;
const LANCZOS_COEF: [f64; 14] = [
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
    check_finite("log_gamma", "x", x)?;
    if x <= 0.0 {
        return Err(domain("log_gamma", format!("x = {x} must be positive")));
    }
    Ok(log_gamma_unchecked(x))
}

pub(crate) fn log_gamma_unchecked(x: f64) -> f64 {
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    let mut y = x;
    let t = x + LANCZOS_G;
    let head = (x + 0.5) * t.ln() - t;
    let mut ser = 0.999_999_999_999_997_092;
    for c in LANCZOS_COEF {
        y += 1.0;
        ser += c / y;
    }
    head + (2.506_628_274_631_000_5 * ser / x).ln()
}

/// Rising factorial `(a)_k = a(a+1)…(a+k-1)`, with `(a)_0 = 1`.
pub fn pochhammer(a: f64, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (a + f64::from(i)))
}

/// Generalized Laguerre polynomial `L_k^{(a)}(x)` for `a > -1`.
pub fn laguerre_l(k: u32, a: f64, x: f64) -> Result<f64> {
    check_finite("laguerre_l", "a", a)?;
    check_finite("laguerre_l", "x", x)?;
    if a <= -1.0 {
        return Err(domain("laguerre_l", format!("a = {a} must exceed -1")));
    }
    Ok(laguerre_unchecked(k, a, x))
}

// The recurrence runs in double-double so that values next to a root keep
// their relative accuracy.
pub(crate) fn laguerre_unchecked(k: u32, a: f64, x: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut prev = Dd::from(1.0);
    let mut cur = Dd::two_sum(1.0, a).add(Dd::from(-x));
    for n in 1..k {
        let n = f64::from(n);
        let lead = Dd::two_sum(2.0 * n + 1.0, a).add(Dd::from(-x));
        let back = Dd::two_sum(n, a);
        let next = lead
            .mul(cur)
            .add(back.mul(prev).neg())
            .div_f64(n + 1.0);
        prev = cur;
        cur = next;
    }
    cur.hi + cur.lo
}

/// Normalized Bessel function `j_ν(z) = Γ(ν+1)(z/2)^{-ν} J_ν(z)`, `j_ν(0) = 1`.
///
/// Uses the even power series while it is free of cancellation, the Hankel
/// asymptotic expansion for `z ≥ 25` once it converges to full precision, and
/// Miller's backward recurrence normalized by a Neumann sum in between.
pub fn bessel_j_norm(nu: f64, z: f64) -> Result<f64> {
    check_finite("bessel_j_norm", "nu", nu)?;
    check_finite("bessel_j_norm", "z", z)?;
    if nu <= -1.0 {
        return Err(domain("bessel_j_norm", format!("nu = {nu} must exceed -1")));
    }
    if z < 0.0 {
        return Err(domain("bessel_j_norm", format!("z = {z} must be nonnegative")));
    }
    Ok(j_norm_unchecked(nu, z))
}

/// Crossover above which the asymptotic form of `J_ν` is tried.
pub const BESSEL_ASYMPTOTIC_MIN: f64 = 25.0;

// Accept the power series when the sum of |terms| stays below this,
// i.e. cancellation costs at most ~1.5 decimal digits.
const SERIES_CANCELLATION_LIMIT: f64 = 32.0;

pub(crate) fn j_norm_unchecked(nu: f64, z: f64) -> f64 {
    if z == 0.0 {
        return 1.0;
    }
    if z < BESSEL_ASYMPTOTIC_MIN {
        if let Some(v) = j_norm_series(nu, z) {
            return v;
        }
    }
    let big_j = if z >= BESSEL_ASYMPTOTIC_MIN {
        hankel_j(nu, z).unwrap_or_else(|| miller_j(nu, z))
    } else {
        miller_j(nu, z)
    };
    (log_gamma_unchecked(nu + 1.0) - nu * (0.5 * z).ln()).exp() * big_j
}

fn j_norm_series(nu: f64, z: f64) -> Option<f64> {
    let q = -0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut abs_sum = 1.0;
    for m in 0..2000u32 {
        let m = f64::from(m);
        term *= q / ((m + 1.0) * (nu + m + 1.0));
        sum += term;
        abs_sum += term.abs();
        if abs_sum > SERIES_CANCELLATION_LIMIT {
            return None;
        }
        if term.abs() <= 0.25 * f64::EPSILON * sum.abs().max(f64::MIN_POSITIVE)
            && (m + 1.0) * (nu + m + 1.0) > -q
        {
            return Some(sum);
        }
    }
    None
}

// Hankel's expansion J_ν(z) ~ sqrt(2/(πz)) (P cos χ - Q sin χ); None unless the
// smallest term drops below double precision.
fn hankel_j(nu: f64, z: f64) -> Option<f64> {
    let mu = 4.0 * nu * nu;
    let (mut p, mut q) = (1.0, 0.0);
    let mut b = 1.0_f64;
    let mut last = f64::INFINITY;
    for k in 1..200u32 {
        let kf = f64::from(k);
        let odd = 2.0 * kf - 1.0;
        b *= (mu - odd * odd) / (8.0 * kf * z);
        if b.abs() > last {
            return None;
        }
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 1 {
            q += sign * b;
        } else {
            p += sign * b;
        }
        if b.abs() < 1e-17 {
            let chi = z - (0.5 * nu + 0.25) * std::f64::consts::PI;
            return Some((2.0 / (std::f64::consts::PI * z)).sqrt() * (p * chi.cos() - q * chi.sin()));
        }
        last = b.abs();
    }
    None
}

// Miller's algorithm: backward recurrence over orders μ+m, normalized by
// (z/2)^μ = Σ_k (μ+2k) Γ(μ+k)/k! J_{μ+2k}(z).
fn miller_j(nu: f64, z: f64) -> f64 {
    let (mu, target_order) = if nu >= 0.0 {
        (nu - nu.floor(), nu.floor() as i64)
    } else {
        (nu + 1.0, -1)
    };
    let top = nu.max(z).max(1.0);
    let mut n_start = (top + 20.0 + 10.0 * top.cbrt() + (40.0 * top).sqrt()).ceil() as usize;
    n_start += n_start % 2;

    // g[k] = Γ(μ+k)/k! for k ≥ 1
    let half = n_start / 2;
    let mut g = vec![0.0; half + 1];
    let gamma_mu1 = log_gamma_unchecked(mu + 1.0).exp();
    if half >= 1 {
        g[1] = gamma_mu1;
        for k in 1..half {
            g[k + 1] = g[k] * (mu + k as f64) / (k as f64 + 1.0);
        }
    }

    let mut j_next = 0.0;
    let mut j_cur = 1.0;
    let mut sum = 0.0;
    let mut target = 0.0;
    for m in (1..=n_start).rev() {
        if m % 2 == 0 {
            sum += (mu + m as f64) * g[m / 2] * j_cur;
        }
        if m as i64 == target_order {
            target = j_cur;
        }
        let j_prev = 2.0 * (mu + m as f64) / z * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        if j_cur.abs() > 1e250 {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            sum *= 1e-250;
            target *= 1e-250;
        }
    }
    sum += gamma_mu1 * j_cur;
    match target_order {
        0 => target = j_cur,
        -1 => target = 2.0 * mu / z * j_cur - j_next,
        _ => {}
    }
    target * (0.5 * z).powf(mu) / sum
}

/// `i_ν(y) = j_ν(iy) = Σ_m (y²/4)^m Γ(ν+1)/(m! Γ(ν+m+1))`, always `≥ 1`.
///
/// Returns [`Error::Overflow`] when the value exceeds `f64::MAX`; use
/// [`ln_bessel_i_norm`] to combine it with decaying exponentials.
pub fn bessel_i_norm(nu: f64, y: f64) -> Result<f64> {
    let ln = ln_bessel_i_norm(nu, y)?;
    if ln >= f64::MAX.ln() {
        return Err(Error::Overflow {
            func: "bessel_i_norm",
        });
    }
    Ok(ln.exp())
}

/// Natural logarithm of [`bessel_i_norm`]; finite for every admissible input.
pub fn ln_bessel_i_norm(nu: f64, y: f64) -> Result<f64> {
    check_finite("bessel_i_norm", "nu", nu)?;
    check_finite("bessel_i_norm", "y", y)?;
    if nu <= -1.0 {
        return Err(domain("bessel_i_norm", format!("nu = {nu} must exceed -1")));
    }
    if y < 0.0 {
        return Err(domain("bessel_i_norm", format!("y = {y} must be nonnegative")));
    }
    Ok(ln_i_norm_unchecked(nu, y))
}

pub(crate) fn ln_i_norm_unchecked(nu: f64, y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    if y >= 40.0 && y >= nu * nu {
        if let Some(ln_scaled) = ln_scaled_i_asymptotic(nu, y) {
            // ln(e^{-y} I_ν(y)) + y, then normalize.
            return log_gamma_unchecked(nu + 1.0) - nu * (0.5 * y).ln() + y + ln_scaled;
        }
    }
    let q = 0.25 * y * y;
    let ln_big = 280.0 * std::f64::consts::LN_10;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut ln_scale = 0.0;
    let mut m = 0.0;
    loop {
        term *= q / ((m + 1.0) * (nu + m + 1.0));
        sum += term;
        m += 1.0;
        if sum > 1e280 {
            sum *= 1e-280;
            term *= 1e-280;
            ln_scale += ln_big;
        }
        if term <= 0.25 * f64::EPSILON * sum && m * (nu + m) > q {
            break;
        }
    }
    sum.ln() + ln_scale
}

// ln(e^{-y} I_ν(y)) from I_ν(y) ~ e^y/sqrt(2πy) Σ (-1)^k a_k(ν)/y^k.
fn ln_scaled_i_asymptotic(nu: f64, y: f64) -> Option<f64> {
    let mu = 4.0 * nu * nu;
    let mut b = 1.0_f64;
    let mut s = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200u32 {
        let kf = f64::from(k);
        let odd = 2.0 * kf - 1.0;
        b *= (mu - odd * odd) / (8.0 * kf * y);
        if b.abs() > last {
            return None;
        }
        s += if k % 2 == 0 { b } else { -b };
        if b.abs() < 1e-17 {
            return Some(s.ln() - 0.5 * (2.0 * std::f64::consts::PI * y).ln());
        }
        last = b.abs();
    }
    None
}

// Double-double value `hi + lo` for the oracle series, whose alternating
// terms cancel by many digits when `z < 0`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn from(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        Self {
            hi: s,
            lo: (a - (s - bb)) + (b - bb),
        }
    }

    fn norm(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Self {
            hi: s,
            lo: lo - (s - hi),
        }
    }

    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn add(self, o: Self) -> Self {
        let s = Self::two_sum(self.hi, o.hi);
        let t = Self::two_sum(self.lo, o.lo);
        let r = Self::norm(s.hi, s.lo + t.hi);
        Self::norm(r.hi, r.lo + t.lo)
    }

    fn mul(self, o: Self) -> Self {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Self::norm(p, e + (self.hi * o.lo + self.lo * o.hi))
    }

    fn div_f64(self, d: f64) -> Self {
        let q1 = self.hi / d;
        let p = q1 * d;
        let e = q1.mul_add(d, -p);
        let s = Self::two_sum(self.hi, -p);
        let q2 = (s.hi + (s.lo - e + self.lo)) / d;
        Self::norm(q1, q2)
    }

    fn div(self, o: Self) -> Self {
        let q1 = self.hi / o.hi;
        let r = self.add(o.mul(Self::from(-q1)));
        let q2 = r.hi / o.hi;
        let r = r.add(o.mul(Self::from(-q2)));
        let q3 = r.hi / o.hi;
        Self::norm(q1, q2).add(Self::from(q3))
    }
}

/// Kummer's confluent series `₁F₁(a;b;z)` by direct summation, accumulated in
/// double-double arithmetic.
///
/// Terminates exactly when `a` is a nonpositive integer.
pub fn hyp1f1(a: f64, b: f64, z: f64, policy: &SeriesPolicy) -> Result<f64> {
    check_finite("hyp1f1", "a", a)?;
    check_finite("hyp1f1", "b", b)?;
    check_finite("hyp1f1", "z", z)?;
    if b <= 0.0 && b == b.floor() {
        return Err(domain("hyp1f1", format!("b = {b} is a nonpositive integer")));
    }
    let mut term = Dd::from(1.0);
    let mut sum = Dd::from(1.0);
    for k in 0..policy.max_terms {
        let kf = k as f64;
        let num = Dd::two_sum(a, kf).mul(Dd::from(z));
        let den = Dd::two_sum(b, kf).mul(Dd::from(kf + 1.0));
        term = term.mul(num).div(den);
        if term.hi == 0.0 {
            return Ok(sum.hi + sum.lo);
        }
        sum = sum.add(term);
        let ratio = (a + kf) / (b + kf) * z / (kf + 1.0);
        if term.hi.abs() <= policy.rel_tol * sum.hi.abs() && ratio.abs() < 1.0 {
            return Ok(sum.hi + sum.lo);
        }
    }
    Err(Error::NonConvergence {
        what: "hyp1f1",
        iterations: policy.max_terms,
    })
}

/// The series `₀F₁(;b;z) = Σ_k z^k/((b)_k k!)`, accumulated in double-double
/// arithmetic.
pub fn hyp0f1(b: f64, z: f64, policy: &SeriesPolicy) -> Result<f64> {
    check_finite("hyp0f1", "b", b)?;
    check_finite("hyp0f1", "z", z)?;
    if b <= 0.0 && b == b.floor() {
        return Err(domain("hyp0f1", format!("b = {b} is a nonpositive integer")));
    }
    let mut term = Dd::from(1.0);
    let mut sum = Dd::from(1.0);
    for k in 0..policy.max_terms {
        let kf = k as f64;
        let den = Dd::two_sum(b, kf).mul(Dd::from(kf + 1.0));
        term = term.mul(Dd::from(z)).div(den);
        if term.hi == 0.0 {
            return Ok(sum.hi + sum.lo);
        }
        sum = sum.add(term);
        let ratio = z / ((b + kf) * (kf + 1.0));
        if term.hi.abs() <= policy.rel_tol * sum.hi.abs() && ratio.abs() < 1.0 {
            return Ok(sum.hi + sum.lo);
        }
    }
    Err(Error::NonConvergence {
        what: "hyp0f1",
        iterations: policy.max_terms,
    })
}
