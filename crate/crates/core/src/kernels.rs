//! Transition laws of QBES(δ) on the fan and the BES(δ) transition density.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hypergroup::FanPoint;
use crate::quad::QuadratureSpec;
use crate::specfun::{ln_i_norm_unchecked, log_gamma_unchecked};

/// Upper bound on the number of atoms a single law may hold.
pub const MAX_ATOMS: usize = 4_000_000;

// Terms below this fraction of the modal weight are dropped from the window.
const WINDOW_FLOOR: f64 = 1e-30;

/// Which of the five transition regimes produced a law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum KernelCase {
    /// `s < 0`, `s + t < 0`.
    NegativeBinomial,
    /// `s < 0`, `s + t = 0`.
    GammaRay,
    /// `s < 0`, `s + t > 0`.
    ShiftedNegativeBinomial,
    /// Start on the continuous ray.
    Poisson,
    /// `s > 0`.
    Binomial,
}

impl KernelCase {
    pub const ALL: [KernelCase; 5] = [
        KernelCase::NegativeBinomial,
        KernelCase::GammaRay,
        KernelCase::ShiftedNegativeBinomial,
        KernelCase::Poisson,
        KernelCase::Binomial,
    ];

    /// Case number 1 to 5.
    pub fn number(self) -> u8 {
        match self {
            KernelCase::NegativeBinomial => 1,
            KernelCase::GammaRay => 2,
            KernelCase::ShiftedNegativeBinomial => 3,
            KernelCase::Poisson => 4,
            KernelCase::Binomial => 5,
        }
    }

    /// The case that applies to a step of length `t` from `start`.
    pub fn classify(start: FanPoint, t: f64) -> Self {
        match start {
            FanPoint::Continuous { .. } => KernelCase::Poisson,
            FanPoint::Discrete { tau, .. } if tau > 0.0 => KernelCase::Binomial,
            FanPoint::Discrete { tau, .. } => {
                let u = tau + t;
                if u < 0.0 {
                    KernelCase::NegativeBinomial
                } else if u == 0.0 {
                    KernelCase::GammaRay
                } else {
                    KernelCase::ShiftedNegativeBinomial
                }
            }
        }
    }
}

impl From<KernelCase> for u8 {
    fn from(c: KernelCase) -> u8 {
        c.number()
    }
}

impl TryFrom<u8> for KernelCase {
    type Error = Error;

    fn try_from(n: u8) -> Result<Self> {
        KernelCase::ALL
            .get(usize::from(n).wrapping_sub(1))
            .copied()
            .ok_or_else(|| invalid(format!("kernel case must be 1..=5, got {n}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "AtomRecord", try_from = "AtomRecord")]
pub struct Atom {
    pub point: FanPoint,
    pub prob: f64,
}

#[derive(Serialize, Deserialize)]
struct AtomRecord {
    tau: f64,
    k: i64,
    y1: f64,
    prob: f64,
}

impl From<Atom> for AtomRecord {
    fn from(a: Atom) -> Self {
        let (tau, y1) = a.point.plane();
        let k = match a.point {
            FanPoint::Discrete { k, .. } => i64::from(k),
            FanPoint::Continuous { .. } => -1,
        };
        AtomRecord {
            tau,
            k,
            y1,
            prob: a.prob,
        }
    }
}

impl TryFrom<AtomRecord> for Atom {
    type Error = Error;

    fn try_from(r: AtomRecord) -> Result<Self> {
        let point = if r.k < 0 {
            FanPoint::continuous(r.y1)?
        } else {
            let k = u32::try_from(r.k).map_err(|_| invalid("atom level too large"))?;
            FanPoint::discrete(r.tau, k)?
        };
        if !(0.0..=1.0).contains(&r.prob) {
            return Err(invalid(format!("atom probability {} outside [0, 1]", r.prob)));
        }
        Ok(Atom {
            point,
            prob: r.prob,
        })
    }
}

/// Gamma density with the given shape and scale on the ray `{(0, y₁)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaRay {
    pub shape: f64,
    pub scale: f64,
}

impl GammaRay {
    pub fn density(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 0.0;
        }
        if y == 0.0 {
            return match self.shape.partial_cmp(&1.0) {
                Some(std::cmp::Ordering::Less) => f64::INFINITY,
                Some(std::cmp::Ordering::Equal) => 1.0 / self.scale,
                _ => 0.0,
            };
        }
        let z = y / self.scale;
        ((self.shape - 1.0) * z.ln() - z - log_gamma_unchecked(self.shape)).exp() / self.scale
    }
}

/// Level distribution of a discrete law: level `offset + j` carries the
/// `j`-th term of the distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LevelDist {
    /// `Γ(r+j)/(Γ(r) j!) p^r q^j`.
    NegativeBinomial { shape: f64, p: f64, q: f64 },
    Poisson { mean: f64 },
    /// `C(n, j) p^j q^{n-j}`.
    Binomial { n: u32, p: f64, q: f64 },
}

impl LevelDist {
    /// `w_{j+1} / w_j`.
    pub fn ratio(&self, j: u64) -> f64 {
        let jf = j as f64;
        match *self {
            LevelDist::NegativeBinomial { shape, q, .. } => q * (shape + jf) / (jf + 1.0),
            LevelDist::Poisson { mean } => mean / (jf + 1.0),
            LevelDist::Binomial { n, p, q } => {
                if j >= u64::from(n) {
                    0.0
                } else {
                    (f64::from(n) - jf) / (jf + 1.0) * (p / q)
                }
            }
        }
    }

    fn mode(&self) -> f64 {
        match *self {
            LevelDist::NegativeBinomial { shape, p, q } => {
                if shape > 1.0 {
                    ((shape - 1.0) * q / p).floor()
                } else {
                    0.0
                }
            }
            LevelDist::Poisson { mean } => mean.floor(),
            LevelDist::Binomial { n, p, .. } => ((f64::from(n) + 1.0) * p).floor().min(f64::from(n)),
        }
    }

    fn last_index(&self) -> Option<u64> {
        match *self {
            LevelDist::Binomial { n, .. } => Some(u64::from(n)),
            _ => None,
        }
    }

    /// Closed-form `ln w_j` together with the magnitude of the summed log
    /// terms, which bounds the attainable absolute accuracy.
    pub fn ln_pmf(&self, j: u64) -> (f64, f64) {
        let jf = j as f64;
        let lf = log_gamma_unchecked(jf + 1.0);
        match *self {
            LevelDist::NegativeBinomial { shape, p, q } => {
                let a = log_gamma_unchecked(shape + jf);
                let b = log_gamma_unchecked(shape);
                let c = shape * p.ln();
                let d = if j == 0 { 0.0 } else { jf * q.ln() };
                (a - b - lf + c + d, a.abs() + b.abs() + lf + c.abs() + d.abs())
            }
            LevelDist::Poisson { mean } => {
                if mean == 0.0 {
                    return (if j == 0 { 0.0 } else { f64::NEG_INFINITY }, 0.0);
                }
                let a = jf * mean.ln();
                (a - mean - lf, a.abs() + mean + lf)
            }
            LevelDist::Binomial { n, p, q } => {
                let nf = f64::from(n);
                let a = log_gamma_unchecked(nf + 1.0);
                let b = log_gamma_unchecked(nf - jf + 1.0);
                let c = if j == 0 { 0.0 } else { jf * p.ln() };
                let d = if j == u64::from(n) { 0.0 } else { (nf - jf) * q.ln() };
                (a - lf - b + c + d, a + lf + b + c.abs() + d.abs())
            }
        }
    }
}

/// The untruncated continuation of a discrete law beyond its stored atoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSeries {
    pub tau: f64,
    /// Level of the first atom not stored.
    pub next_level: u32,
    /// Normalized probability of that level.
    pub next_prob: f64,
    pub level_offset: u32,
    pub dist: LevelDist,
}

/// A one-step law of QBES(δ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionLaw {
    pub case: KernelCase,
    /// Sorted by level; all share one first coordinate.
    pub atoms: Vec<Atom>,
    pub gamma: Option<GammaRay>,
    pub tail_mass: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailSeries>,
}

impl TransitionLaw {
    /// `Σ probs + gamma mass + tail_mass`.
    pub fn total_mass(&self) -> f64 {
        let atoms = neumaier_sum(self.atoms.iter().map(|a| a.prob));
        atoms + if self.gamma.is_some() { 1.0 } else { 0.0 } + self.tail_mass
    }

    /// Common first coordinate of the atoms, if the law is discrete.
    pub fn tau(&self) -> Option<f64> {
        self.atoms.first().map(|a| a.point.tau())
    }
}

/// Atom probability, or the gamma density for continuous points.
pub fn qbes_law_pmf(law: &TransitionLaw, point: FanPoint) -> f64 {
    match point {
        FanPoint::Continuous { y1 } => law.gamma.map_or(0.0, |g| g.density(y1)),
        FanPoint::Discrete { tau, k } => {
            if law.tau() != Some(tau) {
                return 0.0;
            }
            let level = |a: &Atom| match a.point {
                FanPoint::Discrete { k, .. } => k,
                FanPoint::Continuous { .. } => u32::MAX,
            };
            law.atoms
                .binary_search_by_key(&k, level)
                .map_or(0.0, |i| law.atoms[i].prob)
        }
    }
}

pub(crate) fn check_inputs(t: f64, delta: f64, trunc_eps: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid(format!("dimension delta must be positive, got {delta}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("time step must be positive, got {t}")));
    }
    if !(trunc_eps > 0.0 && trunc_eps <= 1e-6) {
        return Err(invalid(format!(
            "trunc_eps must lie in (0, 1e-6], got {trunc_eps}"
        )));
    }
    Ok(())
}

/// The law of the state after time `t` started from `start`.
pub fn qbes_transition(start: FanPoint, t: f64, delta: f64, trunc_eps: f64) -> Result<TransitionLaw> {
    check_inputs(t, delta, trunc_eps)?;
    transition_to(start, t, start.tau() + t, delta, trunc_eps)
}

/// As [`qbes_transition`] with the arrival coordinate `u` supplied by the
/// caller, so that paths on an absolute time grid land on `u = 0` exactly.
pub(crate) fn transition_to(
    start: FanPoint,
    t: f64,
    u: f64,
    delta: f64,
    trunc_eps: f64,
) -> Result<TransitionLaw> {
    let (case, dist, offset) = match start {
        FanPoint::Continuous { y1 } => (KernelCase::Poisson, LevelDist::Poisson { mean: y1 / t }, 0),
        FanPoint::Discrete { tau: s, k } if s > 0.0 => (
            KernelCase::Binomial,
            LevelDist::Binomial {
                n: k,
                p: s / u,
                q: t / u,
            },
            0,
        ),
        FanPoint::Discrete { tau: s, k } => {
            let shape = delta + f64::from(k);
            if u == 0.0 {
                return Ok(TransitionLaw {
                    case: KernelCase::GammaRay,
                    atoms: Vec::new(),
                    gamma: Some(GammaRay { shape, scale: t }),
                    tail_mass: 0.0,
                    tail: None,
                });
            }
            if u < 0.0 {
                let dist = LevelDist::NegativeBinomial {
                    shape,
                    p: u / s,
                    q: t / -s,
                };
                (KernelCase::NegativeBinomial, dist, k)
            } else {
                let dist = LevelDist::NegativeBinomial {
                    shape,
                    p: u / t,
                    q: -s / t,
                };
                (KernelCase::ShiftedNegativeBinomial, dist, 0)
            }
        }
    };
    discrete_law(case, dist, u, offset, trunc_eps)
}

pub(crate) fn discrete_law(
    case: KernelCase,
    dist: LevelDist,
    tau: f64,
    offset: u32,
    trunc_eps: f64,
) -> Result<TransitionLaw> {
    let mode = dist.mode();
    if !(mode < 1e15) || offset as f64 + mode > f64::from(u32::MAX) {
        return Err(Error::TooManyAtoms { limit: MAX_ATOMS });
    }
    let mode = mode as u64;

    // Unnormalized weights relative to the mode, by the exact term ratios.
    let mut below = Vec::new();
    let mut w = 1.0;
    let mut j = mode;
    while j > 0 {
        w /= dist.ratio(j - 1);
        if !(w > WINDOW_FLOOR) {
            break;
        }
        below.push(w);
        j -= 1;
        if below.len() > MAX_ATOMS {
            return Err(Error::TooManyAtoms { limit: MAX_ATOMS });
        }
    }
    let first = j;
    let mut above = Vec::new();
    let mut w = 1.0;
    let mut j = mode;
    let mut running = 1.0;
    loop {
        if dist.last_index() == Some(j) {
            break;
        }
        w *= dist.ratio(j);
        j += 1;
        if !(w > 0.0) {
            break;
        }
        above.push(w);
        running += w;
        if above.len() + below.len() > MAX_ATOMS {
            return Err(Error::TooManyAtoms { limit: MAX_ATOMS });
        }
        let rho = dist.ratio(j);
        if w < WINDOW_FLOOR && rho < 1.0 && w * rho / (1.0 - rho) <= WINDOW_FLOOR * running {
            break;
        }
    }
    let weights: Vec<f64> = below
        .iter()
        .rev()
        .copied()
        .chain(std::iter::once(1.0))
        .chain(above.iter().copied())
        .collect();
    let total = neumaier_sum(weights.iter().copied());

    // The closed-form modal probability must agree with the window sum.
    let (ln_anchor, magnitude) = dist.ln_pmf(mode);
    let drift = (ln_anchor.exp() * total - 1.0).abs();
    let allowed = 1e-12_f64.max(4.0 * f64::EPSILON * magnitude);
    if !(drift <= allowed) {
        return Err(Error::NormalizationDrift { drift });
    }

    let finite = dist.last_index().is_some();
    let mut atoms = Vec::new();
    let mut kept = Neumaier::default();
    let mut next = None;
    for (i, &wi) in weights.iter().enumerate() {
        let prob = wi / total;
        let level = offset as u64 + first + i as u64;
        if !finite && kept.value() >= 1.0 - trunc_eps {
            next = Some((level, prob));
            break;
        }
        atoms.push(Atom {
            point: FanPoint::Discrete {
                tau,
                k: u32::try_from(level).map_err(|_| Error::TooManyAtoms { limit: MAX_ATOMS })?,
            },
            prob,
        });
        kept.add(prob);
    }
    let sum = kept.value();
    if sum > 1.0 + 1e-12 {
        return Err(Error::NormalizationDrift { drift: sum - 1.0 });
    }
    let tail_mass = if finite { 0.0 } else { (1.0 - sum).max(0.0) };
    let tail = if finite {
        None
    } else {
        let (level, prob) = next.unwrap_or_else(|| {
            let j = first + weights.len() as u64;
            let last = *weights.last().expect("window is nonempty");
            (offset as u64 + j, last * dist.ratio(j - 1) / total)
        });
        Some(TailSeries {
            tau,
            next_level: u32::try_from(level).unwrap_or(u32::MAX),
            next_prob: prob,
            level_offset: offset,
            dist,
        })
    };
    Ok(TransitionLaw {
        case,
        atoms,
        gamma: None,
        tail_mass,
        tail,
    })
}

#[derive(Default, Clone, Copy)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub(crate) fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Neumaier::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Parameters of the BES(δ) transition density `p_t(x, ·)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesDensity {
    delta: f64,
    t: f64,
    x: f64,
}

impl BesDensity {
    pub fn new(delta: f64, t: f64, x: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid(format!("dimension delta must be positive, got {delta}")));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid(format!("time must be positive, got {t}")));
        }
        if !(x >= 0.0 && x.is_finite()) {
            return Err(invalid(format!("starting point must be >= 0, got {x}")));
        }
        Ok(Self { delta, t, x })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn x(&self) -> f64 {
        self.x
    }
}

/// `p_t(x, y)`, assembled in log-space.
pub fn bes_density(d: &BesDensity, y: f64) -> f64 {
    if !(y >= 0.0) {
        return 0.0;
    }
    let BesDensity { delta, t, x } = *d;
    if y == 0.0 {
        return match delta.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => f64::INFINITY,
            Some(std::cmp::Ordering::Equal) => {
                (2.0 / (std::f64::consts::PI * t)).sqrt() * (-x * x / (2.0 * t)).exp()
            }
            _ => 0.0,
        };
    }
    let nu = 0.5 * delta - 1.0;
    let ln_p = std::f64::consts::LN_2 + (delta - 1.0) * y.ln()
        - 0.5 * delta * (2.0 * t).ln()
        - log_gamma_unchecked(0.5 * delta)
        + ln_i_norm_unchecked(nu, x * y / t)
        - (x * x + y * y) / (2.0 * t);
    ln_p.exp()
}

/// Outcome of comparing a two-step composition with the direct law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionReport {
    pub max_abs_err: f64,
    /// Probability mass dropped by truncation on either route.
    pub truncated_mass: f64,
    pub compared_points: usize,
    pub notes: String,
}

// The law reached after two steps: either atoms sharing one first coordinate
// or a mixture of gamma densities on the ray.
enum Composite {
    Levels { tau: f64, levels: BTreeMap<u32, f64> },
    Ray(Vec<(f64, GammaRay)>),
}

/// Composes the kernels over `t1` then `t2` and compares with one step of
/// length `t1 + t2`: maximum absolute pmf discrepancy on atoms, maximum
/// absolute density discrepancy on the ray.
pub fn chapman_kolmogorov_qbes(
    start: FanPoint,
    t1: f64,
    t2: f64,
    delta: f64,
    trunc_eps: f64,
    q: &QuadratureSpec,
) -> Result<CompositionReport> {
    check_inputs(t1, delta, trunc_eps)?;
    check_inputs(t2, delta, trunc_eps)?;
    let s = start.tau();
    let total_t = t1 + t2;
    let direct = transition_to(start, total_t, s + total_t, delta, trunc_eps)?;
    let first = transition_to(start, t1, s + t1, delta, trunc_eps)?;
    let mut truncated = direct.tail_mass + first.tail_mass;

    let composite = if let Some(g) = first.gamma {
        // From the ray every continuation is Poisson at first coordinate t2.
        let max_level = direct
            .atoms
            .iter()
            .filter_map(|a| match a.point {
                FanPoint::Discrete { k, .. } => Some(k),
                FanPoint::Continuous { .. } => None,
            })
            .max()
            .unwrap_or(0);
        let c = g.scale / t2;
        let mut levels = BTreeMap::new();
        for l in 0..=max_level.saturating_add(1) {
            let lf = f64::from(l);
            let lnf = log_gamma_unchecked(lf + 1.0);
            let mass = q.expect_gamma(
                |y: f64| {
                    let m = c * y;
                    if m == 0.0 {
                        if l == 0 { 1.0 } else { 0.0 }
                    } else {
                        (lf * m.ln() - m - lnf).exp()
                    }
                },
                g.shape,
            )?;
            levels.insert(l, mass);
        }
        Composite::Levels { tau: s + total_t, levels }
    } else {
        let mut levels = BTreeMap::new();
        let mut ray = Vec::new();
        let mut tau2 = None;
        for atom in &first.atoms {
            let second = transition_to(atom.point, t2, s + total_t, delta, trunc_eps)?;
            truncated += atom.prob * second.tail_mass;
            if let Some(g) = second.gamma {
                ray.push((atom.prob, g));
                continue;
            }
            for b in &second.atoms {
                if let FanPoint::Discrete { tau, k } = b.point {
                    tau2.get_or_insert(tau);
                    *levels.entry(k).or_insert(0.0) += atom.prob * b.prob;
                }
            }
        }
        if !ray.is_empty() {
            Composite::Ray(ray)
        } else {
            Composite::Levels {
                tau: tau2.unwrap_or(s + total_t),
                levels,
            }
        }
    };

    match composite {
        Composite::Levels { tau, levels } => {
            let direct_tau = direct.tau().unwrap_or(f64::NAN);
            if direct.gamma.is_some() || (direct_tau - tau).abs() > 1e-12 * tau.abs().max(1.0) {
                return Ok(CompositionReport {
                    max_abs_err: 1.0,
                    truncated_mass: truncated,
                    compared_points: 0,
                    notes: "composed and direct laws live on different fan components".into(),
                });
            }
            let mut all: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
            for (&k, &p) in &levels {
                all.entry(k).or_insert((0.0, 0.0)).0 = p;
            }
            for a in &direct.atoms {
                if let FanPoint::Discrete { k, .. } = a.point {
                    all.entry(k).or_insert((0.0, 0.0)).1 = a.prob;
                }
            }
            let max_abs_err = all
                .values()
                .map(|(c, d)| (c - d).abs())
                .fold(0.0, f64::max);
            Ok(CompositionReport {
                max_abs_err,
                truncated_mass: truncated,
                compared_points: all.len(),
                notes: format!("case {} composed to atoms", first.case.number()),
            })
        }
        Composite::Ray(mix) => {
            let Some(g) = direct.gamma else {
                return Ok(CompositionReport {
                    max_abs_err: 1.0,
                    truncated_mass: truncated,
                    compared_points: 0,
                    notes: "composition reached the ray but the direct law is discrete".into(),
                });
            };
            // Compare densities on a grid covering the bulk of the direct law.
            let hi = g.scale * (g.shape + 12.0 * g.shape.sqrt() + 20.0);
            let n = 400;
            let mut max_abs_err: f64 = 0.0;
            for i in 1..=n {
                let y = hi * i as f64 / n as f64;
                let mixed = neumaier_sum(mix.iter().map(|(w, r)| w * r.density(y)));
                max_abs_err = max_abs_err.max((mixed - g.density(y)).abs());
            }
            Ok(CompositionReport {
                max_abs_err,
                truncated_mass: truncated,
                compared_points: n,
                notes: "densities compared on the continuous ray".into(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn levels(law: &TransitionLaw) -> Vec<u32> {
        law.atoms
            .iter()
            .map(|a| match a.point {
                FanPoint::Discrete { k, .. } => k,
                FanPoint::Continuous { .. } => panic!("continuous atom"),
            })
            .collect()
    }

    #[test]
    fn case_five_level_zero_is_deterministic() {
        let start = FanPoint::discrete(1.0, 0).unwrap();
        let law = qbes_transition(start, 0.7, 2.3, 1e-12).unwrap();
        assert_eq!(law.case, KernelCase::Binomial);
        assert_eq!(law.atoms.len(), 1);
        assert_eq!(law.atoms[0].point, FanPoint::Discrete { tau: 1.7, k: 0 });
        assert!((law.atoms[0].prob - 1.0).abs() < 1e-15);
        assert_eq!(law.tail_mass, 0.0);
    }

    #[test]
    fn case_four_from_origin() {
        let law = qbes_transition(FanPoint::continuous(0.0).unwrap(), 2.0, 1.0, 1e-12).unwrap();
        assert_eq!(law.case, KernelCase::Poisson);
        assert_eq!(law.atoms, vec![Atom {
            point: FanPoint::Discrete { tau: 2.0, k: 0 },
            prob: 1.0
        }]);
    }

    #[test]
    fn case_one_geometric_example() {
        let law = qbes_transition(FanPoint::discrete(-2.0, 0).unwrap(), 1.0, 1.0, 1e-12).unwrap();
        assert_eq!(law.case, KernelCase::NegativeBinomial);
        for (l, a) in law.atoms.iter().enumerate() {
            assert_eq!(a.point, FanPoint::Discrete { tau: -1.0, k: l as u32 });
            let expected = 0.5f64.powi(l as i32 + 1);
            assert!((a.prob - expected).abs() <= 1e-15 * expected.max(1e-300) + 1e-300);
        }
        assert!(law.tail_mass <= 1e-12);
        assert!((law.total_mass() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn case_two_gamma() {
        let law = qbes_transition(FanPoint::discrete(-1.0, 0).unwrap(), 1.0, 1.5, 1e-12).unwrap();
        assert_eq!(law.case, KernelCase::GammaRay);
        assert_eq!(law.gamma, Some(GammaRay { shape: 1.5, scale: 1.0 }));
        assert!(law.atoms.is_empty());
    }

    #[test]
    fn case_levels_respect_geometry() {
        let l1 = qbes_transition(FanPoint::discrete(-3.0, 4).unwrap(), 1.0, 1.2, 1e-12).unwrap();
        assert!(levels(&l1).iter().all(|&k| k >= 4));
        let l5 = qbes_transition(FanPoint::discrete(0.5, 6).unwrap(), 1.0, 1.2, 1e-12).unwrap();
        assert!(levels(&l5).iter().all(|&k| k <= 6));
        assert_eq!(l5.tail_mass, 0.0);
    }

    #[test]
    fn pmf_lookup() {
        let start = FanPoint::discrete(1.0, 0).unwrap();
        let law = qbes_transition(start, 0.5, 2.0, 1e-12).unwrap();
        let at = FanPoint::discrete(1.5, 0).unwrap();
        assert!((qbes_law_pmf(&law, at) - 1.0).abs() < 1e-15);
        assert_eq!(qbes_law_pmf(&law, FanPoint::discrete(1.5, 1).unwrap()), 0.0);
        assert_eq!(qbes_law_pmf(&law, FanPoint::discrete(2.5, 0).unwrap()), 0.0);
        let ray = TransitionLaw {
            case: KernelCase::GammaRay,
            atoms: vec![],
            gamma: Some(GammaRay { shape: 1.0, scale: 1.0 }),
            tail_mass: 0.0,
            tail: None,
        };
        assert_eq!(qbes_law_pmf(&ray, FanPoint::continuous(0.0).unwrap()), 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let start = FanPoint::discrete(-1.0, 0).unwrap();
        assert!(qbes_transition(start, 1.0, 0.0, 1e-12).is_err());
        assert!(qbes_transition(start, 1.0, 1.0, 1e-3).is_err());
        assert!(qbes_transition(start, 0.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn huge_mean_is_refused() {
        let start = FanPoint::discrete(-1.0, 0).unwrap();
        let r = qbes_transition(start, 1.0 - 1e-12, 1.0, 1e-12);
        assert!(matches!(r, Err(Error::TooManyAtoms { .. })));
    }

    #[test]
    fn bes_density_reflected_gaussian() {
        let d = BesDensity::new(1.0, 0.8, 1.3).unwrap();
        for y in [0.0f64, 0.1, 0.9, 2.5, 6.0] {
            let c = (2.0 * std::f64::consts::PI * 0.8).powf(-0.5);
            let expected = c
                * ((-(1.3 - y) * (1.3 - y) / 1.6).exp() + (-(1.3 + y) * (1.3 + y) / 1.6).exp());
            assert!((bes_density(&d, y) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn serde_case_numbers() {
        assert_eq!(serde_json::to_string(&KernelCase::Poisson).unwrap(), "4");
        assert!(serde_json::from_str::<KernelCase>("6").is_err());
        assert!(serde_json::from_str::<KernelCase>("0").is_err());
    }
}
