//! Exact samplers and path simulation for QBES(δ) and BES(δ).
//!
//! Every path owns a stream derived from `(master_seed, path_id)`, so output
//! does not depend on how paths are scheduled across threads.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hypergroup::FanPoint;
use crate::kernels::{discrete_law, transition_to, KernelCase, LevelDist, TransitionLaw};
use crate::specfun::log_gamma_unchecked;

// Longest walk into the truncated tail of a law before giving up.
const MAX_TAIL_STEPS: u64 = 10_000_000;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A random stream; not shareable between concurrent units.
#[derive(Debug, Clone)]
pub struct RngState {
    inner: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self::for_path(seed, 0)
    }

    /// The stream of path `path_id` under `master_seed`.
    pub fn for_path(master_seed: u64, path_id: u64) -> Self {
        let key = splitmix64(master_seed ^ splitmix64(path_id));
        Self {
            inner: ChaCha8Rng::seed_from_u64(key),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// Gamma(shape, scale) by Marsaglia–Tsang, boosted for shape < 1.
pub fn sample_gamma(shape: f64, scale: f64, rng: &mut RngState) -> f64 {
    if shape < 1.0 {
        let boost = rng.uniform().powf(1.0 / shape);
        return sample_gamma(shape + 1.0, scale, rng) * boost;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = rng.standard_normal();
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = rng.uniform();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v * scale;
        }
    }
}

/// Poisson(mean): inversion for small means, PTRS rejection otherwise.
pub fn sample_poisson(mean: f64, rng: &mut RngState) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < 10.0 {
        let mut u = rng.uniform();
        let mut p = (-mean).exp();
        let mut k = 0u64;
        while u > p {
            u -= p;
            k += 1;
            p *= mean / k as f64;
            if p == 0.0 {
                break;
            }
        }
        return k;
    }
    let slam = mean.sqrt();
    let loglam = mean.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.uniform() - 0.5;
        let v = rng.uniform();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln()
            <= -mean + k * loglam - log_gamma_unchecked(k + 1.0)
        {
            return k as u64;
        }
    }
}

/// Number of failures before the `shape`-th success, success probability `p`.
pub fn sample_negative_binomial(shape: f64, p: f64, rng: &mut RngState) -> u64 {
    let lambda = sample_gamma(shape, (1.0 - p) / p, rng);
    sample_poisson(lambda, rng)
}

/// Binomial(n, p).
pub fn sample_binomial(n: u32, p: f64, rng: &mut RngState) -> u64 {
    if n <= 64 {
        return (0..n).filter(|_| rng.uniform() < p).count() as u64;
    }
    let dist = LevelDist::Binomial { n, p, q: 1.0 - p };
    match discrete_law(KernelCase::Binomial, dist, 1.0, 0, 1e-12) {
        Ok(law) => match sample_law(&law, rng) {
            FanPoint::Discrete { k, .. } => u64::from(k),
            FanPoint::Continuous { .. } => unreachable!("binomial law is discrete"),
        },
        Err(_) => (0..n).filter(|_| rng.uniform() < p).count() as u64,
    }
}

/// Noncentral chi-square with `df` degrees of freedom, as a Poisson mixture.
pub fn sample_noncentral_chi2(df: f64, noncentrality: f64, rng: &mut RngState) -> f64 {
    let n = sample_poisson(0.5 * noncentrality, rng);
    sample_gamma(0.5 * df + n as f64, 2.0, rng)
}

/// One draw from a transition law by inverse CDF over its sorted atoms.
pub fn sample_law(law: &TransitionLaw, rng: &mut RngState) -> FanPoint {
    if let Some(g) = law.gamma {
        return FanPoint::Continuous {
            y1: sample_gamma(g.shape, g.scale, rng),
        };
    }
    let u = rng.uniform();
    let mut cum = 0.0;
    for atom in &law.atoms {
        cum += atom.prob;
        if u < cum {
            return atom.point;
        }
    }
    let last = law.atoms.last().map(|a| a.point);
    let Some(tail) = law.tail else {
        return last.expect("a discrete law has atoms");
    };
    // Walk the continuation of the series through the truncated mass.
    let mut remaining = u - cum;
    let mut p = tail.next_prob;
    let mut level = u64::from(tail.next_level);
    let mut j = level - u64::from(tail.level_offset);
    for _ in 0..MAX_TAIL_STEPS {
        if remaining < p || p == 0.0 || level >= u64::from(u32::MAX) {
            break;
        }
        remaining -= p;
        p *= tail.dist.ratio(j);
        j += 1;
        level += 1;
    }
    FanPoint::Discrete {
        tau: tail.tau,
        k: level as u32,
    }
}

/// A simulated trajectory on a time grid (the start at time 0 is not stored).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample<S> {
    pub path_id: u64,
    pub times: Vec<f64>,
    pub states: Vec<S>,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid("time grid is empty"));
    }
    let mut prev = 0.0;
    for &t in grid {
        if !(t > prev && t.is_finite()) {
            return Err(invalid(format!(
                "time grid must be positive and strictly increasing, got {t} after {prev}"
            )));
        }
        prev = t;
    }
    Ok(())
}

/// A QBES(δ) path on an absolute time grid started at time 0.
///
/// The first coordinate at grid time `t` is computed as `τ₀ + t`, so a grid
/// containing `-τ₀` visits the continuous ray exactly.
pub fn sample_qbes_path(
    start: FanPoint,
    grid: &[f64],
    delta: f64,
    trunc_eps: f64,
    rng: &mut RngState,
    path_id: u64,
) -> Result<PathSample<FanPoint>> {
    check_grid(grid)?;
    crate::kernels::check_inputs(grid[0], delta, trunc_eps)?;
    let s0 = start.tau();
    let mut state = start;
    let mut prev = 0.0;
    let mut states = Vec::with_capacity(grid.len());
    for &t in grid {
        let law = transition_to(state, t - prev, s0 + t, delta, trunc_eps)?;
        state = sample_law(&law, rng);
        states.push(state);
        prev = t;
    }
    Ok(PathSample {
        path_id,
        times: grid.to_vec(),
        states,
    })
}

/// `X_t` for BES(δ) started at `x0`: `Y² ~ Gamma(δ/2 + N, 2t)`, `N ~ Poisson(x0²/2t)`.
pub fn sample_bes(x0: f64, t: f64, delta: f64, rng: &mut RngState) -> f64 {
    let n = sample_poisson(x0 * x0 / (2.0 * t), rng);
    sample_gamma(0.5 * delta + n as f64, 2.0 * t, rng).sqrt()
}

pub fn sample_bes_path(
    x0: f64,
    grid: &[f64],
    delta: f64,
    rng: &mut RngState,
    path_id: u64,
) -> Result<PathSample<f64>> {
    check_grid(grid)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid(format!("dimension delta must be positive, got {delta}")));
    }
    if !(x0 >= 0.0 && x0.is_finite()) {
        return Err(invalid(format!("starting point must be >= 0, got {x0}")));
    }
    let mut x = x0;
    let mut prev = 0.0;
    let states = grid
        .iter()
        .map(|&t| {
            x = sample_bes(x, t - prev, delta, rng);
            prev = t;
            x
        })
        .collect();
    Ok(PathSample {
        path_id,
        times: grid.to_vec(),
        states,
    })
}

/// `paths` QBES trajectories, path `i` drawn from stream `(seed, i)`.
pub fn simulate_qbes_paths(
    start: FanPoint,
    grid: &[f64],
    delta: f64,
    trunc_eps: f64,
    paths: u64,
    seed: u64,
) -> Result<Vec<PathSample<FanPoint>>> {
    (0..paths)
        .into_par_iter()
        .map(|id| {
            let mut rng = RngState::for_path(seed, id);
            sample_qbes_path(start, grid, delta, trunc_eps, &mut rng, id)
        })
        .collect()
}

/// `paths` BES trajectories, path `i` drawn from stream `(seed, i)`.
pub fn simulate_bes_paths(
    x0: f64,
    grid: &[f64],
    delta: f64,
    paths: u64,
    seed: u64,
) -> Result<Vec<PathSample<f64>>> {
    (0..paths)
        .into_par_iter()
        .map(|id| {
            let mut rng = RngState::for_path(seed, id);
            sample_bes_path(x0, grid, delta, &mut rng, id)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::qbes_transition;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = RngState::for_path(7, 3);
        let mut b = RngState::for_path(7, 3);
        let mut c = RngState::for_path(7, 4);
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let zs: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
    }

    #[test]
    fn uniform_stays_open() {
        let mut r = RngState::new(1);
        for _ in 0..10_000 {
            let u = r.uniform();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn gamma_moments() {
        let mut r = RngState::new(11);
        for (shape, scale) in [(0.3, 2.0), (1.0, 1.0), (4.5, 0.5)] {
            let xs: Vec<f64> = (0..100_000).map(|_| sample_gamma(shape, scale, &mut r)).collect();
            let (m, v) = mean_var(&xs);
            let sd = (shape * scale * scale / 1e5).sqrt();
            assert!((m - shape * scale).abs() < 4.0 * sd, "shape {shape}: mean {m}");
            assert!((v / (shape * scale * scale) - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn poisson_moments_both_regimes() {
        let mut r = RngState::new(5);
        for mean in [0.7, 9.5, 10.0, 250.0] {
            let xs: Vec<f64> = (0..100_000).map(|_| sample_poisson(mean, &mut r) as f64).collect();
            let (m, v) = mean_var(&xs);
            assert!((m - mean).abs() < 4.0 * (mean / 1e5).sqrt(), "mean {mean}: {m}");
            assert!((v / mean - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn binomial_and_negative_binomial_means() {
        let mut r = RngState::new(9);
        let xs: Vec<f64> = (0..50_000).map(|_| sample_binomial(200, 0.3, &mut r) as f64).collect();
        let (m, _) = mean_var(&xs);
        assert!((m - 60.0).abs() < 4.0 * (42.0f64 / 5e4).sqrt());
        let ys: Vec<f64> = (0..50_000)
            .map(|_| sample_negative_binomial(2.5, 0.4, &mut r) as f64)
            .collect();
        let (m, _) = mean_var(&ys);
        let var: f64 = 2.5 * 0.6 / 0.16;
        assert!((m - 2.5 * 0.6 / 0.4).abs() < 4.0 * (var / 5e4).sqrt());
    }

    #[test]
    fn single_atom_law_is_deterministic() {
        let law = qbes_transition(FanPoint::continuous(0.0).unwrap(), 2.0, 1.0, 1e-12).unwrap();
        let mut r = RngState::new(3);
        for _ in 0..100 {
            assert_eq!(sample_law(&law, &mut r), FanPoint::Discrete { tau: 2.0, k: 0 });
        }
    }

    #[test]
    fn tail_walk_continues_the_series() {
        // A coarse truncation leaves mass for the tail walk to reach.
        let start = FanPoint::discrete(-2.0, 0).unwrap();
        let law = qbes_transition(start, 1.0, 1.0, 1e-6).unwrap();
        let tail = law.tail.unwrap();
        let mut r = RngState::new(0);
        let beyond = (0..2_000_000)
            .filter(|_| match sample_law(&law, &mut r) {
                FanPoint::Discrete { k, .. } => k >= tail.next_level,
                FanPoint::Continuous { .. } => false,
            })
            .count();
        assert!(beyond > 0 && beyond < 12, "{beyond}");
    }

    #[test]
    fn absorbing_level_zero_path() {
        let start = FanPoint::discrete(1.0, 0).unwrap();
        let mut r = RngState::new(1);
        let p = sample_qbes_path(start, &[0.5, 1.0, 2.5], 2.0, 1e-12, &mut r, 0).unwrap();
        assert_eq!(
            p.states,
            vec![
                FanPoint::Discrete { tau: 1.5, k: 0 },
                FanPoint::Discrete { tau: 2.0, k: 0 },
                FanPoint::Discrete { tau: 3.5, k: 0 },
            ]
        );
    }

    #[test]
    fn path_hits_the_ray_on_grid() {
        let start = FanPoint::discrete(-1.0, 0).unwrap();
        let mut r = RngState::new(2);
        let p = sample_qbes_path(start, &[0.25, 1.0, 2.0], 1.5, 1e-12, &mut r, 0).unwrap();
        assert!(matches!(p.states[1], FanPoint::Continuous { .. }));
        assert_eq!(p.states[2].tau(), 1.0);
    }

    #[test]
    fn rejects_bad_grids() {
        let start = FanPoint::discrete(1.0, 0).unwrap();
        let mut r = RngState::new(1);
        assert!(sample_qbes_path(start, &[], 1.0, 1e-12, &mut r, 0).is_err());
        assert!(sample_qbes_path(start, &[1.0, 1.0], 1.0, 1e-12, &mut r, 0).is_err());
        assert!(sample_bes_path(1.0, &[0.0, 1.0], 1.0, &mut r, 0).is_err());
    }

    #[test]
    fn parallel_simulation_matches_sequential() {
        let start = FanPoint::discrete(-1.0, 2).unwrap();
        let grid = [0.3, 1.0, 1.7];
        let par = simulate_qbes_paths(start, &grid, 1.5, 1e-12, 16, 42).unwrap();
        for (id, path) in par.iter().enumerate() {
            let mut r = RngState::for_path(42, id as u64);
            let seq = sample_qbes_path(start, &grid, 1.5, 1e-12, &mut r, id as u64).unwrap();
            assert_eq!(&seq, path);
        }
    }
}
