//! Benchmark bodies shared by the `benches/` entry point.

use std::hint::black_box;

use criterion::Criterion;
use hyperbessel::hypergroup::{
    bk_translate, lag_character, lag_translate, BesselKingmanParams, FanPoint, HeisPoint,
    LaguerreParams,
};
use hyperbessel::kernels::qbes_transition;
use hyperbessel::quad::QuadratureSpec;
use hyperbessel::sampling::{simulate_bes_paths, simulate_qbes_paths};
use hyperbessel::specfun::{bessel_i_norm, bessel_j_norm, laguerre_l};
use hyperbessel::verify::{glowne3_check, watson_check};

pub fn specfun(c: &mut Criterion) {
    let mut g = c.benchmark_group("specfun");
    for z in [0.5, 12.0, 40.0] {
        g.bench_function(format!("bessel_j_norm z={z}"), |b| {
            b.iter(|| bessel_j_norm(black_box(1.3), black_box(z)))
        });
    }
    g.bench_function("bessel_i_norm y=30", |b| {
        b.iter(|| bessel_i_norm(black_box(0.7), black_box(30.0)))
    });
    g.bench_function("laguerre_l k=40", |b| {
        b.iter(|| laguerre_l(black_box(40), black_box(0.7), black_box(12.5)))
    });
    g.finish();
}

pub fn hypergroups(c: &mut Criterion) {
    let q = QuadratureSpec::default();
    let bk = BesselKingmanParams::new(2.5).unwrap();
    let lag = LaguerreParams::new(1.5).unwrap();
    let chi = FanPoint::Discrete { tau: 0.8, k: 3 };
    let a = HeisPoint { x: 0.7, w: 0.2 };
    let b = HeisPoint { x: 1.1, w: -0.4 };
    let mut g = c.benchmark_group("hypergroup");
    g.bench_function("bk_translate gaussian", |bn| {
        bn.iter(|| bk_translate(|y| (-0.5 * y * y).exp(), black_box(0.9), black_box(1.4), &bk, &q))
    });
    g.bench_function("lag_translate character", |bn| {
        bn.iter(|| lag_translate(|z| lag_character(chi, z, &lag), black_box(a), black_box(b), &lag, &q))
    });
    g.finish();
}

pub fn kernels(c: &mut Criterion) {
    let mut g = c.benchmark_group("kernels");
    for (name, start, t) in [
        ("negative binomial", FanPoint::Discrete { tau: -2.0, k: 3 }, 1.0),
        ("shifted negative binomial", FanPoint::Discrete { tau: -1.0, k: 3 }, 5.0),
        ("poisson", FanPoint::Continuous { y1: 30.0 }, 0.5),
        ("binomial", FanPoint::Discrete { tau: 1.0, k: 200 }, 1.0),
    ] {
        g.bench_function(name, |b| {
            b.iter(|| qbes_transition(black_box(start), black_box(t), 2.3, 1e-12))
        });
    }
    g.finish();
}

pub fn sampling(c: &mut Criterion) {
    let grid: Vec<f64> = (1..=20).map(|i| 0.1 * f64::from(i)).collect();
    let mut g = c.benchmark_group("sampling");
    g.sample_size(20);
    g.bench_function("qbes 1000 paths x 20 steps", |b| {
        b.iter(|| simulate_qbes_paths(FanPoint::Discrete { tau: -1.0, k: 2 }, &grid, 2.3, 1e-12, 1000, 7))
    });
    g.bench_function("bes 1000 paths x 20 steps", |b| {
        b.iter(|| simulate_bes_paths(0.5, &grid, 2.3, 1000, 7))
    });
    g.finish();
}

pub fn checks(c: &mut Criterion) {
    let q = QuadratureSpec::default();
    let mut g = c.benchmark_group("verify");
    g.bench_function("glowne3 gamma case", |b| {
        b.iter(|| {
            glowne3_check(
                FanPoint::Discrete { tau: -1.0, k: 2 },
                HeisPoint { x: 2.0, w: -1.1 },
                1.0,
                2.0,
                1e-14,
                &q,
            )
        })
    });
    g.bench_function("watson k=5", |b| b.iter(|| watson_check(1.4, 1.8, 0.9, 5, &q)));
    g.finish();
}

pub fn benchmarks(c: &mut Criterion) {
    specfun(c);
    hypergroups(c);
    kernels(c);
    sampling(c);
    checks(c);
}
