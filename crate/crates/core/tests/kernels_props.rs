use hyperbessel::hypergroup::FanPoint;
use hyperbessel::kernels::{
    bes_density, chapman_kolmogorov_qbes, qbes_law_pmf, qbes_transition, BesDensity, KernelCase,
    TransitionLaw,
};
use hyperbessel::quad::QuadratureSpec;
use hyperbessel::verify::ck_scenarios;
use proptest::prelude::*;
use proptest::test_runner::Config;
use statrs::function::gamma::ln_gamma;

fn level(p: FanPoint) -> u64 {
    match p {
        FanPoint::Discrete { k, .. } => u64::from(k),
        FanPoint::Continuous { .. } => panic!("atom on the ray"),
    }
}

// Π_{i=lo}^{hi-1} (a + i), i.e. Γ(a + hi) / Γ(a + lo).
fn rising(a: f64, lo: u64, hi: u64) -> f64 {
    (lo..hi).map(|i| a + i as f64).product()
}

fn factorial(n: u64) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

// The displayed transition coefficients, evaluated directly as products.
fn displayed_weight(start: FanPoint, t: f64, delta: f64, l: u64) -> f64 {
    match start {
        FanPoint::Discrete { tau: s, k } => {
            let u = s + t;
            let k = u64::from(k);
            let kf = k as f64;
            if s < 0.0 && u < 0.0 {
                let j = l - k;
                rising(delta, k, l) / factorial(j)
                    * (u / s).powf(delta + kf)
                    * (1.0 - u / s).powi(j as i32)
            } else if s < 0.0 {
                rising(delta + kf, 0, l) / factorial(l)
                    * (u / t).powf(delta + kf)
                    * (-s / t).powi(l as i32)
            } else {
                let p = s / u;
                factorial(k) / (factorial(l) * factorial(k - l))
                    * p.powi(l as i32)
                    * (1.0 - p).powi((k - l) as i32)
            }
        }
        FanPoint::Continuous { y1 } => {
            let m = y1 / t;
            m.powi(l as i32) / factorial(l) * (-m).exp()
        }
    }
}

fn assert_coefficients(start: FanPoint, t: f64, delta: f64) -> TransitionLaw {
    let law = qbes_transition(start, t, delta, 1e-14).unwrap();
    for atom in &law.atoms {
        let l = level(atom.point);
        let expected = displayed_weight(start, t, delta, l);
        let rel = (atom.prob - expected).abs() / expected;
        assert!(
            rel <= 1e-13,
            "{start:?} t={t} delta={delta} level {l}: {} vs {expected} ({rel:e})",
            atom.prob
        );
    }
    law
}

#[test]
fn weights_match_displayed_coefficients() {
    for delta in [0.4, 1.0, 2.5, 6.0] {
        for k in [0, 1, 4, 9] {
            let d = |tau| FanPoint::Discrete { tau, k };
            assert_eq!(assert_coefficients(d(-2.0), 0.6, delta).case, KernelCase::NegativeBinomial);
            assert_eq!(
                assert_coefficients(d(-1.0), 1.7, delta).case,
                KernelCase::ShiftedNegativeBinomial
            );
            assert_eq!(assert_coefficients(d(0.8), 1.1, delta).case, KernelCase::Binomial);
        }
        for y1 in [0.0, 0.4, 3.0, 12.0] {
            let law = if y1 == 0.0 {
                qbes_transition(FanPoint::Continuous { y1 }, 0.7, delta, 1e-14).unwrap()
            } else {
                assert_coefficients(FanPoint::Continuous { y1 }, 0.7, delta)
            };
            assert_eq!(law.case, KernelCase::Poisson);
        }
    }
}

#[test]
fn gamma_ray_matches_displayed_density() {
    for delta in [0.4, 1.0, 2.5] {
        for k in [0u32, 3] {
            let t = 1.3;
            let law = qbes_transition(FanPoint::Discrete { tau: -t, k }, t, delta, 1e-12).unwrap();
            assert_eq!(law.case, KernelCase::GammaRay);
            let g = law.gamma.unwrap();
            let a = delta + f64::from(k);
            for y in [0.05, 0.5, 1.0, 4.0, 10.0] {
                let expected = ((a - 1.0) * (y / t).ln() - y / t - ln_gamma(a)).exp() / t;
                assert!((g.density(y) - expected).abs() <= 1e-13 * expected);
            }
        }
    }
}

#[test]
fn zero_start_on_the_ray_stays_at_level_zero() {
    let law = qbes_transition(FanPoint::Continuous { y1: 0.0 }, 0.7, 1.5, 1e-12).unwrap();
    assert_eq!(law.atoms.len(), 1);
    assert_eq!(law.atoms[0].point, FanPoint::Discrete { tau: 0.7, k: 0 });
    assert_eq!(law.atoms[0].prob, 1.0);
}

fn start_strategy() -> impl Strategy<Value = (FanPoint, f64, f64)> {
    let delta = 0.1f64..6.0;
    let discrete = (-5.0f64..5.0, 0u32..30, 0.01f64..6.0, delta.clone()).prop_filter_map(
        "tau must be nonzero",
        |(tau, k, t, d)| (tau.abs() > 1e-3).then_some((FanPoint::Discrete { tau, k }, t, d)),
    );
    let ray = (0.0f64..20.0, 0.01f64..6.0, delta)
        .prop_map(|(y1, t, d)| (FanPoint::Continuous { y1 }, t, d));
    prop_oneof![3 => discrete, 1 => ray]
}

proptest! {
    #![proptest_config(Config { failure_persistence: None, ..Config::default() })]

    #[test]
    fn laws_are_normalized_and_well_placed((start, t, delta) in start_strategy(), eps_exp in 6i32..14) {
        let eps = 10f64.powi(-eps_exp);
        let law = qbes_transition(start, t, delta, eps).unwrap();
        prop_assert!((law.total_mass() - 1.0).abs() <= 1e-12);
        prop_assert!(law.tail_mass >= 0.0 && law.tail_mass <= eps);
        prop_assert!(law.gamma.is_none() || law.atoms.is_empty());
        let u = start.tau() + t;
        let k0 = match start { FanPoint::Discrete { k, .. } => u64::from(k), _ => 0 };
        for atom in &law.atoms {
            prop_assert!(atom.prob >= 0.0);
            let FanPoint::Discrete { tau, k } = atom.point else {
                return Err(TestCaseError::fail("atom on the ray"));
            };
            prop_assert_eq!(tau, u);
            match law.case {
                KernelCase::NegativeBinomial => prop_assert!(u < 0.0 && u64::from(k) >= k0),
                KernelCase::Binomial => prop_assert!(u64::from(k) <= k0),
                KernelCase::Poisson => prop_assert_eq!(tau, t),
                _ => {}
            }
            prop_assert_eq!(qbes_law_pmf(&law, atom.point), atom.prob);
        }
    }

    #[test]
    fn laws_round_trip_through_json((start, t, delta) in start_strategy()) {
        let law = qbes_transition(start, t, delta, 1e-10).unwrap();
        let text = serde_json::to_string(&law).unwrap();
        let back: TransitionLaw = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, law);
    }
}

#[test]
fn reflected_gaussian_at_dimension_one() {
    for (t, x) in [(0.3, 0.0), (1.0, 0.7), (2.5, 3.1)] {
        let d = BesDensity::new(1.0, t, x).unwrap();
        for i in 0..60 {
            let y = 0.1 * f64::from(i);
            let g = |z: f64| (-(z * z) / (2.0 * t)).exp() / (2.0 * std::f64::consts::PI * t).sqrt();
            let expected = g(y - x) + g(y + x);
            assert!((bes_density(&d, y) - expected).abs() <= 1e-12, "t={t} x={x} y={y}");
        }
    }
}

#[test]
fn bes_density_integrates_to_one() {
    let q = QuadratureSpec::default();
    for (delta, t, x) in [
        (0.5, 1.0, 0.3),
        (1.0, 0.2, 2.0),
        (1.5, 2.0, 0.0),
        (2.0, 1.0, 1.0),
        (3.0, 0.5, 4.0),
        (4.0, 3.0, 0.5),
        (7.3, 1.2, 2.2),
        (0.2, 0.7, 1.5),
        (12.0, 0.1, 0.0),
        (2.5, 5.0, 6.0),
    ] {
        let d = BesDensity::new(delta, t, x).unwrap();
        let top = x + 40.0 * t.sqrt() + 10.0 * delta.sqrt();
        // Near 0 the density behaves like y^{δ-1}; that factor goes into the rule.
        let p = delta - 1.0;
        let mass = q.integrate_power_weighted(|y| bes_density(&d, y) / y.powf(p), p, top);
        let mass = mass.unwrap_or_else(|e| panic!("delta={delta} t={t} x={x}: {e}"));
        assert!((mass - 1.0).abs() <= 1e-9, "delta={delta} t={t} x={x}: {mass}");
    }
}

#[test]
fn chapman_kolmogorov_scenarios() {
    let q = QuadratureSpec::default();
    let mut cases_seen = std::collections::BTreeSet::new();
    for (start, t1, t2, delta, tol) in ck_scenarios() {
        cases_seen.insert(KernelCase::classify(start, t1).number());
        let r = chapman_kolmogorov_qbes(start, t1, t2, delta, 1e-14, &q).unwrap();
        assert!(r.max_abs_err <= tol, "{start:?} {t1} {t2} {delta}: {r:?}");
        assert!(r.compared_points > 0);
    }
    assert!(cases_seen.len() >= 4, "{cases_seen:?}");
}
