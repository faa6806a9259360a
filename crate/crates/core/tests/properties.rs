mod common;

use proptest::prelude::*;

use common::{interval_problem, shooting_eigenvalue};
use singular_plap::eigen::{first_eigenpair, rayleigh_quotient};
use singular_plap::experiments::{barrier_exponent, comparison_check, predict_existence, BarrierExponent};
use singular_plap::finsler::FinslerSpec;
use singular_plap::grid::{build_grid, energy, DiscreteField, Domain};
use singular_plap::singular::{regularized_residual, solve_regularized};

fn spd2() -> impl Strategy<Value = FinslerSpec> {
    (0.2f64..5.0, 0.2f64..5.0, -0.9f64..0.9).prop_map(|(a, b, c)| {
        let off = c * (a * b).sqrt();
        FinslerSpec::ellipse(2, vec![a, off, off, b]).unwrap()
    })
}

fn vec2() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0f64..50.0, 2).prop_filter("nonzero", |v| v[0].abs() + v[1].abs() > 1e-6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn norm_is_even_homogeneous_and_euler(norm in spd2(), xi in vec2(), t in 0.01f64..100.0) {
        let h = norm.evaluate(&xi).unwrap();
        let neg: Vec<f64> = xi.iter().map(|x| -x).collect();
        let scaled: Vec<f64> = xi.iter().map(|x| t * x).collect();
        prop_assert!((norm.evaluate(&neg).unwrap() - h).abs() <= 1e-12 * h);
        prop_assert!((norm.evaluate(&scaled).unwrap() - t * h).abs() <= 1e-12 * t * h);
        let g = norm.gradient(&xi).unwrap();
        let dot = g[0] * xi[0] + g[1] * xi[1];
        prop_assert!((dot - h).abs() <= 1e-10 * h);
    }

    #[test]
    fn ellipse_bounds_hold(norm in spd2(), xi in vec2()) {
        let (alpha, beta) = norm.bounds().unwrap();
        let h = norm.evaluate(&xi).unwrap();
        let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        prop_assert!(h >= alpha * r * (1.0 - 1e-12) && h <= beta * r * (1.0 + 1e-12));
    }

    #[test]
    fn flux_is_monotone(norm in spd2(), a in vec2(), b in vec2(), p in 1.2f64..4.0) {
        let fa = norm.flux(p, &a).unwrap();
        let fb = norm.flux(p, &b).unwrap();
        let gap = (fa[0] - fb[0]) * (a[0] - b[0]) + (fa[1] - fb[1]) * (a[1] - b[1]);
        prop_assert!(gap >= 0.0);
    }

    #[test]
    fn existence_is_monotone(p in 1.1f64..6.0, g1 in 1.01f64..6.0, g2 in 1.01f64..6.0, m1 in 1.01f64..1e3, m2 in 1.01f64..1e3) {
        let (lo, hi) = if g1 < g2 { (g1, g2) } else { (g2, g1) };
        if predict_existence(p, hi, m1).unwrap().exists {
            prop_assert!(predict_existence(p, lo, m1).unwrap().exists);
        }
        let (ml, mh) = if m1 < m2 { (m1, m2) } else { (m2, m1) };
        prop_assert!(predict_existence(p, lo, ml).unwrap().threshold <= predict_existence(p, lo, mh).unwrap().threshold);
        let q = p + 0.1;
        prop_assert!(predict_existence(q, lo, m1).unwrap().threshold < predict_existence(p, lo, m1).unwrap().threshold);
    }

    #[test]
    fn barrier_exponent_in_energy_range(p in 1.1f64..6.0, frac in 0.0f64..1.0) {
        let threshold = 2.0 + 1.0 / (p - 1.0);
        let gamma = 1.0 + 1e-9 + frac * (threshold - 1.0 - 2e-9);
        match barrier_exponent(p, gamma).unwrap() {
            BarrierExponent::GammaGt1 { eta } => prop_assert!(eta > (p - 1.0) / p && eta < 1.0),
            other => prop_assert!(false, "unexpected regime {other:?}"),
        }
    }

    #[test]
    fn energy_is_p_homogeneous(vals in prop::collection::vec(-1.0f64..1.0, 15), t in 0.1f64..10.0, p in 1.2f64..4.0) {
        let g = build_grid(Domain::unit_interval(), &[16]).unwrap();
        let mut v = vec![0.0];
        v.extend(vals);
        v.push(0.0);
        let u = DiscreteField::new(&g, v).unwrap();
        let norm = FinslerSpec::euclidean(1).unwrap();
        let e = energy(&g, &norm, p, &u).unwrap();
        let et = energy(&g, &norm, p, &u.scaled(t)).unwrap();
        prop_assert!((et - t.powf(p) * e).abs() <= 1e-10 * et.max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rayleigh_quotient_bounded_by_lambda1(vals in prop::collection::vec(0.01f64..1.0, 31)) {
        let g = build_grid(Domain::unit_interval(), &[32]).unwrap();
        let norm = FinslerSpec::euclidean(1).unwrap();
        let lam = first_eigenpair(&g, &norm, 3.0, 1e-10, 300).unwrap().lambda1;
        let mut v = vec![0.0];
        v.extend(vals);
        v.push(0.0);
        let u = DiscreteField::new(&g, v).unwrap();
        prop_assert!(rayleigh_quotient(&g, &norm, 3.0, &u).unwrap() >= lam * (1.0 - 1e-9));
    }

    #[test]
    fn comparison_principle(f1 in 0.1f64..3.0, df in 0.0f64..3.0, gamma in 0.3f64..2.8) {
        let a = interval_problem(2.0, gamma, f1, 48);
        let b = interval_problem(2.0, gamma, f1 + df, 48);
        let g = a.grid().unwrap();
        let r = comparison_check(&a, &b, &g, 1e-6, 1e-8).unwrap();
        prop_assert!(r.pass, "violation {}", r.max_violation);
    }

    #[test]
    fn residual_is_small_and_deterministic(gamma in 0.3f64..2.8, f in 0.2f64..5.0) {
        let pr = interval_problem(2.0, gamma, f, 64);
        let g = pr.grid().unwrap();
        let r1 = solve_regularized(&pr, &g, 1e-6, None).unwrap();
        let r2 = solve_regularized(&pr, &g, 1e-6, None).unwrap();
        prop_assert!(r1.converged && r1.final_residual <= 1e-10);
        prop_assert_eq!(&r1.u, &r2.u);
        let res = regularized_residual(&pr, &g, 1e-6, &r1.u).unwrap();
        prop_assert!(res.max_abs() <= 1e-10 * r1.residual_scale);
        prop_assert!(r1.min_u_interior > 0.0);
    }
}

#[test]
fn barrier_exponent_near_threshold() {
    for p in [1.5, 2.0, 3.0] {
        let gamma = 2.0 + 1.0 / (p - 1.0) - 1e-6;
        match barrier_exponent(p, gamma).unwrap() {
            BarrierExponent::GammaGt1 { eta } => assert!((eta - (p - 1.0) / p).abs() < 1e-6),
            other => panic!("unexpected regime {other:?}"),
        }
    }
}

#[test]
fn shooting_oracle_matches_closed_form() {
    // λ₁ = (p−1)(2π / (p sin(π/p)))^p on the unit interval
    for p in [1.5, 2.0, 3.0] {
        let pi_p = 2.0 * std::f64::consts::PI / (p * (std::f64::consts::PI / p).sin());
        let closed = (p - 1.0) * pi_p.powf(p);
        let shot = shooting_eigenvalue(p);
        assert!((shot - closed).abs() < 1e-6 * closed, "p={p}: {shot} vs {closed}");
    }
}
