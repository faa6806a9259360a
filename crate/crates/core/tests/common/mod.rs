#![allow(dead_code)]

use singular_plap::finsler::FinslerSpec;
use singular_plap::grid::Domain;
use singular_plap::singular::{DataDesc, ProblemSpec};

/// First Dirichlet eigenvalue of `−(|u′|^{p−2}u′)′ = λ|u|^{p−2}u` on (0, 1)
/// by RK4 shooting from `u(0) = 0, |u′|^{p−2}u′(0) = 1` and bisection on `u(1)`.
pub fn shooting_eigenvalue(p: f64) -> f64 {
    let rhs = |lambda: f64, u: f64, w: f64| -> (f64, f64) {
        let du = w.signum() * w.abs().powf(1.0 / (p - 1.0));
        let dw = -lambda * u.signum() * u.abs().powf(p - 1.0);
        (du, dw)
    };
    let end_value = |lambda: f64| -> f64 {
        let n = 20_000;
        let h = 1.0 / n as f64;
        let (mut u, mut w) = (0.0f64, 1.0f64);
        for _ in 0..n {
            let k1 = rhs(lambda, u, w);
            let k2 = rhs(lambda, u + 0.5 * h * k1.0, w + 0.5 * h * k1.1);
            let k3 = rhs(lambda, u + 0.5 * h * k2.0, w + 0.5 * h * k2.1);
            let k4 = rhs(lambda, u + h * k3.0, w + h * k3.1);
            u += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            w += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        u
    };
    // u(1) > 0 below λ₁ and changes sign just above it
    let (mut lo, mut hi) = (1.0, 1.0);
    while end_value(hi) > 0.0 {
        lo = hi;
        hi *= 1.5;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if end_value(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn interval_problem(p: f64, gamma: f64, f: f64, n: usize) -> ProblemSpec {
    ProblemSpec {
        p,
        gamma,
        theta: 0.0,
        norm: FinslerSpec::euclidean(1).unwrap(),
        f: DataDesc::Constant { value: f },
        h: DataDesc::zero(),
        domain: Domain::unit_interval(),
        resolution: vec![n],
    }
}

pub fn square_problem(p: f64, gamma: f64, f: f64, n: usize) -> ProblemSpec {
    ProblemSpec {
        norm: FinslerSpec::euclidean(2).unwrap(),
        domain: Domain::unit_square(),
        resolution: vec![n],
        ..interval_problem(p, gamma, f, n)
    }
}
