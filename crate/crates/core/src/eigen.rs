//! First Dirichlet eigenpair of the anisotropic p-Laplacian.
//!
//! `λ₁` minimizes the Rayleigh quotient `R(u) = ∫H^p(∇u) / ∫|u|^p`. It is
//! computed by nonlinear inverse-power iteration: given `u_k`, the strictly
//! convex problem `min_v E(v) − λ_k ∫|u_k|^{p−2}u_k v` is solved by damped
//! Newton and the minimizer is renormalized to unit lumped `L^p` norm.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::finsler::{check_p, FinslerSpec};
use crate::grid::{
    distance_field, energy, energy_gradient, lp_norm, lumped_mass, DiscreteField, Grid,
    QuadratureRule,
};
use crate::linalg::{assemble_energy_hessian, DofMap};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Serialize)]
pub struct EigenReport {
    pub p: f64,
    pub lambda1: f64,
    #[serde(skip)]
    pub phi1: DiscreteField,
    /// Relative lumped residual of `−Δ_p^H φ = λ φ^{p−1}` at the returned pair.
    pub rayleigh_residual: f64,
    pub iterations: usize,
}

/// `p·E(u) / ‖u‖_p^p`.
pub fn rayleigh_quotient(grid: &Grid, norm: &FinslerSpec, p: f64, u: &DiscreteField) -> Result<f64> {
    grid.check_field(u)?;
    if grid
        .boundary_mask
        .iter()
        .zip(&u.values)
        .any(|(b, v)| *b && *v != 0.0)
    {
        return Err(Error::InvalidParameter("field must vanish on the boundary".into()));
    }
    let quad = lumped_mass(grid);
    let lp = lp_norm(grid, &quad, p, u)?;
    if lp == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(p * energy(grid, norm, p, u)? / lp.powf(p))
}

fn signed_pow(v: f64, e: f64) -> f64 {
    v.signum() * v.abs().powf(e)
}

/// Lumped residual `∇E(u) − λ w |u|^{p−2}u` relative to the right-hand side.
fn eigen_residual(
    grid: &Grid,
    norm: &FinslerSpec,
    quad: &QuadratureRule,
    p: f64,
    lambda: f64,
    u: &DiscreteField,
) -> Result<f64> {
    let grad = energy_gradient(grid, norm, p, u)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in grid.interior_nodes() {
        let rhs = lambda * quad.weights[i] * signed_pow(u.values[i], p - 1.0);
        num += (grad.values[i] - rhs).powi(2);
        den += rhs * rhs;
    }
    Ok((num / den).sqrt())
}

/// Minimizes `E(v) − Σ g_i v_i` over fields vanishing on the boundary.
pub(crate) fn solve_loaded(
    grid: &Grid,
    norm: &FinslerSpec,
    p: f64,
    load: &[f64],
    start: &DiscreteField,
    dofs: &DofMap,
) -> Result<DiscreteField> {
    const MAX_NEWTON: usize = 300;
    let mut v = start.clone();
    v.zero_boundary(grid);
    // best multiple of the start: t^p E(v) − t ⟨g, v⟩ is minimal at this t
    let e0 = energy(grid, norm, p, &v)?;
    let l0: f64 = v.values.iter().zip(load).map(|(a, b)| a * b).sum();
    if e0 > 0.0 && l0 > 0.0 {
        v = v.scaled((l0 / (p * e0)).powf(1.0 / (p - 1.0)));
    }
    let load_scale = load.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let objective = |v: &DiscreteField| -> Result<f64> {
        let lin: f64 = v.values.iter().zip(load).map(|(a, b)| a * b).sum();
        Ok(energy(grid, norm, p, v)? - lin)
    };
    let mut phi = objective(&v)?;
    let mut res = f64::INFINITY;
    // below p = 2 the discrete gradient at an extremum falls under
    // GRADIENT_CLAMP, where the linearization stops being exact
    let stall = if p < 2.0 { 1e-6 } else { 1e-8 };
    for _ in 0..MAX_NEWTON {
        let grad = energy_gradient(grid, norm, p, &v)?;
        let g: Vec<f64> = dofs
            .dof_to_vertex
            .iter()
            .map(|&i| grad.values[i] - load[i])
            .collect();
        res = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if res <= 1e-11 * load_scale {
            return Ok(v);
        }
        // below p = 2 Newton flips the sign of small gradients instead of
        // shrinking them; the Kačanov matrix does not
        let below = if p < 2.0 { f64::INFINITY } else { 0.0 };
        let asm = assemble_energy_hessian(grid, norm, p, &v.values, below, dofs);
        let mu = 1e-12 * asm.diag_max();
        let neg: Vec<f64> = g.iter().map(|x| -x).collect();
        let (dir, _) = asm.solve(&neg, mu)?;
        let slope: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
        // below this the objective cannot resolve the predicted decrease
        let noise = 1e-12 * (phi.abs() + energy(grid, norm, p, &v)?.abs()).max(f64::MIN_POSITIVE);
        let mut accepted = None;
        if -slope > noise {
            let mut alpha = 1.0;
            for _ in 0..60 {
                let trial = step(&v, &dir, alpha, dofs);
                let phi_t = objective(&trial)?;
                if phi_t <= phi + 1e-4 * alpha * slope {
                    accepted = Some((trial, phi_t));
                    break;
                }
                alpha *= 0.5;
            }
        }
        match accepted {
            Some((trial, phi_t)) => {
                v = trial;
                phi = phi_t;
            }
            None => {
                let trial = step(&v, &dir, 1.0, dofs);
                let tg = energy_gradient(grid, norm, p, &trial)?;
                let tres = dofs
                    .dof_to_vertex
                    .iter()
                    .map(|&i| (tg.values[i] - load[i]).abs())
                    .fold(0.0f64, f64::max);
                if tres < res {
                    phi = objective(&trial)?;
                    v = trial;
                } else if res <= stall * load_scale {
                    // stagnation at rounding level, or at the gradient clamp below p = 2
                    return Ok(v);
                } else {
                    break;
                }
            }
        }
    }
    Err(Error::NonConvergence {
        what: "loaded p-Dirichlet solve",
        iterations: MAX_NEWTON,
        residual: res,
    })
}

fn step(v: &DiscreteField, dir: &[f64], alpha: f64, dofs: &DofMap) -> DiscreteField {
    let mut out = v.clone();
    for (k, &i) in dofs.dof_to_vertex.iter().enumerate() {
        out.values[i] += alpha * dir[k];
    }
    out
}

/// Computes `(λ₁, φ₁)` with `φ₁ > 0` and `‖φ₁‖_p = 1` (lumped).
pub fn first_eigenpair(
    grid: &Grid,
    norm: &FinslerSpec,
    p: f64,
    tol: f64,
    max_iter: usize,
) -> Result<EigenReport> {
    check_p(p)?;
    grid.check_norm(norm)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    if grid.n_interior() < 2 {
        return Err(Error::InvalidGrid(
            "eigenproblem needs at least 2 interior nodes".into(),
        ));
    }
    let quad = lumped_mass(grid);
    let dofs = DofMap::interior(grid);
    let normalize = |u: DiscreteField| -> Result<DiscreteField> {
        let n = lp_norm(grid, &quad, p, &u)?;
        Ok(u.scaled(1.0 / n))
    };
    let mut u = normalize(distance_field(grid))?;
    let mut lambda = rayleigh_quotient(grid, norm, p, &u)?;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let load: Vec<f64> = (0..grid.n_vertices())
            .map(|i| {
                if grid.boundary_mask[i] {
                    0.0
                } else {
                    lambda * quad.weights[i] * signed_pow(u.values[i], p - 1.0)
                }
            })
            .collect();
        let v = solve_loaded(grid, norm, p, &load, &u, &dofs)?;
        let next = normalize(v)?;
        let next_lambda = rayleigh_quotient(grid, norm, p, &next)?;
        residual = eigen_residual(grid, norm, &quad, p, next_lambda, &next)?;
        let dl = (next_lambda - lambda).abs();
        u = next;
        lambda = next_lambda;
        if dl <= tol * lambda && residual <= 10.0 * tol {
            return Ok(EigenReport {
                p,
                lambda1: lambda,
                phi1: u,
                rayleigh_residual: residual,
                iterations: it,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "inverse power iteration",
        iterations: max_iter,
        residual,
    })
}

/// Strip-refinement evidence for the finiteness of a boundary-singular integral.
#[derive(Debug, Clone, Serialize)]
pub struct IntegralEstimate {
    /// Verdict from the known boundary behavior, when available.
    pub analytic_finite: Option<bool>,
    /// Verdict from the decay of the strip increments.
    pub numeric_finite: bool,
    /// Lumped integral over the whole grid, when judged finite.
    pub value: Option<f64>,
    /// `(δ, Σ_{d_i ≥ δ} w_i F_i)` for halving strip widths down to the mesh size.
    pub strips: Vec<(f64, f64)>,
    /// Fitted exponent `s` in `increment ~ δ^s`; the integral converges iff `s > 0`.
    pub band_exponent: f64,
}

impl IntegralEstimate {
    pub fn finite(&self) -> bool {
        self.analytic_finite.unwrap_or(self.numeric_finite)
    }
}

/// Accumulates `Σ w_i F_i` over the nodes with `d_i ≥ δ` for halving `δ`, and
/// fits the power law of the mass added in each band `[δ/2, δ)`.
pub(crate) fn strip_estimate(
    grid: &Grid,
    quad: &QuadratureRule,
    integrand: &[f64],
    analytic_finite: Option<bool>,
) -> IntegralEstimate {
    let dist = distance_field(grid);
    let max_d = dist.values.iter().fold(0.0f64, |m, v| m.max(*v));
    let h_min = grid.min_spacing();
    let mut deltas = Vec::new();
    let mut delta = h_min;
    while delta <= 0.5 * max_d {
        deltas.push(delta);
        delta *= 2.0;
    }
    deltas.reverse();
    let partial = |delta: f64| -> f64 {
        (0..grid.n_vertices())
            .filter(|&i| !grid.boundary_mask[i] && dist.values[i] >= delta * (1.0 - 1e-9))
            .map(|i| quad.weights[i] * integrand[i])
            .sum()
    };
    let strips: Vec<(f64, f64)> = deltas.iter().map(|&d| (d, partial(d))).collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for w in strips.windows(2) {
        let inc = w[1].1 - w[0].1;
        if inc > 0.0 {
            xs.push(w[1].0.ln());
            ys.push(inc.ln());
        }
    }
    // the bands closest to the boundary carry the asymptotics; the last one
    // holds a single layer of nodes and is dropped when enough remain
    let end = if xs.len() >= 4 { xs.len() - 1 } else { xs.len() };
    let start = end.saturating_sub(4);
    let band_exponent = if end - start >= 2 {
        fit_slope(&xs[start..end], &ys[start..end])
    } else {
        0.0
    };
    let numeric_finite = band_exponent > 0.0;
    let finite = analytic_finite.unwrap_or(numeric_finite);
    let total: f64 = (0..grid.n_vertices())
        .filter(|&i| integrand[i].is_finite())
        .map(|i| quad.weights[i] * integrand[i])
        .sum();
    IntegralEstimate {
        analytic_finite,
        numeric_finite,
        value: finite.then_some(total),
        strips,
        band_exponent,
    }
}

/// Least-squares slope of `ys` against `xs`.
pub(crate) fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `∫ φ₁^r`: finite iff `r > −1`, because `φ₁` decays linearly at the boundary.
pub fn power_integral(
    grid: &Grid,
    quad: &QuadratureRule,
    phi1: &DiscreteField,
    r: f64,
) -> Result<IntegralEstimate> {
    grid.check_field(phi1)?;
    let integrand: Vec<f64> = phi1
        .values
        .iter()
        .map(|v| if *v > 0.0 || r >= 0.0 { v.max(0.0).powf(r) } else { f64::INFINITY })
        .collect();
    Ok(strip_estimate(grid, quad, &integrand, Some(r > -1.0)))
}
