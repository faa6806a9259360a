//! Regularized singular problems `−Δ_p^H u = f u^{−γ} + h u^θ` and their
//! continuation as the regularization parameter `ε ↓ 0`.
//!
//! For a fixed `ε > 0` the nodal system is
//!
//! ```text
//! G_i(u) = ∂E/∂u_i − w_i [ T(f_i) / (u_i⁺ + ε)^γ + T(h_i) · T((u_i⁺)^θ) ] = 0
//! ```
//!
//! on interior nodes, with `T = T_{1/ε}` the truncation at level `1/ε` and
//! `w_i` the lumped weights. It is solved by damped Newton with a backtracking
//! search on `‖G‖₂`. Steps are clipped so that `u_i > −ε/2` and the singular
//! term stays finite.
//!
//! For `γ > 1` the energy `J`, the natural-constraint defect and the
//! compatibility integral `∫ f u₀^{1−γ}` are evaluated with the same lumped rule.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::eigen::{fit_slope, strip_estimate, IntegralEstimate};
use crate::error::{Error, Result};
use crate::finsler::{check_p, FinslerSpec};
use crate::grid::{
    build_grid, distance_field, energy, energy_gradient, lumped_mass, seminorm_p, DiscreteField,
    Domain, Grid, QuadratureRule,
};
use crate::linalg::{assemble_energy_hessian, DofMap, SymAssembler};

/// Relative residual accepted by the Newton solver.
pub const RESIDUAL_TOL: f64 = 1e-10;
pub const MAX_NEWTON_ITERS: usize = 200;

/// Nodal data for `f` and `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataDesc {
    /// A constant `value ≥ 0`.
    Constant { value: f64 },
    /// `coef · d(x)^{−σ}` with `d` the distance to the boundary.
    DistPower {
        #[serde(default = "one")]
        coef: f64,
        sigma: f64,
    },
    /// `coef · Πₖ sin(π xₖ / Lₖ)^power`.
    SinePower { coef: f64, power: f64 },
    /// Explicit nodal values.
    Table { values: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

impl DataDesc {
    pub fn zero() -> Self {
        DataDesc::Constant { value: 0.0 }
    }

    /// Nodal values; `dist_power` with `σ > 0` is `+∞` on the boundary.
    pub fn nodal(&self, grid: &Grid) -> Result<Vec<f64>> {
        let values: Vec<f64> = match self {
            DataDesc::Constant { value } => vec![*value; grid.n_vertices()],
            DataDesc::DistPower { coef, sigma } => distance_field(grid)
                .values
                .iter()
                .map(|d| {
                    if *sigma == 0.0 {
                        *coef
                    } else if *d == 0.0 {
                        f64::INFINITY
                    } else {
                        coef * d.powf(-sigma)
                    }
                })
                .collect(),
            DataDesc::SinePower { coef, power } => {
                let ext: Vec<f64> = match grid.domain {
                    Domain::Interval { length } => vec![length],
                    Domain::Rectangle { lx, ly } => vec![lx, ly],
                };
                (0..grid.n_vertices())
                    .map(|i| {
                        let x = grid.coords(i);
                        coef * x
                            .iter()
                            .zip(&ext)
                            .map(|(xk, l)| (std::f64::consts::PI * xk / l).sin().max(0.0).powf(*power))
                            .product::<f64>()
                    })
                    .collect()
            }
            DataDesc::Table { values } => {
                if values.len() != grid.n_vertices() {
                    return Err(Error::MismatchedGrid {
                        expected: grid.n_vertices(),
                        got: values.len(),
                    });
                }
                values.clone()
            }
        };
        if values.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::InvalidParameter("data must be nonnegative".into()));
        }
        Ok(values)
    }

    fn validate(&self, name: &str) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(format!("{name}: {msg}")));
        match self {
            DataDesc::Constant { value } if !(*value >= 0.0 && value.is_finite()) => {
                bad("constant must be finite and nonnegative")
            }
            DataDesc::DistPower { coef, sigma }
                if !(*coef >= 0.0 && coef.is_finite() && *sigma >= 0.0 && sigma.is_finite()) =>
            {
                bad("dist_power needs coef >= 0 and sigma >= 0")
            }
            DataDesc::SinePower { coef, power }
                if !(*coef >= 0.0 && coef.is_finite() && *power >= 0.0 && power.is_finite()) =>
            {
                bad("sine_power needs coef >= 0 and power >= 0")
            }
            DataDesc::Table { values } if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) => {
                bad("table values must be finite and nonnegative")
            }
            _ => Ok(()),
        }
    }

    /// True if the data is bounded (so it lies in every `L^m`).
    pub fn is_bounded(&self) -> bool {
        match self {
            DataDesc::DistPower { sigma, coef } => *sigma == 0.0 || *coef == 0.0,
            _ => true,
        }
    }
}

/// A full instance of `−Δ_p^H u = f u^{−γ} + h u^θ` on a discretized domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub p: f64,
    pub gamma: f64,
    #[serde(default)]
    pub theta: f64,
    pub norm: FinslerSpec,
    pub f: DataDesc,
    #[serde(default = "DataDesc::zero")]
    pub h: DataDesc,
    pub domain: Domain,
    pub resolution: Vec<usize>,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        check_p(self.p)?;
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.theta >= 0.0 && self.theta < self.p - 1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in [0, p-1), got {}",
                self.theta
            )));
        }
        if self.norm.dim() != self.domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.domain.dim(),
                got: self.norm.dim(),
            });
        }
        self.f.validate("f")?;
        self.h.validate("h")?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        build_grid(self.domain, &self.resolution)
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self {
            gamma,
            ..self.clone()
        }
    }
}

/// Per-solve diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub u: DiscreteField,
    pub epsilon: f64,
    pub converged: bool,
    pub newton_iters: usize,
    /// `‖G(u)‖∞ / scale` with `scale = max(‖∇E(u)‖∞, ‖b(u)‖∞)`.
    pub final_residual: f64,
    pub residual_scale: f64,
    pub energy_value: f64,
    pub seminorm: f64,
    pub min_u_interior: f64,
    pub max_u: f64,
    /// Natural-constraint defect, reported for `γ > 1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nehari_defect: Option<f64>,
}

/// Nodal right-hand side of the regularized problem at level `ε`.
struct RegularizedRhs {
    eps: f64,
    gamma: f64,
    theta: f64,
    /// `w_i T(f_i)` and `w_i T(h_i)`; zero on boundary nodes.
    wf: Vec<f64>,
    wh: Vec<f64>,
}

impl RegularizedRhs {
    fn new(problem: &ProblemSpec, grid: &Grid, quad: &QuadratureRule, eps: f64) -> Result<Self> {
        let cap = 1.0 / eps;
        let f = problem.f.nodal(grid)?;
        let h = problem.h.nodal(grid)?;
        let mask = |i: usize, v: f64| if grid.boundary_mask[i] { 0.0 } else { quad.weights[i] * v.min(cap) };
        Ok(Self {
            eps,
            gamma: problem.gamma,
            theta: problem.theta,
            wf: f.iter().enumerate().map(|(i, v)| mask(i, *v)).collect(),
            wh: h.iter().enumerate().map(|(i, v)| mask(i, *v)).collect(),
        })
    }

    fn truncated_power(&self, s: f64) -> f64 {
        s.max(0.0).powf(self.theta).min(1.0 / self.eps)
    }

    fn value(&self, i: usize, s: f64) -> f64 {
        self.wf[i] / (s.max(0.0) + self.eps).powf(self.gamma) + self.wh[i] * self.truncated_power(s)
    }

    fn derivative(&self, i: usize, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let mut d = -self.gamma * self.wf[i] / (s + self.eps).powf(self.gamma + 1.0);
        if self.wh[i] != 0.0 && self.theta > 0.0 && s.powf(self.theta) < 1.0 / self.eps {
            d += self.wh[i] * self.theta * s.powf(self.theta - 1.0);
        }
        d
    }

    /// Antiderivative of `value(i, ·)` vanishing at 0.
    fn primitive(&self, i: usize, s: f64) -> f64 {
        let (eps, g, th) = (self.eps, self.gamma, self.theta);
        if s <= 0.0 {
            return self.wf[i] * s / eps.powf(g);
        }
        let fpart = if (g - 1.0).abs() < 1e-14 {
            self.wf[i] * ((s + eps) / eps).ln()
        } else {
            self.wf[i] * ((s + eps).powf(1.0 - g) - eps.powf(1.0 - g)) / (1.0 - g)
        };
        let hpart = if self.wh[i] == 0.0 {
            0.0
        } else if th == 0.0 {
            self.wh[i] * s * 1f64.min(1.0 / eps)
        } else {
            let knee = eps.powf(-1.0 / th);
            if s <= knee {
                self.wh[i] * s.powf(th + 1.0) / (th + 1.0)
            } else {
                self.wh[i] * (knee.powf(th + 1.0) / (th + 1.0) + (s - knee) / eps)
            }
        };
        fpart + hpart
    }
}

struct Residual {
    g: Vec<f64>,
    inf: f64,
    two: f64,
    scale: f64,
}

struct Regularized<'a> {
    problem: &'a ProblemSpec,
    grid: &'a Grid,
    dofs: DofMap,
    rhs: RegularizedRhs,
}

impl<'a> Regularized<'a> {
    fn new(problem: &'a ProblemSpec, grid: &'a Grid, eps: f64) -> Result<Self> {
        problem.validate()?;
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
        }
        grid.check_norm(&problem.norm)?;
        if grid.domain != problem.domain {
            return Err(Error::InvalidGrid("grid domain differs from the problem domain".into()));
        }
        let quad = lumped_mass(grid);
        Ok(Self {
            problem,
            grid,
            dofs: DofMap::interior(grid),
            rhs: RegularizedRhs::new(problem, grid, &quad, eps)?,
        })
    }

    fn residual(&self, u: &DiscreteField) -> Result<Residual> {
        let grad = energy_gradient(self.grid, &self.problem.norm, self.problem.p, u)?;
        let mut g = Vec::with_capacity(self.dofs.len());
        let (mut inf, mut two, mut ge, mut gb) = (0.0f64, 0.0, 0.0f64, 0.0f64);
        for &i in &self.dofs.dof_to_vertex {
            let b = self.rhs.value(i, u.values[i]);
            let r = grad.values[i] - b;
            inf = inf.max(r.abs());
            two += r * r;
            ge = ge.max(grad.values[i].abs());
            gb = gb.max(b.abs());
            g.push(r);
        }
        Ok(Residual {
            g,
            inf,
            two: two.sqrt(),
            scale: ge.max(gb).max(f64::MIN_POSITIVE),
        })
    }

    /// `E(u) − Σ w_i F_ε(u_i)`, whose gradient is `G`.
    fn objective(&self, u: &DiscreteField) -> Result<f64> {
        let e = energy(self.grid, &self.problem.norm, self.problem.p, u)?;
        let s: f64 = self
            .dofs
            .dof_to_vertex
            .iter()
            .map(|&i| self.rhs.primitive(i, u.values[i]))
            .sum();
        Ok(e - s)
    }

    fn flux_hessian(&self, u: &DiscreteField) -> SymAssembler {
        assemble_energy_hessian(self.grid, &self.problem.norm, self.problem.p, &u.values, 0.0, &self.dofs)
    }

    fn jacobian(&self, u: &DiscreteField) -> SymAssembler {
        let mut asm = self.flux_hessian(u);
        for (k, &i) in self.dofs.dof_to_vertex.iter().enumerate() {
            asm.push(k, k, -self.rhs.derivative(i, u.values[i]));
        }
        asm
    }

    /// Largest step in `(0, 1]` keeping every entry above `−ε/2`.
    fn max_step(&self, u: &DiscreteField, dir: &[f64]) -> f64 {
        let floor = -0.5 * self.rhs.eps;
        let mut alpha = 1.0f64;
        for (k, &i) in self.dofs.dof_to_vertex.iter().enumerate() {
            if dir[k] < 0.0 {
                let room = u.values[i] - floor;
                alpha = alpha.min(0.99 * room / -dir[k]);
            }
        }
        alpha.max(0.0)
    }

    fn step(&self, u: &DiscreteField, dir: &[f64], alpha: f64) -> DiscreteField {
        let mut out = u.clone();
        for (k, &i) in self.dofs.dof_to_vertex.iter().enumerate() {
            out.values[i] += alpha * dir[k];
        }
        out
    }

    fn start(&self, warm: Option<&DiscreteField>, scale: f64) -> Result<DiscreteField> {
        let mut u = match warm {
            Some(w) => {
                self.grid.check_field(w)?;
                w.clone()
            }
            None => distance_field(self.grid).scaled(scale),
        };
        u.zero_boundary(self.grid);
        let floor = -0.5 * self.rhs.eps;
        for v in u.values.iter_mut() {
            *v = v.max(floor * 0.99);
        }
        Ok(u)
    }

    fn report(&self, u: DiscreteField, iters: usize, res: &Residual, converged: bool) -> Result<SolveReport> {
        let (p, norm) = (self.problem.p, &self.problem.norm);
        let nehari = if self.problem.gamma > 1.0 {
            Some(nehari_defect(self.problem, self.grid, &u)?)
        } else {
            None
        };
        Ok(SolveReport {
            epsilon: self.rhs.eps,
            converged,
            newton_iters: iters,
            final_residual: res.inf / res.scale,
            residual_scale: res.scale,
            energy_value: energy(self.grid, norm, p, &u)?,
            seminorm: seminorm_p(self.grid, norm, p, &u)?,
            min_u_interior: u.min_interior(self.grid),
            max_u: u.values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v)),
            nehari_defect: nehari,
            u,
        })
    }

    fn newton(&self, mut u: DiscreteField) -> Result<SolveReport> {
        let mut res = self.residual(&u)?;
        let mut iters = 0;
        while iters < MAX_NEWTON_ITERS {
            if res.inf <= RESIDUAL_TOL * res.scale {
                return self.report(u, iters, &res, true);
            }
            iters += 1;
            let jac = self.jacobian(&u);
            let mu = 1e-12 * jac.diag_max();
            let neg: Vec<f64> = res.g.iter().map(|v| -v).collect();
            let (dir, _) = jac.solve(&neg, mu)?;
            let mut alpha = self.max_step(&u, &dir);
            let mut next = None;
            for _ in 0..50 {
                let trial = self.step(&u, &dir, alpha);
                let tres = self.residual(&trial)?;
                if tres.two <= (1.0 - 1e-4 * alpha) * res.two {
                    next = Some((trial, tres));
                    break;
                }
                alpha *= 0.5;
            }
            match next {
                Some((trial, tres)) => {
                    u = trial;
                    res = tres;
                }
                None => break,
            }
        }
        let converged = res.inf <= RESIDUAL_TOL * res.scale;
        self.report(u, iters, &res, converged)
    }

    /// Descent on the objective with the flux Hessian alone as preconditioner
    /// (the right-hand side is lagged), backtracking on the objective.
    fn descent(&self, mut u: DiscreteField, max_iters: usize) -> Result<SolveReport> {
        let mut res = self.residual(&u)?;
        let mut phi = self.objective(&u)?;
        let mut iters = 0;
        while iters < max_iters {
            if res.inf <= RESIDUAL_TOL * res.scale {
                return self.report(u, iters, &res, true);
            }
            iters += 1;
            let pre = self.flux_hessian(&u);
            let mu = 1e-12 * pre.diag_max();
            let neg: Vec<f64> = res.g.iter().map(|v| -v).collect();
            let (dir, _) = pre.solve(&neg, mu)?;
            let slope: f64 = res.g.iter().zip(&dir).map(|(a, b)| a * b).sum();
            let noise = 1e-13 * phi.abs().max(f64::MIN_POSITIVE);
            let mut alpha = self.max_step(&u, &dir);
            let mut next = None;
            for _ in 0..60 {
                let trial = self.step(&u, &dir, alpha);
                let phi_t = self.objective(&trial)?;
                let resolved = -slope * alpha > noise;
                let tres = self.residual(&trial)?;
                let ok = if resolved {
                    phi_t <= phi + 1e-4 * alpha * slope
                } else {
                    tres.two < res.two
                };
                if ok {
                    next = Some((trial, tres, phi_t));
                    break;
                }
                alpha *= 0.5;
            }
            match next {
                Some((trial, tres, phi_t)) => {
                    u = trial;
                    res = tres;
                    phi = phi_t;
                }
                None => break,
            }
        }
        let converged = res.inf <= RESIDUAL_TOL * res.scale;
        self.report(u, iters, &res, converged)
    }
}

fn warn_if_degenerate(problem: &ProblemSpec, grid: &Grid) -> Result<()> {
    let f = problem.f.nodal(grid)?;
    if grid.interior_nodes().all(|i| f[i] == 0.0) {
        log::warn!("f vanishes identically; the singular problem degenerates");
    }
    Ok(())
}

/// Solves the regularized problem at level `epsilon` by damped Newton,
/// starting from `warm_start` or from the distance function.
///
/// Non-convergence is reported through `converged = false` with the best iterate.
pub fn solve_regularized(
    problem: &ProblemSpec,
    grid: &Grid,
    epsilon: f64,
    warm_start: Option<&DiscreteField>,
) -> Result<SolveReport> {
    let sys = Regularized::new(problem, grid, epsilon)?;
    warn_if_degenerate(problem, grid)?;
    let u = sys.start(warm_start, 1.0)?;
    sys.newton(u)
}

/// Newton from the distance function scaled by `scale`.
pub fn solve_regularized_from_scaled_distance(
    problem: &ProblemSpec,
    grid: &Grid,
    epsilon: f64,
    scale: f64,
) -> Result<SolveReport> {
    let sys = Regularized::new(problem, grid, epsilon)?;
    let u = sys.start(None, scale)?;
    sys.newton(u)
}

/// Lagged right-hand-side descent on the regularized energy. Independent of
/// the Newton path; used to cross-check uniqueness.
pub fn solve_regularized_descent(
    problem: &ProblemSpec,
    grid: &Grid,
    epsilon: f64,
    start: Option<&DiscreteField>,
    max_iters: usize,
) -> Result<SolveReport> {
    let sys = Regularized::new(problem, grid, epsilon)?;
    let u = sys.start(start, 1.0)?;
    sys.descent(u, max_iters)
}

/// Residual `G(u)` of the regularized system, on all vertices (zero on the boundary).
pub fn regularized_residual(
    problem: &ProblemSpec,
    grid: &Grid,
    epsilon: f64,
    u: &DiscreteField,
) -> Result<DiscreteField> {
    let sys = Regularized::new(problem, grid, epsilon)?;
    grid.check_field(u)?;
    let res = sys.residual(u)?;
    let mut out = DiscreteField::zeros(grid);
    for (k, &i) in sys.dofs.dof_to_vertex.iter().enumerate() {
        out.values[i] = res.g[k];
    }
    Ok(out)
}

/// Geometric schedule `1e−2, 1e−3, …, 1e−10`.
pub fn default_schedule() -> Vec<f64> {
    geometric_schedule(1e-2, 1e-10, 0.1)
}

/// `start, start·ratio, …` down to `end` (inclusive up to rounding).
pub fn geometric_schedule(start: f64, end: f64, ratio: f64) -> Vec<f64> {
    let n = ((end / start).ln() / ratio.ln()).round() as i32;
    (0..=n).map(|k| start * ratio.powi(k)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationReport {
    pub schedule: Vec<f64>,
    pub steps: Vec<SolveReport>,
    /// The last two relative seminorm increments are both below 1%.
    pub saturation_flag: bool,
    /// Slope of `log(seminorm^p)` against `log(1/ε)` over the last half of the
    /// schedule (at least three points).
    pub growth_exponent: Option<f64>,
}

impl ContinuationReport {
    fn from_steps(schedule: Vec<f64>, steps: Vec<SolveReport>, p: f64) -> Self {
        let s: Vec<f64> = steps.iter().map(|r| r.seminorm).collect();
        let n = s.len();
        let saturation_flag = n >= 3
            && (n - 2..n).all(|k| (s[k] - s[k - 1]).abs() < 0.01 * s[k].abs());
        let growth_exponent = if n >= 3 {
            let m = n.div_ceil(2).max(3);
            let xs: Vec<f64> = steps[n - m..].iter().map(|r| (1.0 / r.epsilon).ln()).collect();
            let ys: Vec<f64> = s[n - m..].iter().map(|v| p * v.ln()).collect();
            Some(fit_slope(&xs, &ys))
        } else {
            None
        };
        Self {
            schedule,
            steps,
            saturation_flag,
            growth_exponent,
        }
    }

    pub fn last(&self) -> Option<&SolveReport> {
        self.steps.last()
    }
}

/// Warm-started sweep over a strictly decreasing schedule of `ε`.
pub fn solve_continuation(
    problem: &ProblemSpec,
    grid: &Grid,
    schedule: &[f64],
) -> Result<ContinuationReport> {
    if schedule.is_empty() {
        return Err(Error::InvalidParameter("empty epsilon schedule".into()));
    }
    if schedule.iter().any(|e| !(*e > 0.0)) || schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(
            "schedule must be positive and strictly decreasing".into(),
        ));
    }
    let mut steps: Vec<SolveReport> = Vec::with_capacity(schedule.len());
    for &eps in schedule {
        let warm = steps.last().map(|r| &r.u);
        let rep = match solve_regularized(problem, grid, eps, warm) {
            Ok(r) if r.converged => r,
            Ok(r) => {
                let reason = format!("Newton stalled at relative residual {:e}", r.final_residual);
                let partial = ContinuationReport::from_steps(schedule.to_vec(), steps, problem.p);
                return Err(Error::ContinuationAborted {
                    epsilon: eps,
                    reason,
                    partial: Box::new(partial),
                });
            }
            Err(e) => {
                let partial = ContinuationReport::from_steps(schedule.to_vec(), steps, problem.p);
                return Err(Error::ContinuationAborted {
                    epsilon: eps,
                    reason: e.to_string(),
                    partial: Box::new(partial),
                });
            }
        };
        steps.push(rep);
    }
    Ok(ContinuationReport::from_steps(schedule.to_vec(), steps, problem.p))
}

fn require_gamma_gt_one(problem: &ProblemSpec) -> Result<()> {
    if problem.gamma <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "requires gamma > 1, got {}",
            problem.gamma
        )));
    }
    Ok(())
}

/// Lumped integrals `(∫ f|u|^{1−γ}, ∫ h|u|^{θ+1})` over interior nodes;
/// the first is `+∞` if `u` vanishes where `f > 0`.
fn zeroth_order_terms(problem: &ProblemSpec, grid: &Grid, u: &DiscreteField) -> Result<(f64, f64)> {
    grid.check_field(u)?;
    let quad = lumped_mass(grid);
    let f = problem.f.nodal(grid)?;
    let h = problem.h.nodal(grid)?;
    let mut sf = 0.0;
    let mut sh = 0.0;
    for i in grid.interior_nodes() {
        let a = u.values[i].abs();
        if f[i] > 0.0 {
            if a == 0.0 {
                sf = f64::INFINITY;
            } else {
                sf += quad.weights[i] * f[i] * a.powf(1.0 - problem.gamma);
            }
        }
        sh += quad.weights[i] * h[i] * a.powf(problem.theta + 1.0);
    }
    Ok((sf, sh))
}

/// `J(u) = E(u) + (1/(γ−1))∫f|u|^{1−γ} − (1/(θ+1))∫h|u|^{θ+1}`; `+∞` if `u`
/// vanishes at an interior node where `f > 0`.
pub fn energy_j(problem: &ProblemSpec, grid: &Grid, u: &DiscreteField) -> Result<f64> {
    require_gamma_gt_one(problem)?;
    let (sf, sh) = zeroth_order_terms(problem, grid, u)?;
    let e = energy(grid, &problem.norm, problem.p, u)?;
    Ok(e + sf / (problem.gamma - 1.0) - sh / (problem.theta + 1.0))
}

/// `D(u) = ∫H^p(∇u) − ∫f|u|^{1−γ} − ∫h|u|^{θ+1}`; zero on the natural constraint.
pub fn nehari_defect(problem: &ProblemSpec, grid: &Grid, u: &DiscreteField) -> Result<f64> {
    require_gamma_gt_one(problem)?;
    let (sf, sh) = zeroth_order_terms(problem, grid, u)?;
    let e = energy(grid, &problem.norm, problem.p, u)?;
    Ok(problem.p * e - sf - sh)
}

/// Lumped `∫ f u₀^{1−γ}` with strip-refinement divergence detection.
pub fn compatibility_integral(
    problem: &ProblemSpec,
    grid: &Grid,
    u0: &DiscreteField,
) -> Result<IntegralEstimate> {
    compatibility_integral_with_exponent(problem, grid, u0, None)
}

/// As [`compatibility_integral`], adding the analytic verdict when the
/// integrand is known to behave like `d(x)^r` at the boundary.
pub fn compatibility_integral_with_exponent(
    problem: &ProblemSpec,
    grid: &Grid,
    u0: &DiscreteField,
    boundary_exponent: Option<f64>,
) -> Result<IntegralEstimate> {
    require_gamma_gt_one(problem)?;
    grid.check_field(u0)?;
    let quad = lumped_mass(grid);
    let f = problem.f.nodal(grid)?;
    let integrand: Vec<f64> = (0..grid.n_vertices())
        .map(|i| {
            if grid.boundary_mask[i] || f[i] == 0.0 {
                0.0
            } else if u0.values[i] <= 0.0 {
                f64::INFINITY
            } else {
                f[i] * u0.values[i].powf(1.0 - problem.gamma)
            }
        })
        .collect();
    let mut est = strip_estimate(grid, &quad, &integrand, boundary_exponent.map(|r| r > -1.0));
    if integrand.iter().any(|v| v.is_infinite()) {
        est.numeric_finite = false;
        if est.analytic_finite.is_none() {
            est.value = None;
        }
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn model(p: f64, gamma: f64, n: usize) -> (ProblemSpec, Grid) {
        let problem = ProblemSpec {
            p,
            gamma,
            theta: 0.0,
            norm: FinslerSpec::euclidean(1).unwrap(),
            f: DataDesc::Constant { value: 1.0 },
            h: DataDesc::zero(),
            domain: Domain::unit_interval(),
            resolution: vec![n],
        };
        let grid = problem.grid().unwrap();
        (problem, grid)
    }

    #[test]
    fn validation() {
        let (mut pr, _) = model(2.0, 2.0, 8);
        assert!(pr.validate().is_ok());
        pr.theta = 1.0;
        assert!(pr.validate().is_err());
        pr.theta = 0.5;
        pr.gamma = 0.0;
        assert!(pr.validate().is_err());
        pr.gamma = 1.0;
        pr.f = DataDesc::Constant { value: -1.0 };
        assert!(pr.validate().is_err());
        let (pr, g) = model(2.0, 2.0, 8);
        assert!(solve_regularized(&pr, &g, 0.0, None).is_err());
    }

    #[test]
    fn json_layout() {
        let js = r#"{"p":2,"gamma":2,"theta":0.5,"norm":{"kind":"euclidean","dim":1},
            "f":{"kind":"dist_power","sigma":0.2},"h":{"kind":"constant","value":1},
            "domain":{"kind":"interval","length":1},"resolution":[64]}"#;
        let pr: ProblemSpec = serde_json::from_str(js).unwrap();
        assert_eq!(pr.f, DataDesc::DistPower { coef: 1.0, sigma: 0.2 });
        pr.validate().unwrap();
        assert!(serde_json::from_str::<ProblemSpec>(r#"{"p":2}"#).is_err());
    }

    #[test]
    fn degenerate_data_gives_zero() {
        let (mut pr, g) = model(2.0, 1.0, 16);
        pr.f = DataDesc::zero();
        let r = solve_regularized(&pr, &g, 1e-6, Some(&DiscreteField::zeros(&g))).unwrap();
        assert!(r.converged);
        assert!(r.u.max_abs() == 0.0);
    }

    #[test]
    fn residual_is_gradient_of_objective() {
        let (mut pr, g) = model(3.0, 1.5, 12);
        pr.h = DataDesc::Constant { value: 0.7 };
        pr.theta = 0.6;
        let sys = Regularized::new(&pr, &g, 1e-2).unwrap();
        let u = DiscreteField::interpolate_dirichlet(&g, |x| 0.3 * (PI * x[0]).sin() + 0.01);
        let res = sys.residual(&u).unwrap();
        for (k, &i) in sys.dofs.dof_to_vertex.iter().enumerate() {
            let t = 1e-7;
            let mut up = u.clone();
            let mut um = u.clone();
            up.values[i] += t;
            um.values[i] -= t;
            let fd = (sys.objective(&up).unwrap() - sys.objective(&um).unwrap()) / (2.0 * t);
            assert!((fd - res.g[k]).abs() < 1e-6 * res.scale, "{fd} {}", res.g[k]);
        }
    }

    #[test]
    fn manufactured_sine() {
        // −u'' = π² sin²(πx) / u with u = sin(πx)
        let (mut pr, g) = model(2.0, 1.0, 64);
        pr.f = DataDesc::SinePower { coef: PI * PI, power: 2.0 };
        let r = solve_regularized(&pr, &g, 1e-8, None).unwrap();
        assert!(r.converged && r.final_residual <= RESIDUAL_TOL);
        assert!(r.min_u_interior > 0.0);
        let err = g
            .interior_nodes()
            .map(|i| (r.u.values[i] - (PI * g.coords(i)[0]).sin()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn continuation_is_monotone() {
        let (pr, g) = model(2.0, 0.5, 64);
        let sched = geometric_schedule(1e-2, 1e-8, 0.1);
        assert_eq!(sched.len(), 7);
        let rep = solve_continuation(&pr, &g, &sched).unwrap();
        for w in rep.steps.windows(2) {
            assert!(w[1].seminorm >= w[0].seminorm - 1e-10);
        }
        assert!(rep.saturation_flag);
        assert!(rep.growth_exponent.unwrap().abs() <= 0.05);
        assert!(solve_continuation(&pr, &g, &[]).is_err());
        assert!(solve_continuation(&pr, &g, &[1e-3, 1e-2]).is_err());
    }

    #[test]
    fn nehari_and_energy() {
        let (pr, g) = model(2.0, 2.0, 64);
        let rep = solve_continuation(&pr, &g, &default_schedule()).unwrap();
        let u = &rep.last().unwrap().u;
        let e = energy(&g, &pr.norm, pr.p, u).unwrap();
        let d = nehari_defect(&pr, &g, u).unwrap();
        assert!(d.abs() <= 1e-6 * pr.p * e, "{d}");
        let j1 = energy_j(&pr, &g, u).unwrap();
        assert!(j1 > 0.0);
        let j01 = energy_j(&pr, &g, &u.scaled(0.1)).unwrap();
        let j001 = energy_j(&pr, &g, &u.scaled(0.01)).unwrap();
        assert!(j001 > j01 && j01 > j1);
        assert!(nehari_defect(&pr, &g, &u.scaled(0.01)).unwrap() < 0.0);
        assert!(nehari_defect(&pr, &g, &u.scaled(10.0)).unwrap() > 0.0);
        assert_eq!(energy_j(&pr, &g, &DiscreteField::zeros(&g)).unwrap(), f64::INFINITY);
        let (pr1, _) = model(2.0, 1.0, 64);
        assert!(energy_j(&pr1, &g, u).is_err());
        assert!(nehari_defect(&pr1, &g, u).is_err());
    }

    #[test]
    fn compatibility_of_constant() {
        let (pr, g) = model(2.0, 2.0, 64);
        let mut one = DiscreteField::interpolate(&g, |_| 1.0);
        one.zero_boundary(&g);
        let est = compatibility_integral(&pr, &g, &one).unwrap();
        assert!(est.numeric_finite);
        assert_relative_eq!(est.value.unwrap(), 1.0 - 1.0 / 64.0, epsilon = 1e-12);
    }

    #[test]
    fn primitive_matches_value() {
        let (mut pr, g) = model(2.0, 1.0, 4);
        pr.h = DataDesc::Constant { value: 1.0 };
        pr.theta = 0.5;
        for gamma in [0.5, 1.0, 2.5] {
            pr.gamma = gamma;
            let quad = lumped_mass(&g);
            let rhs = RegularizedRhs::new(&pr, &g, &quad, 1e-1).unwrap();
            for s in [-0.02f64, 0.01, 0.3, 2.0, 150.0] {
                let t = 1e-6 * s.abs().max(0.01);
                let fd = (rhs.primitive(1, s + t) - rhs.primitive(1, s - t)) / (2.0 * t);
                assert_relative_eq!(fd, rhs.value(1, s), max_relative = 1e-6);
                let dd = (rhs.value(1, s + t) - rhs.value(1, s - t)) / (2.0 * t);
                assert_relative_eq!(dd, rhs.derivative(1, s), epsilon = 1e-10, max_relative = 1e-5);
            }
        }
    }
}
