//! Executable checks of the qualitative theory: existence thresholds, barrier
//! sandwiches by powers of `φ₁`, comparison and uniqueness, and sweeps in `γ`
//! and in the summability exponent `m` of `f`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::eigen::{first_eigenpair, EigenReport, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::finsler::check_p;
use crate::grid::{distance_field, seminorm_p, DiscreteField, Grid};
use crate::singular::{
    compatibility_integral_with_exponent, energy_j, geometric_schedule, solve_continuation,
    solve_regularized_descent, solve_regularized_from_scaled_distance, ContinuationReport,
    DataDesc, ProblemSpec,
};

/// Growth exponents at or below this are read as a bounded continuation.
pub const BOUNDED_GROWTH: f64 = 0.05;
/// Growth exponents at or above this are read as blow-up.
pub const BLOWUP_GROWTH: f64 = 0.2;
/// Half-width of the band around the threshold where no verdict is claimed.
pub const INCONCLUSIVE_BAND: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExistencePrediction {
    pub exists: bool,
    pub threshold: f64,
}

/// `γ < 2 + 1/(p−1) − p/((p−1)m)`, the last term dropped for `m = ∞`.
pub fn predict_existence(p: f64, gamma: f64, m: f64) -> Result<ExistencePrediction> {
    check_p(p)?;
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    if !(m > 1.0) {
        return Err(Error::InvalidParameter(format!("m must exceed 1, got {m}")));
    }
    if m.is_finite() && gamma <= 1.0 {
        return Err(Error::Hypothesis(format!(
            "the L^m threshold assumes gamma > 1, got {gamma}"
        )));
    }
    let threshold = critical_gamma(p, m);
    Ok(ExistencePrediction {
        exists: gamma < threshold,
        threshold,
    })
}

fn critical_gamma(p: f64, m: f64) -> f64 {
    let base = 2.0 + 1.0 / (p - 1.0);
    if m.is_finite() {
        base - p / ((p - 1.0) * m)
    } else {
        base
    }
}

/// Smallest `m` for which `γ` is below the `L^m` threshold (`∞` if none).
pub fn critical_m(p: f64, gamma: f64) -> f64 {
    let gap = 2.0 + 1.0 / (p - 1.0) - gamma;
    if gap <= 0.0 {
        f64::INFINITY
    } else {
        p / ((p - 1.0) * gap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum BarrierExponent {
    /// `s₁φ₁^η ≤ u ≤ s₂φ₁^η`.
    GammaGt1 { eta: f64 },
    /// `s₁φ₁ ≤ u ≤ s₂φ₁^t` for any `t` in the open interval.
    GammaLe1 { t_min: f64, t_max: f64 },
}

impl BarrierExponent {
    /// `(lower, upper)` exponents, with `t` used in the `γ ≤ 1` regime.
    pub fn exponents(&self, t: f64) -> (f64, f64) {
        match *self {
            BarrierExponent::GammaGt1 { eta } => (eta, eta),
            BarrierExponent::GammaLe1 { .. } => (1.0, t),
        }
    }
}

pub fn barrier_exponent(p: f64, gamma: f64) -> Result<BarrierExponent> {
    check_p(p)?;
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be nonnegative, got {gamma}")));
    }
    let threshold = critical_gamma(p, f64::INFINITY);
    if gamma >= threshold {
        return Err(Error::Hypothesis(format!(
            "gamma = {gamma} is not below {threshold}; the barrier leaves the energy space"
        )));
    }
    if gamma > 1.0 {
        Ok(BarrierExponent::GammaGt1 {
            eta: p / (gamma + p - 1.0),
        })
    } else {
        Ok(BarrierExponent::GammaLe1 {
            t_min: (p - 1.0) / p,
            t_max: 1.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarrierConstants {
    pub s1: f64,
    pub s2: f64,
    pub lower_exponent: f64,
    pub upper_exponent: f64,
    /// Candidates for `s₂` from the boundary strip and from its complement.
    pub s2_strip: f64,
    pub s2_interior: f64,
    /// `m ≤ g ≤ M` for `g = f + h u^{γ+θ}` over interior nodes.
    pub g_min: f64,
    pub g_max: f64,
    pub strip_width: f64,
}

/// Nodal gradients of `u`, averaged over adjacent cells by measure.
fn nodal_gradients(grid: &Grid, u: &DiscreteField) -> Vec<[f64; 2]> {
    let mut acc = vec![[0.0; 2]; grid.n_vertices()];
    let mut mass = vec![0.0; grid.n_vertices()];
    let k = grid.cell_size();
    for c in &grid.cells {
        let g = grid.cell_gradient(c, &u.values);
        for &n in &c.nodes[..k] {
            acc[n][0] += c.measure * g[0];
            acc[n][1] += c.measure * g[1];
            mass[n] += c.measure;
        }
    }
    acc.iter()
        .zip(&mass)
        .map(|(a, m)| [a[0] / m, a[1] / m])
        .collect()
}

fn centroid(grid: &Grid, nodes: &[usize]) -> [f64; 2] {
    let mut x = [0.0; 2];
    for &n in nodes {
        for k in 0..2 {
            x[k] += grid.vertices[n][k] / nodes.len() as f64;
        }
    }
    x
}

fn centroid_distance(grid: &Grid, nodes: &[usize]) -> f64 {
    let x = centroid(grid, nodes);
    grid.domain.distance_to_boundary(&x[..grid.dim()])
}

fn near_corner(grid: &Grid, x: &[f64; 2], radius: f64) -> bool {
    grid.domain
        .corners()
        .iter()
        .any(|c| ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt() < radius)
}

/// Barrier constants from the sub/supersolution construction with the
/// discrete eigenpair. `t` selects the upper exponent when `γ ≤ 1`
/// (default: midpoint of the admissible interval).
///
/// The strip gradient minimum skips cells within `corner_radius` of a corner
/// and cells with every vertex on the boundary, where the gradient of any
/// Dirichlet field vanishes.
pub fn compute_barrier_constants(
    eigen: &EigenReport,
    problem: &ProblemSpec,
    grid: &Grid,
    u: &DiscreteField,
    strip_eps: f64,
    corner_radius: f64,
    t: Option<f64>,
) -> Result<BarrierConstants> {
    problem.validate()?;
    grid.check_norm(&problem.norm)?;
    if eigen.phi1.len() != grid.n_vertices() || u.len() != grid.n_vertices() {
        return Err(Error::MismatchedGrid {
            expected: grid.n_vertices(),
            got: eigen.phi1.len().min(u.len()),
        });
    }
    if !(strip_eps > 2.0 * grid.h) {
        return Err(Error::InvalidParameter(format!(
            "strip width {strip_eps} does not exceed 2h = {}",
            2.0 * grid.h
        )));
    }
    if !problem.f.is_bounded() || !problem.h.is_bounded() {
        return Err(Error::DegenerateBarrier("f or h is unbounded".into()));
    }
    let (p, gamma, theta) = (problem.p, problem.gamma, problem.theta);
    let regime = barrier_exponent(p, gamma)?;
    let (tmin, tmax) = match regime {
        BarrierExponent::GammaGt1 { .. } => (0.0, 1.0),
        BarrierExponent::GammaLe1 { t_min, t_max } => (t_min, t_max),
    };
    let t = t.unwrap_or(0.5 * (tmin + tmax));
    if matches!(regime, BarrierExponent::GammaLe1 { .. }) && !(t > tmin && t < tmax) {
        return Err(Error::InvalidParameter(format!("t = {t} outside ({tmin}, {tmax})")));
    }
    let (lower, upper) = regime.exponents(t);
    let lambda = eigen.lambda1;
    let phi = &eigen.phi1.values;
    let dist = distance_field(grid);
    let f = problem.f.nodal(grid)?;
    let h = problem.h.nodal(grid)?;
    let g: Vec<f64> = (0..grid.n_vertices())
        .map(|i| f[i] + h[i] * u.values[i].max(0.0).powf(gamma + theta))
        .collect();

    let interior: Vec<usize> = grid.interior_nodes().collect();
    let g_min = interior.iter().map(|&i| g[i]).fold(f64::INFINITY, f64::min);
    let g_max = interior.iter().map(|&i| g[i]).fold(0.0, f64::max);
    if !(g_min > 0.0) {
        return Err(Error::Hypothesis("f must be bounded below by a positive constant".into()));
    }
    if !g_max.is_finite() {
        return Err(Error::DegenerateBarrier("g is unbounded".into()));
    }
    let in_strip = |i: usize| dist.values[i] < strip_eps;
    let g_max_strip = interior.iter().filter(|&&i| in_strip(i)).map(|&i| g[i]).fold(0.0, f64::max);
    let g_max_inner = interior.iter().filter(|&&i| !in_strip(i)).map(|&i| g[i]).fold(0.0, f64::max);
    let phi_min_inner = interior
        .iter()
        .filter(|&&i| !in_strip(i))
        .map(|&i| phi[i])
        .fold(f64::INFINITY, f64::min);
    let phi_max_strip = interior
        .iter()
        .filter(|&&i| in_strip(i))
        .map(|&i| phi[i])
        .fold(0.0, f64::max);
    if !phi_min_inner.is_finite() {
        return Err(Error::DegenerateBarrier("strip covers the whole domain".into()));
    }

    let k = grid.cell_size();
    let d = grid.dim();
    let alpha = problem.norm.bounds().map(|b| b.0);
    let mut strip_cells = 0usize;
    let mut min_grad_p = f64::INFINITY;
    for c in &grid.cells {
        if centroid_distance(grid, &c.nodes[..k]) >= strip_eps
            || c.nodes[..k].iter().all(|&n| grid.boundary_mask[n])
            || near_corner(grid, &centroid(grid, &c.nodes[..k]), corner_radius)
        {
            continue;
        }
        strip_cells += 1;
        let gr = grid.cell_gradient(c, phi);
        let r = (gr[0] * gr[0] + gr[1] * gr[1]).sqrt();
        // without an analytic ellipticity constant, use H(∇φ₁) ≥ α|∇φ₁| with α
        // taken at the gradient itself
        let a = alpha.unwrap_or_else(|| if r > 0.0 { problem.norm.value(&gr[..d]) / r } else { 1.0 });
        min_grad_p = min_grad_p.min((a * r).powf(p));
    }
    if strip_cells == 0 {
        return Err(Error::DegenerateBarrier("the boundary strip contains no cells".into()));
    }
    if min_grad_p == 0.0 {
        return Err(Error::DegenerateBarrier(
            "the gradient of phi1 vanishes in the boundary strip".into(),
        ));
    }

    let root = 1.0 / (gamma + p - 1.0);
    let (s2_strip, s2_interior, c_bar);
    match regime {
        BarrierExponent::GammaGt1 { eta } => {
            let w = eta.powf(p - 1.0);
            s2_strip = (g_max_strip / (w * (1.0 - eta) * (p - 1.0) * min_grad_p)).powf(root);
            s2_interior = (g_max_inner / (w * lambda * phi_min_inner.powf(p))).powf(root);
            let grads = nodal_gradients(grid, &eigen.phi1);
            c_bar = (0..grid.n_vertices())
                .map(|i| {
                    let hp = problem.norm.value(&grads[i][..d]).powf(p);
                    w * ((1.0 - eta) * (p - 1.0) * hp + lambda * phi[i].max(0.0).powf(p))
                })
                .fold(0.0, f64::max);
        }
        BarrierExponent::GammaLe1 { .. } => {
            let w = t.powf(p - 1.0);
            // φ₁^{t(p−1)−p+tγ} has a negative exponent, so on the strip it is
            // bounded below by its value at the largest φ₁ there
            let e = t * (p - 1.0) - p + t * gamma;
            let boost = phi_max_strip.max(f64::MIN_POSITIVE).powf(e);
            s2_strip = (g_max_strip / (w * (1.0 - t) * (p - 1.0) * min_grad_p * boost)).powf(root);
            s2_interior =
                (g_max_inner / (w * lambda * phi_min_inner.powf(t * (p - 1.0 + gamma)))).powf(root);
            let phi_max = phi.iter().fold(0.0f64, |m, v| m.max(*v));
            c_bar = lambda * phi_max.powf(p - 1.0 + gamma);
        }
    }
    Ok(BarrierConstants {
        s1: (g_min / c_bar).powf(root),
        s2: s2_strip.max(s2_interior),
        lower_exponent: lower,
        upper_exponent: upper,
        s2_strip,
        s2_interior,
        g_min,
        g_max,
        strip_width: strip_eps,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierReport {
    pub eta: f64,
    pub upper_exponent: f64,
    pub s1: f64,
    pub s2: f64,
    pub consistent: bool,
    pub slack: f64,
    pub checked_nodes: usize,
    pub excluded_nodes: usize,
    pub lower_violation_fraction: f64,
    pub upper_violation_fraction: f64,
    /// Largest `s₁φ₁^η − u` and `u − s₂φ₁^{t}` over checked nodes.
    pub max_lower_excess: f64,
    pub max_upper_excess: f64,
}

/// Default slack `5·h·‖u‖∞`.
pub fn default_slack(grid: &Grid, u: &DiscreteField) -> f64 {
    5.0 * grid.h * u.max_abs()
}

/// Checks `s₁φ₁^{lower} − slack ≤ u ≤ s₂φ₁^{upper} + slack` at interior nodes
/// farther than `exclusion_radius` from the boundary and `corner_radius` from
/// every corner.
pub fn barrier_check(
    grid: &Grid,
    u: &DiscreteField,
    phi1: &DiscreteField,
    constants: &BarrierConstants,
    slack: f64,
    exclusion_radius: f64,
    corner_radius: f64,
) -> Result<BarrierReport> {
    grid.check_field(u)?;
    grid.check_field(phi1)?;
    let dist = distance_field(grid);
    let (mut checked, mut excluded, mut low, mut high) = (0usize, 0usize, 0usize, 0usize);
    let (mut low_ex, mut high_ex) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in grid.interior_nodes() {
        if dist.values[i] <= exclusion_radius || near_corner(grid, &grid.vertices[i], corner_radius) {
            excluded += 1;
            continue;
        }
        checked += 1;
        let ph = phi1.values[i].max(0.0);
        let lo = constants.s1 * ph.powf(constants.lower_exponent);
        let hi = constants.s2 * ph.powf(constants.upper_exponent);
        let v = u.values[i];
        low_ex = low_ex.max(lo - v);
        high_ex = high_ex.max(v - hi);
        if v < lo - slack {
            low += 1;
        }
        if v > hi + slack {
            high += 1;
        }
    }
    let frac = |n: usize| if checked == 0 { 0.0 } else { n as f64 / checked as f64 };
    Ok(BarrierReport {
        eta: constants.lower_exponent,
        upper_exponent: constants.upper_exponent,
        s1: constants.s1,
        s2: constants.s2,
        consistent: constants.s1 <= constants.s2,
        slack,
        checked_nodes: checked,
        excluded_nodes: excluded,
        lower_violation_fraction: frac(low),
        upper_violation_fraction: frac(high),
        max_lower_excess: low_ex,
        max_upper_excess: high_ex,
    })
}

/// Schedule from `1e−2` down to `eps` (or just `eps` if it is larger).
pub fn schedule_to(eps: f64) -> Vec<f64> {
    if eps >= 1e-2 {
        vec![eps]
    } else {
        let mut s = geometric_schedule(1e-2, eps, 0.1);
        if let Some(last) = s.last_mut() {
            *last = eps;
        }
        s
    }
}

fn final_field(problem: &ProblemSpec, grid: &Grid, eps: f64) -> Result<DiscreteField> {
    let rep = solve_continuation(problem, grid, &schedule_to(eps))?;
    Ok(rep.steps.into_iter().next_back().expect("nonempty schedule").u)
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub epsilon: f64,
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Solves both problems at level `eps` and reports `max (u₁ − u₂)₊`.
pub fn comparison_check(
    problem1: &ProblemSpec,
    problem2: &ProblemSpec,
    grid: &Grid,
    eps: f64,
    tolerance: f64,
) -> Result<ComparisonReport> {
    problem1.validate()?;
    problem2.validate()?;
    if problem1.p != problem2.p
        || problem1.gamma != problem2.gamma
        || problem1.theta != problem2.theta
        || problem1.norm != problem2.norm
        || problem1.domain != problem2.domain
    {
        return Err(Error::Hypothesis(
            "compared problems must share p, gamma, theta, norm and domain".into(),
        ));
    }
    for (name, d1, d2) in [("f", &problem1.f, &problem2.f), ("h", &problem1.h, &problem2.h)] {
        let (a, b) = (d1.nodal(grid)?, d2.nodal(grid)?);
        if grid.interior_nodes().any(|i| a[i] > b[i]) {
            return Err(Error::Hypothesis(format!("{name}1 <= {name}2 fails at some node")));
        }
    }
    let u1 = final_field(problem1, grid, eps)?;
    let u2 = final_field(problem2, grid, eps)?;
    let max_violation = u1
        .values
        .iter()
        .zip(&u2.values)
        .map(|(a, b)| (a - b).max(0.0))
        .fold(0.0, f64::max);
    Ok(ComparisonReport {
        epsilon: eps,
        max_violation,
        tolerance,
        pass: max_violation <= tolerance,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    pub epsilon: f64,
    /// Iteration counts of the three paths.
    pub newton_from_distance: usize,
    pub newton_from_scaled_distance: usize,
    pub descent: usize,
    pub all_converged: bool,
    /// Largest pairwise `‖uᵢ − uⱼ‖∞ / ‖u‖∞`.
    pub max_relative_difference: f64,
}

/// Solves at level `eps` by Newton from `d(x)`, Newton from `10·d(x)` and
/// preconditioned descent, and compares the results.
pub fn uniqueness_check(problem: &ProblemSpec, grid: &Grid, eps: f64) -> Result<UniquenessReport> {
    let a = solve_regularized_from_scaled_distance(problem, grid, eps, 1.0)?;
    let b = solve_regularized_from_scaled_distance(problem, grid, eps, 10.0)?;
    let c = solve_regularized_descent(problem, grid, eps, None, 20_000)?;
    let scale = a.u.max_abs().max(f64::MIN_POSITIVE);
    let diff = [(&a, &b), (&a, &c), (&b, &c)]
        .iter()
        .map(|(x, y)| x.u.sub(&y.u).max_abs() / scale)
        .fold(0.0, f64::max);
    Ok(UniquenessReport {
        epsilon: eps,
        newton_from_distance: a.newton_iters,
        newton_from_scaled_distance: b.newton_iters,
        descent: c.newton_iters,
        all_converged: a.converged && b.converged && c.converged,
        max_relative_difference: diff,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Bounded,
    BlowUp,
    Inconclusive,
    Failed,
}

impl Classification {
    pub fn from_growth(g: Option<f64>) -> Self {
        match g {
            Some(g) if g <= BOUNDED_GROWTH => Classification::Bounded,
            Some(g) if g >= BLOWUP_GROWTH => Classification::BlowUp,
            Some(_) => Classification::Inconclusive,
            None => Classification::Failed,
        }
    }

    fn as_str(&self) -> &'static str {
        match self {
            Classification::Bounded => "bounded",
            Classification::BlowUp => "blow_up",
            Classification::Inconclusive => "inconclusive",
            Classification::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompatibilityVerdict {
    pub t: f64,
    pub boundary_exponent: f64,
    pub analytic_finite: bool,
    pub numeric_finite: bool,
    pub band_exponent: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub gamma: f64,
    /// `None` stands for `m = ∞`.
    pub m: Option<f64>,
    pub threshold: f64,
    pub predicted_exists: bool,
    pub growth_exponent: Option<f64>,
    pub saturation_flag: bool,
    pub seminorms: Vec<f64>,
    pub classification: Classification,
    /// `None` inside the inconclusive band or when the run gave no verdict.
    pub agrees_with_prediction: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compatibility: Option<CompatibilityVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub parameter: String,
    pub values: Vec<f64>,
    pub points: Vec<SweepPoint>,
    /// Critical `γ` for a `γ` sweep; critical `m` for an `m` sweep.
    pub predicted_threshold: f64,
}

impl SweepReport {
    /// Columns `value,growth_exponent,saturated,predicted_exists,classification`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "value,growth_exponent,saturated,predicted_exists,classification")?;
        for pt in &self.points {
            let g = pt.growth_exponent.map(|g| g.to_string()).unwrap_or_else(|| "nan".into());
            writeln!(
                w,
                "{},{},{},{},{}",
                pt.value,
                g,
                pt.saturation_flag,
                pt.predicted_exists,
                pt.classification.as_str()
            )?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

fn sweep_point(
    problem: &ProblemSpec,
    grid: &Grid,
    schedule: &[f64],
    value: f64,
    m: f64,
    compatibility: Option<CompatibilityVerdict>,
) -> SweepPoint {
    let threshold = critical_gamma(problem.p, m);
    let predicted_exists = problem.gamma < threshold;
    let (report, error): (Option<ContinuationReport>, Option<String>) =
        match solve_continuation(problem, grid, schedule) {
            Ok(r) => (Some(r), None),
            Err(Error::ContinuationAborted { epsilon, reason, partial }) => {
                (Some(*partial), Some(format!("aborted at epsilon = {epsilon:e}: {reason}")))
            }
            Err(e) => (None, Some(e.to_string())),
        };
    let complete = error.is_none();
    let growth = report.as_ref().and_then(|r| r.growth_exponent).filter(|_| complete);
    let classification = Classification::from_growth(growth);
    let in_band = (problem.gamma - threshold).abs() < INCONCLUSIVE_BAND;
    let agrees = match classification {
        _ if in_band => None,
        Classification::Bounded => Some(predicted_exists),
        Classification::BlowUp => Some(!predicted_exists),
        _ => None,
    };
    SweepPoint {
        value,
        gamma: problem.gamma,
        m: m.is_finite().then_some(m),
        threshold,
        predicted_exists,
        growth_exponent: growth,
        saturation_flag: report.as_ref().is_some_and(|r| r.saturation_flag && complete),
        seminorms: report
            .map(|r| r.steps.iter().map(|s| s.seminorm).collect())
            .unwrap_or_default(),
        classification,
        agrees_with_prediction: agrees,
        compatibility,
        error,
    }
}

fn sorted(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("sweep needs finite parameter values".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    Ok(v)
}

/// Continuation for each `γ`, classified by its growth exponent. Points run
/// in parallel on the current rayon pool and are reported in sorted order.
pub fn gamma_sweep(
    template: &ProblemSpec,
    grid: &Grid,
    gamma_values: &[f64],
    schedule: &[f64],
) -> Result<SweepReport> {
    template.validate()?;
    let f = template.f.nodal(grid)?;
    if !grid.interior_nodes().all(|i| f[i] > 0.0) || !template.f.is_bounded() {
        return Err(Error::Hypothesis(
            "the gamma sweep needs bounded f with a positive lower bound".into(),
        ));
    }
    let values = sorted(gamma_values)?;
    for g in &values {
        template.with_gamma(*g).validate()?;
    }
    let points: Vec<SweepPoint> = values
        .par_iter()
        .map(|&g| sweep_point(&template.with_gamma(g), grid, schedule, g, f64::INFINITY, None))
        .collect();
    Ok(SweepReport {
        parameter: "gamma".into(),
        values,
        points,
        predicted_threshold: critical_gamma(template.p, f64::INFINITY),
    })
}

/// `σ(m) = (1 − δ)/m`, so that `d(x)^{−σ(m)}` lies in `L^m` but only just.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaRule {
    pub delta: f64,
}

impl SigmaRule {
    pub fn sigma(&self, m: f64) -> f64 {
        if m.is_finite() {
            (1.0 - self.delta) / m
        } else {
            0.0
        }
    }
}

/// Margin above `(p−1)/p` for the exponent `t` of `u₀ = φ₁^t`.
pub const T_MARGIN: f64 = 1e-3;

/// For each `m`, sets `f = d^{−σ(m)}`, checks the compatibility of
/// `u₀ = φ₁^t` with `t` just above `(p−1)/p`, and runs the continuation.
pub fn summability_sweep(
    template: &ProblemSpec,
    grid: &Grid,
    m_values: &[f64],
    rule: SigmaRule,
    schedule: &[f64],
) -> Result<SweepReport> {
    template.validate()?;
    let (p, gamma) = (template.p, template.gamma);
    if gamma <= 1.0 {
        return Err(Error::Hypothesis(format!("the m sweep assumes gamma > 1, got {gamma}")));
    }
    if !(rule.delta > 0.0 && rule.delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma(m)·m = {} must lie in (0, 1) so that f is in L^m",
            1.0 - rule.delta
        )));
    }
    let values = sorted(m_values)?;
    for m in &values {
        predict_existence(p, gamma, *m)?;
    }
    let eigen = first_eigenpair(grid, &template.norm, p, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let t = (p - 1.0) / p + T_MARGIN;
    let u0 = DiscreteField {
        values: eigen.phi1.values.iter().map(|v| v.max(0.0).powf(t)).collect(),
    };
    let points: Result<Vec<SweepPoint>> = values
        .par_iter()
        .map(|&m| {
            let sigma = rule.sigma(m);
            let problem = ProblemSpec {
                f: DataDesc::DistPower { coef: 1.0, sigma },
                ..template.clone()
            };
            let r = -sigma + t * (1.0 - gamma);
            let est = compatibility_integral_with_exponent(&problem, grid, &u0, Some(r))?;
            let verdict = CompatibilityVerdict {
                t,
                boundary_exponent: r,
                analytic_finite: r > -1.0,
                numeric_finite: est.numeric_finite,
                band_exponent: est.band_exponent,
            };
            Ok(sweep_point(&problem, grid, schedule, m, m, Some(verdict)))
        })
        .collect();
    Ok(SweepReport {
        parameter: "m".into(),
        values,
        points: points?,
        predicted_threshold: critical_m(p, gamma),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientConvergence {
    pub epsilons: Vec<f64>,
    /// `seminorm(u_ε − u_{ε_min}) / seminorm(u_{ε_min})` for all but the last level.
    pub ratios: Vec<f64>,
    pub monotone: bool,
}

pub fn gradient_convergence(
    problem: &ProblemSpec,
    grid: &Grid,
    report: &ContinuationReport,
) -> Result<GradientConvergence> {
    let last = report
        .last()
        .ok_or_else(|| Error::InvalidParameter("empty continuation".into()))?;
    let base = seminorm_p(grid, &problem.norm, problem.p, &last.u)?;
    let n = report.steps.len();
    let mut ratios = Vec::with_capacity(n.saturating_sub(1));
    for s in &report.steps[..n - 1] {
        ratios.push(seminorm_p(grid, &problem.norm, problem.p, &s.u.sub(&last.u))? / base);
    }
    Ok(GradientConvergence {
        epsilons: report.steps[..n - 1].iter().map(|s| s.epsilon).collect(),
        monotone: ratios.windows(2).all(|w| w[1] <= w[0]),
        ratios,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyScan {
    pub t: Vec<f64>,
    pub j: Vec<f64>,
    pub argmin: f64,
    pub step: f64,
}

/// `t ↦ J(t·u)` on `n` equispaced points of `[lo, hi]`.
pub fn energy_scan(
    problem: &ProblemSpec,
    grid: &Grid,
    u: &DiscreteField,
    lo: f64,
    hi: f64,
    n: usize,
) -> Result<EnergyScan> {
    if n < 2 || !(hi > lo) {
        return Err(Error::InvalidParameter("scan needs n >= 2 and hi > lo".into()));
    }
    let step = (hi - lo) / (n - 1) as f64;
    let t: Vec<f64> = (0..n).map(|k| lo + step * k as f64).collect();
    let j = t
        .iter()
        .map(|s| energy_j(problem, grid, &u.scaled(*s)))
        .collect::<Result<Vec<f64>>>()?;
    let k = j
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .expect("n >= 2");
    Ok(EnergyScan {
        argmin: t[k],
        t,
        j,
        step,
    })
}

/// One-dimensional problems with known solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Manufactured {
    /// `p = 2, γ = 1, f = π² sin²(πx)`, solution `sin(πx)`.
    Sine,
    /// `p = 4, γ = 2, f = 6(1−2x)²(x(1−x))²`, solution `x(1−x)`.
    Parabola,
}

impl Manufactured {
    pub fn problem(&self, resolution: usize) -> Result<ProblemSpec> {
        use std::f64::consts::PI;
        let (p, gamma) = match self {
            Manufactured::Sine => (2.0, 1.0),
            Manufactured::Parabola => (4.0, 2.0),
        };
        let domain = crate::grid::Domain::unit_interval();
        let f = match self {
            Manufactured::Sine => DataDesc::SinePower {
                coef: PI * PI,
                power: 1.0 + gamma,
            },
            Manufactured::Parabola => {
                let grid = crate::grid::build_grid(domain, &[resolution])?;
                DataDesc::Table {
                    values: (0..grid.n_vertices())
                        .map(|i| {
                            let x = grid.coords(i)[0];
                            2.0 * (p - 1.0)
                                * (1.0 - 2.0 * x).abs().powf(p - 2.0)
                                * (x * (1.0 - x)).powf(gamma)
                        })
                        .collect(),
                }
            }
        };
        Ok(ProblemSpec {
            p,
            gamma,
            theta: 0.0,
            norm: crate::finsler::FinslerSpec::euclidean(1)?,
            f,
            h: DataDesc::zero(),
            domain,
            resolution: vec![resolution],
        })
    }

    pub fn exact(&self, x: f64) -> f64 {
        match self {
            Manufactured::Sine => (std::f64::consts::PI * x).sin(),
            Manufactured::Parabola => x * (1.0 - x),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub case: Manufactured,
    pub epsilon: f64,
    pub resolutions: Vec<usize>,
    pub errors: Vec<f64>,
    /// `error(h) / error(h/2)` for consecutive resolutions.
    pub ratios: Vec<f64>,
}

/// Nodal `L∞` errors of the continuation limit at level `eps` for each resolution.
pub fn convergence_study(case: Manufactured, resolutions: &[usize], eps: f64) -> Result<ConvergenceStudy> {
    let errors = resolutions
        .iter()
        .map(|&n| {
            let problem = case.problem(n)?;
            let grid = problem.grid()?;
            let u = final_field(&problem, &grid, eps)?;
            Ok(grid
                .interior_nodes()
                .map(|i| (u.values[i] - case.exact(grid.coords(i)[0])).abs())
                .fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ConvergenceStudy {
        case,
        epsilon: eps,
        resolutions: resolutions.to_vec(),
        ratios: errors.windows(2).map(|w| w[0] / w[1]).collect(),
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finsler::FinslerSpec;
    use crate::grid::Domain;
    use approx::assert_relative_eq;

    fn unit_problem(gamma: f64, n: usize) -> ProblemSpec {
        ProblemSpec {
            p: 2.0,
            gamma,
            theta: 0.0,
            norm: FinslerSpec::euclidean(1).unwrap(),
            f: DataDesc::Constant { value: 1.0 },
            h: DataDesc::zero(),
            domain: Domain::unit_interval(),
            resolution: vec![n],
        }
    }

    #[test]
    fn existence_examples() {
        let e = predict_existence(2.0, 2.9, f64::INFINITY).unwrap();
        assert!(e.exists);
        assert_eq!(e.threshold, 3.0);
        assert!(!predict_existence(2.0, 3.0, f64::INFINITY).unwrap().exists);
        let e = predict_existence(2.0, 2.0, 2.0).unwrap();
        assert_eq!(e.threshold, 2.0);
        assert!(!e.exists);
        assert!(predict_existence(2.0, 2.0, 1.0).is_err());
        assert!(matches!(predict_existence(2.0, 0.5, 4.0), Err(Error::Hypothesis(_))));
        assert_relative_eq!(critical_m(2.0, 1.8), 2.0 / 1.2, max_relative = 1e-14);
    }

    #[test]
    fn exponent_examples() {
        assert_eq!(barrier_exponent(2.0, 2.0).unwrap(), BarrierExponent::GammaGt1 { eta: 2.0 / 3.0 });
        assert_eq!(
            barrier_exponent(2.0, 1.0).unwrap(),
            BarrierExponent::GammaLe1 { t_min: 0.5, t_max: 1.0 }
        );
        assert!(barrier_exponent(2.0, 3.0).is_err());
    }

    #[test]
    fn s2_scales_with_data() {
        let pr = unit_problem(2.0, 128);
        let g = pr.grid().unwrap();
        let eig = first_eigenpair(&g, &pr.norm, 2.0, 1e-9, 200).unwrap();
        let u = DiscreteField::zeros(&g);
        let a = compute_barrier_constants(&eig, &pr, &g, &u, 0.1, 0.0, None).unwrap();
        let pr2 = ProblemSpec { f: DataDesc::Constant { value: 2.0 }, ..pr.clone() };
        let b = compute_barrier_constants(&eig, &pr2, &g, &u, 0.1, 0.0, None).unwrap();
        assert_relative_eq!(b.s2 / a.s2, 2f64.powf(1.0 / 3.0), max_relative = 1e-12);
        assert_relative_eq!(b.s1 / a.s1, 2f64.powf(1.0 / 3.0), max_relative = 1e-12);
        assert!(a.s1 < a.s2);
        assert!(compute_barrier_constants(&eig, &pr, &g, &u, 1.5 / 128.0, 0.0, None).is_err());
    }

    #[test]
    fn exact_barrier_has_no_lower_violation() {
        let pr = unit_problem(2.0, 64);
        let g = pr.grid().unwrap();
        let eig = first_eigenpair(&g, &pr.norm, 2.0, 1e-9, 200).unwrap();
        let u0 = DiscreteField::zeros(&g);
        let c = compute_barrier_constants(&eig, &pr, &g, &u0, 0.1, 0.0, None).unwrap();
        let u = DiscreteField {
            values: eig.phi1.values.iter().map(|v| c.s1 * v.max(0.0).powf(c.lower_exponent)).collect(),
        };
        let r = barrier_check(&g, &u, &eig.phi1, &c, 0.0, 2.0 * g.h, 4.0 * g.h).unwrap();
        assert_eq!(r.lower_violation_fraction, 0.0);
        assert!(r.consistent);
        let swapped = BarrierConstants { s1: c.s2, s2: c.s1, ..c };
        assert!(!barrier_check(&g, &u, &eig.phi1, &swapped, 0.0, 0.0, 0.0).unwrap().consistent);
    }

    #[test]
    fn comparison_with_itself_is_exact() {
        let pr = unit_problem(2.0, 32);
        let g = pr.grid().unwrap();
        let r = comparison_check(&pr, &pr, &g, 1e-6, 1e-8).unwrap();
        assert_eq!(r.max_violation, 0.0);
        let big = ProblemSpec { f: DataDesc::Constant { value: 2.0 }, ..pr.clone() };
        assert!(comparison_check(&pr, &big, &g, 1e-6, 1e-8).unwrap().pass);
        assert!(matches!(comparison_check(&big, &pr, &g, 1e-6, 1e-8), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn classification_bands() {
        assert_eq!(Classification::from_growth(Some(0.01)), Classification::Bounded);
        assert_eq!(Classification::from_growth(Some(0.1)), Classification::Inconclusive);
        assert_eq!(Classification::from_growth(Some(0.5)), Classification::BlowUp);
        assert_eq!(Classification::from_growth(None), Classification::Failed);
    }

    #[test]
    fn sweep_csv() {
        let pr = unit_problem(1.5, 32);
        let g = pr.grid().unwrap();
        let rep = gamma_sweep(&pr, &g, &[2.5, 1.5], &[1e-2, 1e-3, 1e-4]).unwrap();
        assert_eq!(rep.values, vec![1.5, 2.5]);
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 3);
        assert!(s.starts_with("value,growth_exponent,saturated,predicted_exists"));
    }
}
