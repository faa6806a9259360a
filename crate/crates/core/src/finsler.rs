//! Finsler norms `H` on ℝᴺ and the calculus built on them.
//!
//! Three families are provided: the Euclidean norm, ellipse norms
//! `H(ξ) = sqrt(ξᵀAξ)` for a symmetric positive definite `A`, and a smoothed
//! ℓ^q family `H(ξ) = (Σᵢ (ξᵢ² + δ²)^{q/2})^{1/q} − N^{1/q}δ`. All three are
//! even, positive away from the origin and C² away from it. The smoothed
//! family with `δ > 0` is only asymptotically 1-homogeneous and is flagged
//! through [`FinslerSpec::approximate_homogeneous`].
//!
//! The p-flux `a(ξ) = H^{p−1}(ξ)∇H(ξ)` is the gradient of `H^p/p`; its
//! Jacobian drives the Newton solvers in the rest of the crate.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite-difference step (relative) used for Hessians in assumption checks.
pub const HESSIAN_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub enum NormKind {
    Euclidean,
    /// Row-major SPD matrix together with the square roots of its extreme
    /// eigenvalues (the sharp equivalence constants with |ξ|).
    Ellipse {
        a: Vec<f64>,
        alpha: f64,
        beta: f64,
    },
    SmoothedQ {
        q: f64,
        delta: f64,
    },
}

/// An admissible Finsler norm on ℝᴺ. Immutable once constructed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(try_from = "RawNorm", into = "RawNorm")]
pub struct FinslerSpec {
    kind: NormKind,
    dim: usize,
}

/// JSON layout: `{"kind": "euclidean"|"ellipse"|"smoothed_q", "dim": n, "A": [...], "q": .., "delta": ..}`.
#[derive(Debug, Clone, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
struct RawNorm {
    #[schemars(regex(pattern = "^(euclidean|ellipse|smoothed_q)$"))]
    kind: String,
    dim: usize,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
}

impl TryFrom<RawNorm> for FinslerSpec {
    type Error = Error;

    fn try_from(raw: RawNorm) -> Result<Self> {
        match raw.kind.as_str() {
            "euclidean" => FinslerSpec::euclidean(raw.dim),
            "ellipse" => {
                let a = raw
                    .a
                    .ok_or_else(|| Error::InvalidNorm("ellipse norm requires \"A\"".into()))?;
                FinslerSpec::ellipse(raw.dim, a)
            }
            "smoothed_q" => {
                let q = raw
                    .q
                    .ok_or_else(|| Error::InvalidNorm("smoothed_q norm requires \"q\"".into()))?;
                FinslerSpec::smoothed_q(raw.dim, q, raw.delta.unwrap_or(0.0))
            }
            other => Err(Error::InvalidNorm(format!("unknown norm kind {other:?}"))),
        }
    }
}

impl From<FinslerSpec> for RawNorm {
    fn from(spec: FinslerSpec) -> Self {
        let dim = spec.dim;
        match spec.kind {
            NormKind::Euclidean => RawNorm {
                kind: "euclidean".into(),
                dim,
                a: None,
                q: None,
                delta: None,
            },
            NormKind::Ellipse { a, .. } => RawNorm {
                kind: "ellipse".into(),
                dim,
                a: Some(a),
                q: None,
                delta: None,
            },
            NormKind::SmoothedQ { q, delta } => RawNorm {
                kind: "smoothed_q".into(),
                dim,
                a: None,
                q: Some(q),
                delta: Some(delta),
            },
        }
    }
}

impl FinslerSpec {
    pub fn euclidean(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            kind: NormKind::Euclidean,
            dim,
        })
    }

    /// Ellipse norm `sqrt(ξᵀAξ)`; `a` is row-major and must be symmetric positive definite.
    pub fn ellipse(dim: usize, a: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        if a.len() != dim * dim {
            return Err(Error::InvalidNorm(format!(
                "matrix has {} entries, expected {}",
                a.len(),
                dim * dim
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidNorm("matrix has non-finite entries".into()));
        }
        let m = DMatrix::from_row_slice(dim, dim, &a);
        let asym = (&m - m.transpose()).abs().max();
        if asym > 1e-12 * m.abs().max().max(1.0) {
            return Err(Error::InvalidNorm("matrix is not symmetric".into()));
        }
        let eig = SymmetricEigen::new(m);
        let lo = eig.eigenvalues.min();
        let hi = eig.eigenvalues.max();
        if lo <= 0.0 {
            return Err(Error::InvalidNorm("matrix is not positive definite".into()));
        }
        Ok(Self {
            kind: NormKind::Ellipse {
                a,
                alpha: lo.sqrt(),
                beta: hi.sqrt(),
            },
            dim,
        })
    }

    pub fn diagonal_ellipse(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut a = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            a[i * n + i] = *d;
        }
        Self::ellipse(n, a)
    }

    pub fn smoothed_q(dim: usize, q: f64, delta: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::InvalidNorm(format!("q must lie in (1, inf), got {q}")));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidNorm(format!("delta must be >= 0, got {delta}")));
        }
        Ok(Self {
            kind: NormKind::SmoothedQ { q, delta },
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    /// True for families whose 1-homogeneity only holds asymptotically.
    pub fn approximate_homogeneous(&self) -> bool {
        matches!(self.kind, NormKind::SmoothedQ { delta, .. } if delta > 0.0)
    }

    /// Closed-form constants `α, β` with `α|ξ| ≤ H(ξ) ≤ β|ξ|`, where known.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        match &self.kind {
            NormKind::Euclidean => Some((1.0, 1.0)),
            NormKind::Ellipse { alpha, beta, .. } => Some((*alpha, *beta)),
            NormKind::SmoothedQ { q, delta } if *delta == 0.0 => {
                let r = (self.dim as f64).powf(1.0 / q - 0.5);
                Some(if *q >= 2.0 { (r, 1.0) } else { (1.0, r) })
            }
            NormKind::SmoothedQ { .. } => None,
        }
    }

    fn check(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: xi.len(),
            });
        }
        Ok(())
    }

    /// `H(ξ)`.
    pub fn evaluate(&self, xi: &[f64]) -> Result<f64> {
        self.check(xi)?;
        Ok(self.value(xi))
    }

    /// `∇H(ξ)` for `ξ ≠ 0`.
    pub fn gradient(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.check(xi)?;
        if is_zero(xi) {
            return Err(Error::SingularPoint);
        }
        let mut g = vec![0.0; self.dim];
        self.gradient_into(xi, &mut g);
        Ok(g)
    }

    /// `D²H(ξ)` in closed form, row-major, for `ξ ≠ 0`.
    pub fn hessian(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.check(xi)?;
        if is_zero(xi) {
            return Err(Error::SingularPoint);
        }
        let mut h = vec![0.0; self.dim * self.dim];
        self.hessian_into(xi, &mut h);
        Ok(h)
    }

    /// The p-flux `a(ξ) = H^{p−1}(ξ)∇H(ξ)`, extended by `a(0) = 0`.
    pub fn flux(&self, p: f64, xi: &[f64]) -> Result<Vec<f64>> {
        check_p(p)?;
        self.check(xi)?;
        let mut out = vec![0.0; self.dim];
        self.flux_into(p, xi, &mut out);
        Ok(out)
    }

    /// Jacobian of the p-flux, `D²(H^p/p)(ξ) = H^{p−1}D²H + (p−1)H^{p−2}∇H⊗∇H`, for `ξ ≠ 0`.
    pub fn flux_jacobian(&self, p: f64, xi: &[f64]) -> Result<Vec<f64>> {
        check_p(p)?;
        self.check(xi)?;
        if is_zero(xi) {
            return Err(Error::SingularPoint);
        }
        let mut out = vec![0.0; self.dim * self.dim];
        let mut scratch = vec![0.0; self.dim];
        self.flux_jacobian_into(p, xi, &mut out, &mut scratch);
        Ok(out)
    }

    pub(crate) fn value(&self, xi: &[f64]) -> f64 {
        match &self.kind {
            NormKind::Euclidean => norm2(xi),
            NormKind::Ellipse { a, .. } => quad_form(a, xi, self.dim).max(0.0).sqrt(),
            NormKind::SmoothedQ { q, delta } => {
                let d2 = delta * delta;
                let s: f64 = xi.iter().map(|x| (x * x + d2).powf(q / 2.0)).sum();
                let offset = (self.dim as f64).powf(1.0 / q) * delta;
                (s.powf(1.0 / q) - offset).max(0.0)
            }
        }
    }

    /// Caller guarantees `ξ ≠ 0`.
    pub(crate) fn gradient_into(&self, xi: &[f64], out: &mut [f64]) {
        match &self.kind {
            NormKind::Euclidean => {
                let r = norm2(xi);
                for (o, x) in out.iter_mut().zip(xi) {
                    *o = x / r;
                }
            }
            NormKind::Ellipse { a, .. } => {
                let n = self.dim;
                let h = quad_form(a, xi, n).sqrt();
                for i in 0..n {
                    out[i] = (0..n).map(|j| a[i * n + j] * xi[j]).sum::<f64>() / h;
                }
            }
            NormKind::SmoothedQ { q, delta } => {
                let d2 = delta * delta;
                let s: f64 = xi.iter().map(|x| (x * x + d2).powf(q / 2.0)).sum();
                let pre = s.powf(1.0 / q - 1.0);
                for (o, x) in out.iter_mut().zip(xi) {
                    *o = pre * safe_pow(x * x + d2, q / 2.0 - 1.0) * x;
                }
            }
        }
    }

    /// Caller guarantees `ξ ≠ 0`.
    pub(crate) fn hessian_into(&self, xi: &[f64], out: &mut [f64]) {
        let n = self.dim;
        match &self.kind {
            NormKind::Euclidean => {
                let r = norm2(xi);
                for i in 0..n {
                    for j in 0..n {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        out[i * n + j] = (delta - xi[i] * xi[j] / (r * r)) / r;
                    }
                }
            }
            NormKind::Ellipse { a, .. } => {
                let h = quad_form(a, xi, n).sqrt();
                let ax: Vec<f64> = (0..n)
                    .map(|i| (0..n).map(|j| a[i * n + j] * xi[j]).sum())
                    .collect();
                for i in 0..n {
                    for j in 0..n {
                        out[i * n + j] = (a[i * n + j] - ax[i] * ax[j] / (h * h)) / h;
                    }
                }
            }
            NormKind::SmoothedQ { q, delta } => {
                let d2 = delta * delta;
                let s: f64 = xi.iter().map(|x| (x * x + d2).powf(q / 2.0)).sum();
                let g: Vec<f64> = xi
                    .iter()
                    .map(|x| safe_pow(x * x + d2, q / 2.0 - 1.0) * x)
                    .collect();
                let outer = (1.0 - q) * s.powf(1.0 / q - 2.0);
                let diag = s.powf(1.0 / q - 1.0);
                for i in 0..n {
                    for j in 0..n {
                        out[i * n + j] = outer * g[i] * g[j];
                    }
                    let si = xi[i] * xi[i] + d2;
                    out[i * n + i] +=
                        diag * safe_pow(si, q / 2.0 - 2.0) * (si + (q - 2.0) * xi[i] * xi[i]);
                }
            }
        }
    }

    pub(crate) fn flux_into(&self, p: f64, xi: &[f64], out: &mut [f64]) {
        if is_zero(xi) {
            out.fill(0.0);
            return;
        }
        let h = self.value(xi);
        self.gradient_into(xi, out);
        let s = h.powf(p - 1.0);
        for o in out.iter_mut() {
            *o *= s;
        }
    }

    /// Caller guarantees `ξ ≠ 0`; `grad` is scratch of length `dim`.
    pub(crate) fn flux_jacobian_into(&self, p: f64, xi: &[f64], out: &mut [f64], grad: &mut [f64]) {
        self.weighted_jacobian_into(p, p - 1.0, xi, out, grad);
    }

    /// The flux Jacobian with the radial factor `p − 1` replaced by `radial`.
    /// `radial = 1` gives the Kačanov matrix `H^{p−2} ∇²(H²/2)`.
    pub(crate) fn weighted_jacobian_into(&self, p: f64, radial: f64, xi: &[f64], out: &mut [f64], grad: &mut [f64]) {
        let n = self.dim;
        let h = self.value(xi);
        self.gradient_into(xi, grad);
        self.hessian_into(xi, out);
        let a = h.powf(p - 1.0);
        let b = radial * h.powf(p - 2.0);
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = a * out[i * n + j] + b * grad[i] * grad[j];
            }
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidNorm("dimension must be positive".into()));
    }
    Ok(())
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must exceed 1, got {p}")));
    }
    Ok(())
}

fn safe_pow(base: f64, e: f64) -> f64 {
    if base == 0.0 {
        if e > 0.0 {
            0.0
        } else if e == 0.0 {
            1.0
        } else {
            f64::MAX.sqrt()
        }
    } else {
        base.powf(e)
    }
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn is_zero(x: &[f64]) -> bool {
    x.iter().all(|v| *v == 0.0)
}

fn quad_form(a: &[f64], x: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += x[i] * a[i * n + j] * x[j];
        }
    }
    s
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sample_gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn sample_unit_sphere(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v = sample_gaussian(rng, n);
        let r = norm2(&v);
        if r > 1e-8 {
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}

/// Empirical structural constants of a norm sampled on the Euclidean unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub alpha_emp: f64,
    pub beta_emp: f64,
    /// Minimum of `ζᵀD²H(ξ)ζ/|ζ|²` over `ζ ⊥ ∇H(ξ)`; the empirical uniform-convexity constant.
    pub min_tangential_hessian: f64,
    pub evenness_defect: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Central-difference Hessian of `H` built from the analytic gradient.
fn fd_hessian(norm: &FinslerSpec, xi: &[f64]) -> DMatrix<f64> {
    let n = norm.dim();
    let step = HESSIAN_FD_STEP * norm2(xi);
    let mut hess = DMatrix::zeros(n, n);
    let mut xp = xi.to_vec();
    let mut xm = xi.to_vec();
    let mut gp = vec![0.0; n];
    let mut gm = vec![0.0; n];
    for j in 0..n {
        xp[j] = xi[j] + step;
        xm[j] = xi[j] - step;
        norm.gradient_into(&xp, &mut gp);
        norm.gradient_into(&xm, &mut gm);
        for i in 0..n {
            hess[(i, j)] = (gp[i] - gm[i]) / (2.0 * step);
        }
        xp[j] = xi[j];
        xm[j] = xi[j];
    }
    (&hess + hess.transpose()) * 0.5
}

/// Minimum eigenvalue of `D²H(ξ)` restricted to the hyperplane `∇H(ξ)^⊥`.
fn min_tangential_eigenvalue(hess: &DMatrix<f64>, normal: &[f64]) -> f64 {
    let n = normal.len();
    if n == 1 {
        return f64::INFINITY;
    }
    let nv = DVector::from_column_slice(normal).normalize();
    // Orthonormal basis of the complement by Gram–Schmidt on the coordinate axes.
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n - 1);
    for k in 0..n {
        let mut v = DVector::zeros(n);
        v[k] = 1.0;
        v -= &nv * nv.dot(&v);
        for b in &basis {
            v -= b * b.dot(&v);
        }
        let r = v.norm();
        if r > 1e-8 {
            basis.push(v / r);
        }
        if basis.len() == n - 1 {
            break;
        }
    }
    let b = DMatrix::from_columns(&basis);
    let restricted = b.transpose() * hess * &b;
    SymmetricEigen::new(restricted).eigenvalues.min()
}

/// Samples the unit sphere and estimates the structural constants of `norm`.
pub fn check_assumptions(norm: &FinslerSpec, n_samples: usize, seed: u64) -> Result<AssumptionReport> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be >= 1".into()));
    }
    let n = norm.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut alpha = f64::INFINITY;
    let mut beta = 0.0f64;
    let mut min_tan = f64::INFINITY;
    let mut even = 0.0f64;
    let mut grad = vec![0.0; n];
    for _ in 0..n_samples {
        let xi = sample_unit_sphere(&mut rng, n);
        let h = norm.value(&xi);
        alpha = alpha.min(h);
        beta = beta.max(h);
        let neg: Vec<f64> = xi.iter().map(|x| -x).collect();
        even = even.max((h - norm.value(&neg)).abs());
        norm.gradient_into(&xi, &mut grad);
        let hess = fd_hessian(norm, &xi);
        min_tan = min_tan.min(min_tangential_eigenvalue(&hess, &grad));
    }
    Ok(AssumptionReport {
        alpha_emp: alpha,
        beta_emp: beta,
        min_tangential_hessian: min_tan,
        evenness_defect: even,
        n_samples,
        seed,
    })
}

/// Empirical constants of the monotonicity, Lipschitz and convexity inequalities
/// satisfied by the p-flux.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub p: f64,
    /// `min [a(η)−a(η′)]·(η−η′) / ((|η|+|η′|)^{p−2}|η−η′|²)`.
    pub c_mono: f64,
    /// `max |a(η)−a(η′)| / ((|η|+|η′|)^{p−2}|η−η′|)`.
    pub c_lip: f64,
    /// Minimum ratio of the convexity gap
    /// `H^p(η) − H^p(η′) − p H^{p−1}(η′)∇H(η′)·(η−η′)` to `H^p(η−η′)` (p ≥ 2)
    /// or to `[H(η)+H(η′)]^{p−2}H²(η−η′)` (p < 2).
    pub c_conv: f64,
    /// Smallest raw monotonicity gap observed.
    pub min_mono_gap: f64,
    /// Smallest raw convexity gap observed.
    pub min_conv_gap: f64,
    pub n_pairs: usize,
    pub n_skipped: usize,
    pub seed: u64,
}

impl InequalityReport {
    pub fn all_positive(&self) -> bool {
        self.c_mono > 0.0 && self.c_conv > 0.0 && self.c_lip.is_finite()
    }
}

fn sample_scaled(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    // one vector in ten is the origin; the rest span four decades in magnitude
    if rng.random::<f64>() < 0.1 {
        return vec![0.0; n];
    }
    let scale = 10f64.powf(rng.random_range(-2.0..2.0));
    sample_gaussian(rng, n).into_iter().map(|x| x * scale).collect()
}

/// Samples pairs `(η, η′)` and records the extreme ratios of each flux inequality.
pub fn verify_vector_inequalities(
    norm: &FinslerSpec,
    p: f64,
    n_pairs: usize,
    seed: u64,
) -> Result<InequalityReport> {
    check_p(p)?;
    if n_pairs == 0 {
        return Err(Error::InvalidParameter("n_pairs must be >= 1".into()));
    }
    let n = norm.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a1 = vec![0.0; n];
    let mut a2 = vec![0.0; n];
    let mut diff = vec![0.0; n];
    let mut report = InequalityReport {
        p,
        c_mono: f64::INFINITY,
        c_lip: 0.0,
        c_conv: f64::INFINITY,
        min_mono_gap: f64::INFINITY,
        min_conv_gap: f64::INFINITY,
        n_pairs,
        n_skipped: 0,
        seed,
    };
    for _ in 0..n_pairs {
        let eta = sample_scaled(&mut rng, n);
        let etap = sample_scaled(&mut rng, n);
        for k in 0..n {
            diff[k] = eta[k] - etap[k];
        }
        let dn = norm2(&diff);
        let sum_norms = norm2(&eta) + norm2(&etap);
        if dn == 0.0 || sum_norms == 0.0 {
            report.n_skipped += 1;
            continue;
        }
        norm.flux_into(p, &eta, &mut a1);
        norm.flux_into(p, &etap, &mut a2);
        let da: Vec<f64> = a1.iter().zip(&a2).map(|(x, y)| x - y).collect();
        let kernel = sum_norms.powf(p - 2.0);
        let mono = dot(&da, &diff);
        report.min_mono_gap = report.min_mono_gap.min(mono);
        report.c_mono = report.c_mono.min(mono / (kernel * dn * dn));
        report.c_lip = report.c_lip.max(norm2(&da) / (kernel * dn));

        let h = norm.value(&eta);
        let hp = norm.value(&etap);
        // p H^{p-1}(η')∇H(η') = p a(η')
        let conv = h.powf(p) - hp.powf(p) - p * dot(&a2, &diff);
        let hd = norm.value(&diff);
        let denom = if p >= 2.0 {
            hd.powf(p)
        } else {
            (h + hp).powf(p - 2.0) * hd * hd
        };
        report.min_conv_gap = report.min_conv_gap.min(conv);
        report.c_conv = report.c_conv.min(conv / denom);
    }
    Ok(report)
}
