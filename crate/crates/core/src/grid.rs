//! Structured P1 discretization of intervals and rectangles.
//!
//! Rectangles are split into `nx × ny` cells, each cut into two triangles
//! along the diagonal from its lower-left to its upper-right corner. Vertex
//! `(i, j)` has index `j * (nx + 1) + i`. Gradients of piecewise-linear fields
//! are constant per cell, so the p-Dirichlet energy `(1/p)∫H^p(∇u)` is
//! integrated exactly; zeroth-order terms use the lumped (nodal) rule.

use std::io::Write;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finsler::{check_p, FinslerSpec};

/// Gradients smaller than this are lifted to this magnitude when linearizing the flux.
pub const GRADIENT_CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    Interval { length: f64 },
    Rectangle { lx: f64, ly: f64 },
}

impl Domain {
    pub fn unit_interval() -> Self {
        Domain::Interval { length: 1.0 }
    }

    pub fn unit_square() -> Self {
        Domain::Rectangle { lx: 1.0, ly: 1.0 }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Rectangle { .. } => 2,
        }
    }

    pub fn measure(&self) -> f64 {
        match *self {
            Domain::Interval { length } => length,
            Domain::Rectangle { lx, ly } => lx * ly,
        }
    }

    /// Exact Euclidean distance from `x` to the boundary.
    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        match *self {
            Domain::Interval { length } => x[0].min(length - x[0]).max(0.0),
            Domain::Rectangle { lx, ly } => x[0].min(lx - x[0]).min(x[1]).min(ly - x[1]).max(0.0),
        }
    }

    /// Corner points of the domain (empty for intervals, whose boundary is two points).
    pub fn corners(&self) -> Vec<[f64; 2]> {
        match *self {
            Domain::Interval { .. } => Vec::new(),
            Domain::Rectangle { lx, ly } => vec![[0.0, 0.0], [lx, 0.0], [lx, ly], [0.0, ly]],
        }
    }

    fn extents(&self) -> Vec<f64> {
        match *self {
            Domain::Interval { length } => vec![length],
            Domain::Rectangle { lx, ly } => vec![lx, ly],
        }
    }
}

/// A simplex of the triangulation with its precomputed geometry.
#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    /// Vertex indices; only the first `dim + 1` are meaningful.
    pub nodes: [usize; 3],
    pub measure: f64,
    /// Gradients of the hat functions of `nodes`, constant on the cell.
    #[serde(skip)]
    pub grads: [[f64; 2]; 3],
}

#[derive(Debug, Clone, Serialize)]
pub struct Grid {
    pub domain: Domain,
    pub resolution: Vec<usize>,
    pub vertices: Vec<[f64; 2]>,
    pub cells: Vec<Cell>,
    pub boundary_mask: Vec<bool>,
    /// Maximum cell diameter.
    pub h: f64,
}

/// Builds the structured triangulation of `domain` with `resolution[k]` cells along axis `k`.
pub fn build_grid(domain: Domain, resolution: &[usize]) -> Result<Grid> {
    let dim = domain.dim();
    let extents = domain.extents();
    if extents.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidGrid("domain lengths must be positive".into()));
    }
    let res: Vec<usize> = match resolution.len() {
        1 => vec![resolution[0]; dim],
        n if n == dim => resolution.to_vec(),
        n => {
            return Err(Error::InvalidGrid(format!(
                "resolution has {n} entries for a {dim}-dimensional domain"
            )))
        }
    };
    if res.iter().any(|&r| r == 0) {
        return Err(Error::InvalidGrid("resolution must be at least 1 per axis".into()));
    }
    match domain {
        Domain::Interval { length } => Ok(build_interval(domain, length, res[0])),
        Domain::Rectangle { lx, ly } => Ok(build_rectangle(domain, lx, ly, res[0], res[1])),
    }
}

fn build_interval(domain: Domain, length: f64, n: usize) -> Grid {
    let dx = length / n as f64;
    let vertices: Vec<[f64; 2]> = (0..=n).map(|i| [i as f64 * dx, 0.0]).collect();
    let mut boundary_mask = vec![false; n + 1];
    boundary_mask[0] = true;
    boundary_mask[n] = true;
    let cells = (0..n)
        .map(|i| Cell {
            nodes: [i, i + 1, usize::MAX],
            measure: dx,
            grads: [[-1.0 / dx, 0.0], [1.0 / dx, 0.0], [0.0, 0.0]],
        })
        .collect();
    Grid {
        domain,
        resolution: vec![n],
        vertices,
        cells,
        boundary_mask,
        h: dx,
    }
}

fn build_rectangle(domain: Domain, lx: f64, ly: f64, nx: usize, ny: usize) -> Grid {
    let dx = lx / nx as f64;
    let dy = ly / ny as f64;
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut boundary_mask = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([i as f64 * dx, j as f64 * dy]);
            boundary_mask.push(i == 0 || j == 0 || i == nx || j == ny);
        }
    }
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let v00 = idx(i, j);
            let v10 = idx(i + 1, j);
            let v11 = idx(i + 1, j + 1);
            let v01 = idx(i, j + 1);
            for nodes in [[v00, v10, v11], [v00, v11, v01]] {
                cells.push(triangle(&vertices, nodes));
            }
        }
    }
    Grid {
        domain,
        resolution: vec![nx, ny],
        vertices,
        cells,
        boundary_mask,
        h: (dx * dx + dy * dy).sqrt(),
    }
}

fn triangle(vertices: &[[f64; 2]], nodes: [usize; 3]) -> Cell {
    let [a, b, c] = nodes.map(|n| vertices[n]);
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    // ∇λ_k is the rotated opposite edge divided by twice the signed area
    let grads = [
        [(b[1] - c[1]) / det, (c[0] - b[0]) / det],
        [(c[1] - a[1]) / det, (a[0] - c[0]) / det],
        [(a[1] - b[1]) / det, (b[0] - a[0]) / det],
    ];
    Cell {
        nodes,
        measure: 0.5 * det.abs(),
        grads,
    }
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Smallest edge length along the coordinate axes.
    pub fn min_spacing(&self) -> f64 {
        self.domain
            .extents()
            .iter()
            .zip(&self.resolution)
            .map(|(l, n)| l / *n as f64)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Number of vertices per cell.
    pub fn cell_size(&self) -> usize {
        self.dim() + 1
    }

    pub fn measure(&self) -> f64 {
        self.domain.measure()
    }

    pub fn coords(&self, i: usize) -> &[f64] {
        &self.vertices[i][..self.dim()]
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_vertices()).filter(|&i| !self.boundary_mask[i])
    }

    pub fn n_interior(&self) -> usize {
        self.boundary_mask.iter().filter(|b| !**b).count()
    }

    /// Constant gradient of `values` on `cell`.
    pub fn cell_gradient(&self, cell: &Cell, values: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for k in 0..self.cell_size() {
            let v = values[cell.nodes[k]];
            g[0] += v * cell.grads[k][0];
            g[1] += v * cell.grads[k][1];
        }
        g
    }

    pub(crate) fn check_field(&self, u: &DiscreteField) -> Result<()> {
        if u.values.len() != self.n_vertices() {
            return Err(Error::MismatchedGrid {
                expected: self.n_vertices(),
                got: u.values.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_norm(&self, norm: &FinslerSpec) -> Result<()> {
        if norm.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: norm.dim(),
            });
        }
        Ok(())
    }

    /// Writes the grid structure as JSON.
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

/// Nodal values of a piecewise-linear function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    pub values: Vec<f64>,
}

impl DiscreteField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_vertices() {
            return Err(Error::MismatchedGrid {
                expected: grid.n_vertices(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("field has non-finite entries".into()));
        }
        Ok(Self { values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            values: vec![0.0; grid.n_vertices()],
        }
    }

    /// Nodal interpolant of `f`, including boundary nodes.
    pub fn interpolate(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        Self {
            values: (0..grid.n_vertices()).map(|i| f(grid.coords(i))).collect(),
        }
    }

    /// Nodal interpolant of `f` with the homogeneous Dirichlet datum imposed.
    pub fn interpolate_dirichlet(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut field = Self::interpolate(grid, f);
        field.zero_boundary(grid);
        field
    }

    pub fn zero_boundary(&mut self, grid: &Grid) {
        for (v, b) in self.values.iter_mut().zip(&grid.boundary_mask) {
            if *b {
                *v = 0.0;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * t).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min_interior(&self, grid: &Grid) -> f64 {
        grid.interior_nodes()
            .map(|i| self.values[i])
            .fold(f64::INFINITY, f64::min)
    }

    /// Writes `x[,y],value` rows with a header line.
    pub fn write_csv<W: Write>(&self, grid: &Grid, mut w: W) -> Result<()> {
        if grid.dim() == 1 {
            writeln!(w, "x,value")?;
        } else {
            writeln!(w, "x,y,value")?;
        }
        for (i, v) in self.values.iter().enumerate() {
            let c = grid.coords(i);
            if grid.dim() == 1 {
                writeln!(w, "{},{}", c[0], v)?;
            } else {
                writeln!(w, "{},{},{}", c[0], c[1], v)?;
            }
        }
        Ok(())
    }
}

/// Lumped nodal quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn integrate(&self, values: impl IntoIterator<Item = f64>) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// `w_i = Σ_{T ∋ i} |T| / (d + 1)`.
pub fn lumped_mass(grid: &Grid) -> QuadratureRule {
    let mut weights = vec![0.0; grid.n_vertices()];
    let k = grid.cell_size();
    for cell in &grid.cells {
        let share = cell.measure / k as f64;
        for &n in &cell.nodes[..k] {
            weights[n] += share;
        }
    }
    QuadratureRule { weights }
}

/// `(1/p) Σ_T |T| H^p(∇u|_T)`.
pub fn energy(grid: &Grid, norm: &FinslerSpec, p: f64, u: &DiscreteField) -> Result<f64> {
    Ok(seminorm_p_pow(grid, norm, p, u)? / p)
}

fn seminorm_p_pow(grid: &Grid, norm: &FinslerSpec, p: f64, u: &DiscreteField) -> Result<f64> {
    check_p(p)?;
    grid.check_field(u)?;
    grid.check_norm(norm)?;
    let d = grid.dim();
    Ok(grid
        .cells
        .iter()
        .map(|c| {
            let g = grid.cell_gradient(c, &u.values);
            c.measure * norm.value(&g[..d]).powf(p)
        })
        .sum())
}

/// Gradient of [`energy`] with respect to the nodal values; boundary entries are zero.
pub fn energy_gradient(
    grid: &Grid,
    norm: &FinslerSpec,
    p: f64,
    u: &DiscreteField,
) -> Result<DiscreteField> {
    check_p(p)?;
    grid.check_field(u)?;
    grid.check_norm(norm)?;
    let d = grid.dim();
    let k = grid.cell_size();
    let mut out = vec![0.0; grid.n_vertices()];
    let mut flux = [0.0; 2];
    for c in &grid.cells {
        let g = grid.cell_gradient(c, &u.values);
        norm.flux_into(p, &g[..d], &mut flux[..d]);
        for a in 0..k {
            let dot: f64 = (0..d).map(|m| flux[m] * c.grads[a][m]).sum();
            out[c.nodes[a]] += c.measure * dot;
        }
    }
    let mut field = DiscreteField { values: out };
    field.zero_boundary(grid);
    Ok(field)
}

/// Visits the entries of the Hessian of [`energy`] cell by cell as
/// `(row, col, value)` over all vertices (boundary included). Cells with
/// `|∇u| < GRADIENT_CLAMP` are linearized at a gradient lifted to that size.
/// Cells with `|∇u| < kacanov_below` get the radial factor 1 in place of `p − 1`.
pub(crate) fn for_each_hessian_entry(
    grid: &Grid,
    norm: &FinslerSpec,
    p: f64,
    u: &[f64],
    kacanov_below: f64,
    mut visit: impl FnMut(usize, usize, f64),
) {
    let d = grid.dim();
    let k = grid.cell_size();
    let clamp = GRADIENT_CLAMP;
    let mut jac = [0.0; 4];
    let mut scratch = [0.0; 2];
    for c in &grid.cells {
        let mut g = grid.cell_gradient(c, u);
        let r = (g[0] * g[0] + g[1] * g[1]).sqrt();
        let radial = if r < kacanov_below { 1.0 } else { p - 1.0 };
        if r < clamp {
            if r == 0.0 {
                g = [clamp, 0.0];
            } else {
                g = [g[0] * clamp / r, g[1] * clamp / r];
            }
        }
        norm.weighted_jacobian_into(p, radial, &g[..d], &mut jac[..d * d], &mut scratch[..d]);
        for a in 0..k {
            for b in 0..k {
                let mut s = 0.0;
                for m in 0..d {
                    for n in 0..d {
                        s += c.grads[a][m] * jac[m * d + n] * c.grads[b][n];
                    }
                }
                visit(c.nodes[a], c.nodes[b], c.measure * s);
            }
        }
    }
}

/// `(Σ_T |T| H^p(∇u|_T))^{1/p}`.
pub fn seminorm_p(grid: &Grid, norm: &FinslerSpec, p: f64, u: &DiscreteField) -> Result<f64> {
    Ok(seminorm_p_pow(grid, norm, p, u)?.powf(1.0 / p))
}

/// `(Σ_i w_i |u_i|^p)^{1/p}`.
pub fn lp_norm(grid: &Grid, quad: &QuadratureRule, p: f64, u: &DiscreteField) -> Result<f64> {
    check_p(p)?;
    grid.check_field(u)?;
    Ok(quad
        .integrate(u.values.iter().map(|v| v.abs().powf(p)))
        .powf(1.0 / p))
}

/// Nodal distance to the boundary.
pub fn distance_field(grid: &Grid) -> DiscreteField {
    DiscreteField::interpolate(grid, |x| grid.domain.distance_to_boundary(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: &Grid, rng: &mut ChaCha8Rng) -> DiscreteField {
        let mut f = DiscreteField {
            values: (0..grid.n_vertices()).map(|_| rng.random_range(-1.0..1.0)).collect(),
        };
        f.zero_boundary(grid);
        f
    }

    #[test]
    fn build_examples() {
        let g = build_grid(Domain::unit_square(), &[2]).unwrap();
        assert_eq!(g.n_vertices(), 9);
        assert_eq!(g.cells.len(), 8);
        assert_eq!(g.n_interior(), 1);
        let i = build_grid(Domain::unit_interval(), &[4]).unwrap();
        assert_eq!(i.n_vertices(), 5);
        assert_eq!(i.cells.len(), 4);
        assert_eq!(i.h, 0.25);
        assert!(build_grid(Domain::unit_interval(), &[0]).is_err());
        assert!(build_grid(Domain::Interval { length: -1.0 }, &[3]).is_err());
        assert!(build_grid(Domain::unit_square(), &[3, 0]).is_err());
    }

    #[test]
    fn cells_tile_the_domain() {
        let g = build_grid(Domain::Rectangle { lx: 2.0, ly: 0.5 }, &[7, 3]).unwrap();
        let total: f64 = g.cells.iter().map(|c| c.measure).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-14);
        assert!(g.cells.iter().all(|c| c.measure > 0.0));
        for (i, b) in g.boundary_mask.iter().enumerate() {
            let d = g.domain.distance_to_boundary(g.coords(i));
            assert_eq!(*b, d.abs() < 1e-14);
        }
    }

    #[test]
    fn hat_gradients_sum_to_zero_and_reproduce_linears() {
        let g = build_grid(Domain::unit_square(), &[3]).unwrap();
        let u = DiscreteField::interpolate(&g, |x| 2.0 * x[0] - 3.0 * x[1] + 1.0);
        for c in &g.cells {
            let s: f64 = c.grads.iter().map(|v| v[0] + v[1]).sum();
            assert!(s.abs() < 1e-12);
            let grad = g.cell_gradient(c, &u.values);
            assert_relative_eq!(grad[0], 2.0, epsilon = 1e-12);
            assert_relative_eq!(grad[1], -3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn energy_examples() {
        let e1 = FinslerSpec::euclidean(1).unwrap();
        let g1 = build_grid(Domain::unit_interval(), &[8]).unwrap();
        assert_eq!(energy(&g1, &e1, 2.0, &DiscreteField::zeros(&g1)).unwrap(), 0.0);
        let x = DiscreteField::interpolate(&g1, |x| x[0]);
        assert_relative_eq!(energy(&g1, &e1, 2.0, &x).unwrap(), 0.5, epsilon = 1e-14);
        assert_relative_eq!(seminorm_p(&g1, &e1, 3.0, &x).unwrap(), 1.0, epsilon = 1e-14);

        let el = FinslerSpec::diagonal_ellipse(&[4.0, 1.0]).unwrap();
        let g2 = build_grid(Domain::unit_square(), &[5]).unwrap();
        let x2 = DiscreteField::interpolate(&g2, |x| x[0]);
        assert_relative_eq!(energy(&g2, &el, 2.0, &x2).unwrap(), 2.0, epsilon = 1e-13);

        let e2 = FinslerSpec::euclidean(2).unwrap();
        assert!(energy(&g2, &e2, 2.0, &x).is_err());
        assert!(energy(&g2, &e1, 2.0, &x2).is_err());
    }

    #[test]
    fn seminorm_relates_to_energy() {
        let g = build_grid(Domain::unit_square(), &[6]).unwrap();
        let norm = FinslerSpec::ellipse(2, vec![2.0, 0.3, 0.3, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_field(&g, &mut rng);
        for p in [1.5, 2.0, 3.5] {
            let s = seminorm_p(&g, &norm, p, &u).unwrap();
            let e = energy(&g, &norm, p, &u).unwrap();
            assert_relative_eq!(s.powf(p), p * e, max_relative = 1e-13);
        }
        let quad = lumped_mass(&g);
        let z = DiscreteField::zeros(&g);
        assert_eq!(seminorm_p(&g, &norm, 2.0, &z).unwrap(), 0.0);
        assert_eq!(lp_norm(&g, &quad, 2.0, &z).unwrap(), 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = build_grid(Domain::unit_square(), &[4]).unwrap();
        let norm = FinslerSpec::ellipse(2, vec![2.0, 0.3, 0.3, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in [1.5, 2.0, 3.0] {
            let u = random_field(&g, &mut rng);
            let grad = energy_gradient(&g, &norm, p, &u).unwrap();
            for i in g.interior_nodes() {
                let t = 1e-6;
                let mut up = u.clone();
                let mut um = u.clone();
                up.values[i] += t;
                um.values[i] -= t;
                let fd = (energy(&g, &norm, p, &up).unwrap() - energy(&g, &norm, p, &um).unwrap())
                    / (2.0 * t);
                assert!((fd - grad.values[i]).abs() <= 1e-6 * grad.values[i].abs().max(1e-3));
            }
        }
        let zero = energy_gradient(&g, &norm, 3.0, &DiscreteField::zeros(&g)).unwrap();
        assert!(zero.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn p2_euclidean_gradient_is_stiffness_action() {
        // five-point stencil: the P1 stiffness on this triangulation
        let n = 6;
        let g = build_grid(Domain::unit_square(), &[n]).unwrap();
        let norm = FinslerSpec::euclidean(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_field(&g, &mut rng);
        let grad = energy_gradient(&g, &norm, 2.0, &u).unwrap();
        let idx = |i: usize, j: usize| j * (n + 1) + i;
        for j in 1..n {
            for i in 1..n {
                let v = &u.values;
                let s = 4.0 * v[idx(i, j)]
                    - v[idx(i - 1, j)]
                    - v[idx(i + 1, j)]
                    - v[idx(i, j - 1)]
                    - v[idx(i, j + 1)];
                assert!((s - grad.values[idx(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let g = build_grid(Domain::unit_square(), &[3]).unwrap();
        let norm = FinslerSpec::smoothed_q(2, 4.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_field(&g, &mut rng);
        let p = 3.0;
        let n = g.n_vertices();
        let mut dense = vec![0.0; n * n];
        for_each_hessian_entry(&g, &norm, p, &u.values, 0.0, |i, j, v| dense[i * n + j] += v);
        for j in g.interior_nodes() {
            let t = 1e-6;
            let mut up = u.clone();
            let mut um = u.clone();
            up.values[j] += t;
            um.values[j] -= t;
            let gp = energy_gradient(&g, &norm, p, &up).unwrap();
            let gm = energy_gradient(&g, &norm, p, &um).unwrap();
            for i in g.interior_nodes() {
                let fd = (gp.values[i] - gm.values[i]) / (2.0 * t);
                assert!((fd - dense[i * n + j]).abs() < 1e-5 * dense[j * n + j].abs());
            }
        }
    }

    #[test]
    fn lumped_weights() {
        let g = build_grid(Domain::unit_interval(), &[10]).unwrap();
        let q = lumped_mass(&g);
        assert_relative_eq!(q.weights[0], 0.05, epsilon = 1e-15);
        assert_relative_eq!(q.weights[5], 0.1, epsilon = 1e-15);
        let sq = build_grid(Domain::unit_square(), &[2]).unwrap();
        let qs = lumped_mass(&sq);
        assert!((qs.total() - 1.0).abs() < 1e-14);
        // corner (0,0) touches both triangles of its cell, each of area 1/8
        assert_relative_eq!(qs.weights[0], 2.0 * 0.125 / 3.0, epsilon = 1e-15);
        // corner (1,0) touches only the lower triangle of its cell
        assert_relative_eq!(qs.weights[2], 0.125 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn distance_examples() {
        let g = build_grid(Domain::unit_interval(), &[10]).unwrap();
        let d = distance_field(&g);
        assert_relative_eq!(d.values[3], 0.3, epsilon = 1e-15);
        assert_eq!(d.values[0], 0.0);
        let s = build_grid(Domain::unit_square(), &[4]).unwrap();
        let ds = distance_field(&s);
        assert_relative_eq!(ds.values[2 * 5 + 2], 0.5, epsilon = 1e-15);
        assert!(s.boundary_mask.iter().zip(&ds.values).all(|(b, v)| !*b || *v == 0.0));
    }

    #[test]
    fn csv_layout() {
        let g = build_grid(Domain::unit_interval(), &[2]).unwrap();
        let f = DiscreteField::interpolate(&g, |x| x[0] * 2.0);
        let mut buf = Vec::new();
        f.write_csv(&g, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,value\n0,0\n0.5,1\n1,2\n");
        let s = build_grid(Domain::unit_square(), &[1]).unwrap();
        let mut buf = Vec::new();
        DiscreteField::zeros(&s).write_csv(&s, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("x,y,value\n0,0,0\n1,0,0\n"));
    }
}
