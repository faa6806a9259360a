//! Interior-dof bookkeeping and symmetric sparse solves.

use nalgebra::DVector;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};

use crate::error::{Error, Result};
use crate::finsler::FinslerSpec;
use crate::grid::{for_each_hessian_entry, Grid};

/// Maps vertices to unknowns; boundary vertices carry no unknown.
#[derive(Debug, Clone)]
pub(crate) struct DofMap {
    pub vertex_to_dof: Vec<Option<usize>>,
    pub dof_to_vertex: Vec<usize>,
}

impl DofMap {
    pub fn interior(grid: &Grid) -> Self {
        let mut vertex_to_dof = vec![None; grid.n_vertices()];
        let mut dof_to_vertex = Vec::with_capacity(grid.n_interior());
        for v in grid.interior_nodes() {
            vertex_to_dof[v] = Some(dof_to_vertex.len());
            dof_to_vertex.push(v);
        }
        Self {
            vertex_to_dof,
            dof_to_vertex,
        }
    }

    pub fn len(&self) -> usize {
        self.dof_to_vertex.len()
    }
}

/// Triplet accumulator for a symmetric matrix over interior dofs.
pub(crate) struct SymAssembler {
    n: usize,
    coo: CooMatrix<f64>,
    diag_max: f64,
}

impl SymAssembler {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            coo: CooMatrix::new(n, n),
            diag_max: 0.0,
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        if i == j {
            self.diag_max = self.diag_max.max(v.abs());
        }
        self.coo.push(i, j, v);
    }

    pub fn diag_max(&self) -> f64 {
        self.diag_max
    }

    /// Solves `(M + shift·I) x = b`, raising `shift` until the Cholesky
    /// factorization succeeds. Returns the solution and the shift used.
    pub fn solve(mut self, rhs: &[f64], shift: f64) -> Result<(Vec<f64>, f64)> {
        let n = self.n;
        for i in 0..n {
            self.coo.push(i, i, 0.0);
        }
        let mut s = shift;
        let floor = 1e-10 * self.diag_max.max(1e-300);
        for _ in 0..40 {
            let mut coo = self.coo.clone();
            if s != 0.0 {
                for i in 0..n {
                    coo.push(i, i, s);
                }
            }
            let m = CscMatrix::from(&coo);
            match CscCholesky::factor(&m) {
                Ok(chol) => {
                    let b = DVector::from_column_slice(rhs);
                    let x = chol.solve(&b);
                    let x: Vec<f64> = x.column(0).iter().copied().collect();
                    if x.iter().all(|v| v.is_finite()) {
                        return Ok((x, s));
                    }
                }
                Err(_) => {}
            }
            s = (10.0 * s).max(floor);
        }
        Err(Error::LinearSolve(format!(
            "matrix of size {n} stayed indefinite after diagonal shifts up to {s:e}"
        )))
    }
}

/// Hessian of the p-Dirichlet energy restricted to interior dofs.
pub(crate) fn assemble_energy_hessian(
    grid: &Grid,
    norm: &FinslerSpec,
    p: f64,
    u: &[f64],
    kacanov_below: f64,
    dofs: &DofMap,
) -> SymAssembler {
    let mut asm = SymAssembler::new(dofs.len());
    for_each_hessian_entry(grid, norm, p, u, kacanov_below, |a, b, v| {
        if let (Some(i), Some(j)) = (dofs.vertex_to_dof[a], dofs.vertex_to_dof[b]) {
            asm.push(i, j, v);
        }
    });
    asm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal() {
        let n = 5;
        let mut a = SymAssembler::new(n);
        for i in 0..n {
            a.push(i, i, 2.0);
            if i + 1 < n {
                a.push(i, i + 1, -1.0);
                a.push(i + 1, i, -1.0);
            }
        }
        let (x, s) = a.solve(&[1.0; 5], 0.0).unwrap();
        assert_eq!(s, 0.0);
        // -x'' = 1 on 6 intervals with h = 1: x_i = i(6-i)/2
        for (i, v) in x.iter().enumerate() {
            let k = (i + 1) as f64;
            assert!((v - k * (6.0 - k) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_matrix_gets_shifted() {
        let mut a = SymAssembler::new(2);
        a.push(0, 0, 1.0);
        a.push(1, 1, -0.5);
        let (x, s) = a.solve(&[1.0, 1.0], 0.0).unwrap();
        assert!(s > 0.5);
        assert!((x[1] - 1.0 / (s - 0.5)).abs() < 1e-9 * x[1].abs());
    }
}
