//! Finite-element experiments for `−Δ_p^H u = f u^{−γ} + h u^θ` with zero
//! boundary data, where `Δ_p^H` is the p-Laplacian of a Finsler norm `H`.
//!
//! The singular term is regularized at level `ε` and solved by damped Newton
//! on P1 elements; continuation in `ε` then probes existence, boundary
//! behaviour and uniqueness. See `examples/` for one program per capability.

pub mod cli;
pub mod eigen;
pub mod error;
pub mod experiments;
pub mod finsler;
pub mod grid;
mod linalg;
pub mod singular;
