// First eigenpair of the anisotropic p-Laplacian on the unit interval and square.
//
// $ cargo run --example eigenpair

use std::f64::consts::PI;

use singular_plap::eigen::first_eigenpair;
use singular_plap::finsler::FinslerSpec;
use singular_plap::grid::{build_grid, Domain};

fn main() -> singular_plap::error::Result<()> {
    let line = build_grid(Domain::unit_interval(), &[256])?;
    for p in [1.5, 2.0, 3.0] {
        let e = first_eigenpair(&line, &FinslerSpec::euclidean(1)?, p, 1e-10, 300)?;
        println!("interval p={p}: lambda1 = {:.6} ({} iterations)", e.lambda1, e.iterations);
    }
    println!("  (pi^2 = {:.6})", PI * PI);

    let square = build_grid(Domain::unit_square(), &[64])?;
    let iso = first_eigenpair(&square, &FinslerSpec::euclidean(2)?, 2.0, 1e-9, 200)?;
    // H(ξ) = sqrt(4ξ₁² + ξ₂²) stretches the first direction
    let aniso = first_eigenpair(&square, &FinslerSpec::diagonal_ellipse(&[4.0, 1.0])?, 2.0, 1e-9, 200)?;
    println!("square euclidean: {:.4} (2pi^2 = {:.4})", iso.lambda1, 2.0 * PI * PI);
    println!("square diag(4,1): {:.4} (5pi^2 = {:.4})", aniso.lambda1, 5.0 * PI * PI);
    Ok(())
}
