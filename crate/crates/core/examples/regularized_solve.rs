// One regularized solve of −u'' = π² sin²(πx) / u, whose solution is sin(πx).
//
// $ cargo run --example regularized_solve

use std::f64::consts::PI;

use singular_plap::experiments::Manufactured;
use singular_plap::singular::solve_regularized;

fn main() -> singular_plap::error::Result<()> {
    let problem = Manufactured::Sine.problem(128)?;
    let grid = problem.grid()?;
    let rep = solve_regularized(&problem, &grid, 1e-8, None)?;
    let err = grid
        .interior_nodes()
        .map(|i| (rep.u.values[i] - (PI * grid.coords(i)[0]).sin()).abs())
        .fold(0.0, f64::max);
    println!("{}", serde_json::to_string_pretty(&rep)?);
    println!("max nodal error {err:.3e}");
    rep.u.write_csv(&grid, std::io::stdout().lock())?;
    Ok(())
}
