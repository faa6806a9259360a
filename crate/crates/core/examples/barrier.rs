// Sandwich s1 φ1^η ≤ u ≤ s2 φ1^η for γ = 2 on the unit square.
//
// $ cargo run --example barrier

use singular_plap::eigen::first_eigenpair;
use singular_plap::experiments::{barrier_check, barrier_exponent, compute_barrier_constants};
use singular_plap::finsler::FinslerSpec;
use singular_plap::grid::Domain;
use singular_plap::singular::{default_schedule, solve_continuation, DataDesc, ProblemSpec};

fn main() -> singular_plap::error::Result<()> {
    let problem = ProblemSpec {
        p: 2.0,
        gamma: 2.0,
        theta: 0.0,
        norm: FinslerSpec::euclidean(2)?,
        f: DataDesc::Constant { value: 1.0 },
        h: DataDesc::zero(),
        domain: Domain::unit_square(),
        resolution: vec![64],
    };
    println!("{:?}", barrier_exponent(problem.p, problem.gamma)?);
    let grid = problem.grid()?;
    let u = solve_continuation(&problem, &grid, &default_schedule())?
        .steps
        .pop()
        .expect("nonempty schedule")
        .u;
    let eig = first_eigenpair(&grid, &problem.norm, problem.p, 1e-9, 200)?;
    let h = grid.h;
    let c = compute_barrier_constants(&eig, &problem, &grid, &u, 0.1, 4.0 * h, None)?;
    let rep = barrier_check(&grid, &u, &eig.phi1, &c, 5.0 * h, 2.0 * h, 4.0 * h)?;
    println!("{}", serde_json::to_string_pretty(&c)?);
    println!("{}", serde_json::to_string_pretty(&rep)?);
    Ok(())
}
