// The solution sits on the natural constraint and minimizes t ↦ J(t u).
//
// $ cargo run --example variational

use singular_plap::experiments::energy_scan;
use singular_plap::finsler::FinslerSpec;
use singular_plap::grid::{energy, Domain};
use singular_plap::singular::{default_schedule, nehari_defect, solve_continuation, DataDesc, ProblemSpec};

fn main() -> singular_plap::error::Result<()> {
    let problem = ProblemSpec {
        p: 2.5,
        gamma: 2.0,
        theta: 0.5,
        norm: FinslerSpec::euclidean(1)?,
        f: DataDesc::Constant { value: 1.0 },
        h: DataDesc::Constant { value: 1.0 },
        domain: Domain::unit_interval(),
        resolution: vec![512],
    };
    let grid = problem.grid()?;
    let u = solve_continuation(&problem, &grid, &default_schedule())?
        .steps
        .pop()
        .expect("nonempty schedule")
        .u;
    let e = energy(&grid, &problem.norm, problem.p, &u)?;
    println!("relative defect {:.2e}", nehari_defect(&problem, &grid, &u)? / (problem.p * e));
    for t in [0.01, 10.0] {
        println!("defect at {t} u: {:.4e}", nehari_defect(&problem, &grid, &u.scaled(t))?);
    }
    let scan = energy_scan(&problem, &grid, &u, 0.5, 2.0, 41)?;
    for (t, j) in scan.t.iter().zip(&scan.j).step_by(5) {
        println!("J({t:.4} u) = {j:.6}");
    }
    println!("argmin {:.4} (step {:.4})", scan.argmin, scan.step);
    Ok(())
}
