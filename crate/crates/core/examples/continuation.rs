// Continuation in epsilon for f = 1 on (0,1), with the gradient-convergence
// diagnostic along the way.
//
// $ cargo run --example continuation -- 2.0

use singular_plap::experiments::gradient_convergence;
use singular_plap::finsler::FinslerSpec;
use singular_plap::grid::Domain;
use singular_plap::singular::{default_schedule, solve_continuation, DataDesc, ProblemSpec};

fn main() -> singular_plap::error::Result<()> {
    let gamma: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let problem = ProblemSpec {
        p: 2.0,
        gamma,
        theta: 0.0,
        norm: FinslerSpec::euclidean(1)?,
        f: DataDesc::Constant { value: 1.0 },
        h: DataDesc::zero(),
        domain: Domain::unit_interval(),
        resolution: vec![512],
    };
    let grid = problem.grid()?;
    let rep = solve_continuation(&problem, &grid, &default_schedule())?;
    println!("epsilon     seminorm    newton  min u");
    for s in &rep.steps {
        println!("{:<10.1e}  {:.8}  {:>6}  {:.3e}", s.epsilon, s.seminorm, s.newton_iters, s.min_u_interior);
    }
    println!("saturated {}, growth exponent {:?}", rep.saturation_flag, rep.growth_exponent);
    let gc = gradient_convergence(&problem, &grid, &rep)?;
    println!("relative distance to the last level: {:?}", gc.ratios);
    Ok(())
}
