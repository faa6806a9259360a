// Growth of the seminorm along ε ↓ 0 for several γ, next to the predicted threshold.
//
// $ cargo run --example gamma_sweep -- 1024

use singular_plap::experiments::gamma_sweep;
use singular_plap::finsler::FinslerSpec;
use singular_plap::grid::Domain;
use singular_plap::singular::{default_schedule, DataDesc, ProblemSpec};

fn main() -> singular_plap::error::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1024);
    let problem = ProblemSpec {
        p: 2.0,
        gamma: 1.0,
        theta: 0.0,
        norm: FinslerSpec::euclidean(1)?,
        f: DataDesc::Constant { value: 1.0 },
        h: DataDesc::zero(),
        domain: Domain::unit_interval(),
        resolution: vec![n],
    };
    let grid = problem.grid()?;
    let rep = gamma_sweep(&problem, &grid, &[0.5, 1.5, 2.5, 2.9, 3.1, 3.5, 4.0], &default_schedule())?;
    println!("threshold {}", rep.predicted_threshold);
    rep.write_csv(std::io::stdout().lock())?;
    // the final seminorm still depends on the mesh when γ ≥ 3
    for pt in &rep.points {
        println!("gamma {:>4}: final seminorm {:.4}", pt.gamma, pt.seminorms.last().copied().unwrap_or(f64::NAN));
    }
    Ok(())
}
