// Threshold 2 + 1/(p−1) − p/((p−1)m) for data in L^m, with f = d^{−σ(m)}.
//
// $ cargo run --example summability

use singular_plap::experiments::{critical_m, predict_existence, summability_sweep, SigmaRule};
use singular_plap::finsler::FinslerSpec;
use singular_plap::grid::Domain;
use singular_plap::singular::{geometric_schedule, DataDesc, ProblemSpec};

fn main() -> singular_plap::error::Result<()> {
    for m in [2.0, 4.0, 10.0, 1e9, f64::INFINITY] {
        let e = predict_existence(2.0, 1.8, m)?;
        println!("p=2 gamma=1.8 m={m:e}: threshold {:.6} exists {}", e.threshold, e.exists);
    }
    for gamma in [1.8, 2.8] {
        let problem = ProblemSpec {
            p: 2.0,
            gamma,
            theta: 0.0,
            norm: FinslerSpec::euclidean(1)?,
            f: DataDesc::Constant { value: 1.0 },
            h: DataDesc::zero(),
            domain: Domain::unit_interval(),
            resolution: vec![1024],
        };
        let grid = problem.grid()?;
        let rep = summability_sweep(
            &problem,
            &grid,
            &[1.5, 2.0, 4.0, 8.0],
            SigmaRule { delta: 0.05 },
            &geometric_schedule(1e-2, 1e-8, 0.1),
        )?;
        println!("gamma {gamma}: critical m {:.4}", critical_m(2.0, gamma));
        for pt in &rep.points {
            let c = pt.compatibility.as_ref().expect("set by the m sweep");
            println!(
                "  m {:>4}: predicted {}, compatibility exponent {:.3} finite {} (strip fit {:.3}), growth {:.2e}",
                pt.value, pt.predicted_exists, c.boundary_exponent, c.analytic_finite, c.band_exponent,
                pt.growth_exponent.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
