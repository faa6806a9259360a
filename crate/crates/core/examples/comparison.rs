// Three solver paths reach the same field, and larger data gives a larger solution.
//
// $ cargo run --example comparison

use singular_plap::experiments::{comparison_check, uniqueness_check};
use singular_plap::finsler::FinslerSpec;
use singular_plap::grid::Domain;
use singular_plap::singular::{DataDesc, ProblemSpec};

fn main() -> singular_plap::error::Result<()> {
    let small = ProblemSpec {
        p: 3.0,
        gamma: 1.5,
        theta: 0.5,
        norm: FinslerSpec::diagonal_ellipse(&[2.0, 1.0])?,
        f: DataDesc::Constant { value: 1.0 },
        h: DataDesc::Constant { value: 0.5 },
        domain: Domain::unit_square(),
        resolution: vec![32],
    };
    let large = ProblemSpec {
        f: DataDesc::Constant { value: 2.0 },
        ..small.clone()
    };
    let grid = small.grid()?;
    println!("{:#?}", uniqueness_check(&small, &grid, 1e-6)?);
    println!("{:#?}", comparison_check(&small, &large, &grid, 1e-6, 1e-8)?);
    match comparison_check(&large, &small, &grid, 1e-6, 1e-8) {
        Err(e) => println!("reversed data rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
