// Nodal error against known solutions under mesh halving.
//
// $ cargo run --example manufactured_convergence

use singular_plap::experiments::{convergence_study, Manufactured};

fn main() -> singular_plap::error::Result<()> {
    for case in [Manufactured::Sine, Manufactured::Parabola] {
        let s = convergence_study(case, &[32, 64, 128, 256, 512, 1024], 1e-8)?;
        println!("{case:?}");
        for (n, e) in s.resolutions.iter().zip(&s.errors) {
            println!("  n {n:>5}: max error {e:.3e}");
        }
        println!("  ratios {:?}", s.ratios);
    }
    Ok(())
}
