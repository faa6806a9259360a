// Structural constants of a few norms and the flux inequalities they imply.
//
// $ cargo run --example norm_checks

use singular_plap::finsler::{check_assumptions, verify_vector_inequalities, FinslerSpec};

fn main() -> singular_plap::error::Result<()> {
    let norms = [
        ("euclidean", FinslerSpec::euclidean(2)?),
        ("ellipse diag(4,1)", FinslerSpec::diagonal_ellipse(&[4.0, 1.0])?),
        ("smoothed q=4", FinslerSpec::smoothed_q(2, 4.0, 0.0)?),
    ];
    for (name, norm) in &norms {
        let a = check_assumptions(norm, 10_000, 42)?;
        println!(
            "{name:>18}: alpha {:.4} beta {:.4} tangential convexity {:.4}",
            a.alpha_emp, a.beta_emp, a.min_tangential_hessian
        );
        for p in [1.5, 2.0, 3.0] {
            let r = verify_vector_inequalities(norm, p, 20_000, 42)?;
            println!(
                "{:>18}  p={p}: c_mono {:.3e} c_lip {:.3e} c_conv {:.3e}",
                "", r.c_mono, r.c_lip, r.c_conv
            );
        }
    }
    Ok(())
}
