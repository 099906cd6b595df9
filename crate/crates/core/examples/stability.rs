//! Smallest singular value of the optimality operator against min(1/α, 1),
//! and empirical constants of the discrete embedding ‖v‖_∞ ≤ C‖Δ_h v‖.

use elliptic_ocp::study;

fn main() -> elliptic_ocp::Result<()> {
    for alpha in [0.01, 0.1, 1.0, 10.0, 100.0] {
        for n in [4, 8, 16] {
            let r = study::stability_audit(alpha, n)?;
            println!("alpha {alpha:6}  n {n:2}  sigma_min {:10.4}  bound {:.2}", r.sigma_min, r.bound);
        }
    }
    println!();
    for r in study::embedding_audit(&[8, 16, 32, 64], 50, 1)? {
        println!(
            "n {:2}  max |v|/|Δv| {:.4}   max |v|/|Fv| {:.4}",
            r.n, r.max_ratio_laplacian, r.max_ratio_compact
        );
    }
    Ok(())
}
