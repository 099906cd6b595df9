//! Pairs of schemes with identical primal solutions, and the filter matrix
//! separating regularized Simpson from the optimize-then-discretize scheme.

use elliptic_ocp::schemes;
use elliptic_ocp::study::{self, StudyOptions};
use elliptic_ocp::{Grid, ManufacturedProblem, ProblemName};

fn main() -> elliptic_ocp::Result<()> {
    let p = ManufacturedProblem::make(ProblemName::Ex2);
    for (a, b) in study::EQUIVALENT_PAIRS {
        let r = study::equivalence_audit(a, b, &p, 40, &StudyOptions::default())?;
        println!(
            "{a:>12} vs {b:<4} |dz| {:.1e}  |du| {:.1e}  |dp| {:.1e}  |p - αu| {:.1e} / {:.1e}",
            r.dz, r.du, r.dp, r.adjoint_gap_a, r.adjoint_gap_b
        );
    }
    println!();
    for n in [8, 16, 32] {
        let grid = Grid::two_d(n)?;
        println!("n = {n:2}  |S_h - I| = {:.3e}", schemes::filter_deviation(grid, 1.0)?);
    }
    Ok(())
}
