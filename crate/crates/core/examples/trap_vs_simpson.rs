//! The same problem discretized with trapezoidal and Simpson weights: the
//! Simpson control is a checkerboard, the trapezoidal one is smooth.
//!
//! Pass an output directory to dump the control fields as CSV.

use elliptic_ocp::study::{self, StudyOptions};
use elliptic_ocp::{Field, Grid, ManufacturedProblem, ProblemName, SchemeName, SchemeSpec};

fn main() -> elliptic_ocp::Result<()> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from);
    let p = ManufacturedProblem::make(ProblemName::Ex2);
    let n = 40;
    let exact = p.exact_on_grid(Field::U, Grid::two_d(n)?)?;
    for name in [SchemeName::DO2Trap, SchemeName::DO2Simp, SchemeName::DO2SimpReg] {
        let sol = study::solve_problem(&SchemeSpec::new(name, p.alpha())?, &p, n, &StudyOptions::default())?;
        println!(
            "{name:<13} |u - u_h| = {:.3e}   max|u_h| = {:8.3}   oscillation index {:.3}",
            sol.u.sub(&exact)?.norm_inf(),
            sol.u.norm_inf(),
            study::oscillation_index(&sol.u)
        );
        if let Some(dir) = &out {
            std::fs::create_dir_all(dir)?;
            sol.u.write_csv(std::fs::File::create(dir.join(format!("u_{name}.csv")))?)?;
        }
    }
    Ok(())
}
