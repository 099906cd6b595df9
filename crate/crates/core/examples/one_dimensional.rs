//! The one-dimensional problem: the Simpson failure is not a 2D artifact.

use elliptic_ocp::study::{self, StudyOptions};
use elliptic_ocp::{ManufacturedProblem, ProblemName, SchemeName, SchemeSpec};

fn main() -> elliptic_ocp::Result<()> {
    let p = ManufacturedProblem::make(ProblemName::Ex1);
    use SchemeName::*;
    let reports = [OD2, DO2Trap, DO2Simp, DO2SimpReg, OD4, DO4Simp, DO4SimpReg]
        .iter()
        .map(|&s| {
            study::run_convergence(&SchemeSpec::new(s, p.alpha())?, &p, &[20, 40, 80, 160], &StudyOptions::default())
        })
        .collect::<elliptic_ocp::Result<Vec<_>>>()?;
    print!("{}", study::markdown_table(&reports));
    Ok(())
}
