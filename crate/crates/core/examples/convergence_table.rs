//! Error tables for the four discretize-then-optimize variants of one order.
//!
//!     cargo run --release --example convergence_table -- ex3 4

use elliptic_ocp::study::{self, StudyOptions};
use elliptic_ocp::{ManufacturedProblem, ProblemName, SchemeName, SchemeSpec};

fn main() -> elliptic_ocp::Result<()> {
    let mut args = std::env::args().skip(1);
    let problem: ProblemName = args.next().as_deref().unwrap_or("ex2").parse()?;
    let fourth = args.next().as_deref() == Some("4");
    use SchemeName::*;
    let schemes = if fourth {
        [DO4Trap, DO4TrapReg, DO4Simp, DO4SimpReg]
    } else {
        [DO2Trap, DO2TrapReg, DO2Simp, DO2SimpReg]
    };
    let p = ManufacturedProblem::make(problem);
    let meshes = [20, 40, 60, 80, 100, 200];
    let reports = schemes
        .iter()
        .map(|&s| study::run_convergence(&SchemeSpec::new(s, p.alpha())?, &p, &meshes, &StudyOptions::default()))
        .collect::<elliptic_ocp::Result<Vec<_>>>()?;
    print!("{}", study::markdown_table(&reports));
    for r in &reports {
        println!("{}: {:?}", r.scheme.name, r.verdict);
    }
    Ok(())
}
