//! Penalizing only the control gradient does not cure the Simpson scheme:
//! a large weight smooths u_h but biases it, a small one leaves the
//! oscillation. Regularizing both weights fixes it.

use elliptic_ocp::study::{self, StudyOptions};
use elliptic_ocp::{ManufacturedProblem, ProblemName, SchemeName, SchemeSpec};

fn main() -> elliptic_ocp::Result<()> {
    let p = ManufacturedProblem::make(ProblemName::Ex2);
    let o = StudyOptions::default();
    let gammas = [0.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
    println!("  gamma    osc. index   max|u_h|   |u - u_h|");
    for e in study::gamma_sweep(SchemeName::DO2Simp, &p, 40, &gammas, &o)? {
        println!(
            "{:8.0e}   {:9.5}   {:8.3}   {:.3e}",
            e.gamma,
            e.osc_index,
            e.max_abs_u,
            e.err_u.unwrap_or(f64::NAN)
        );
    }
    let reg = study::solve_problem(&SchemeSpec::new(SchemeName::DO2SimpReg, p.alpha())?, &p, 40, &o)?;
    println!(
        "do2-simp-reg  osc. index {:.2e}   max|u_h| {:.3}   (exact max|u| = 10)",
        study::oscillation_index(&reg.u),
        reg.u.norm_inf()
    );
    Ok(())
}
