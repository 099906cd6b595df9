//! Sine-transform diagonalization against sparse LU on the reduced
//! optimize-then-discretize system.

use elliptic_ocp::linsolve::{self, SolveConfig, SolveMethod};
use elliptic_ocp::schemes;
use elliptic_ocp::{Field, Grid, ManufacturedProblem, ProblemName, SchemeName, SchemeSpec};
use std::time::Instant;

fn main() -> elliptic_ocp::Result<()> {
    let p = ManufacturedProblem::make(ProblemName::Ex2);
    for n in [40, 80, 160] {
        let grid = Grid::two_d(n)?;
        let data = p.data_on_grid(grid)?;
        let sys = schemes::assemble_reduced(&SchemeSpec::new(SchemeName::OD4, p.alpha())?, grid, &data)?;
        let exact = p.exact_on_grid(Field::U, grid)?;
        for m in [SolveMethod::Direct, SolveMethod::FastDiag, SolveMethod::Krylov] {
            let t = Instant::now();
            let sol = linsolve::solve(&sys, &SolveConfig::with_method(m))?;
            let ms = t.elapsed().as_secs_f64() * 1e3;
            let u = sys.field(&sol.x, Field::U).expect("u");
            println!(
                "n = {n:3}  {:<9} {ms:8.1} ms  iterations {:3}  |u - u_h| {:.3e}",
                m.as_str(),
                sol.stats.iterations,
                u.sub(&exact)?.norm_inf()
            );
        }
    }
    Ok(())
}
