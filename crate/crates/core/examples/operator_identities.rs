//! Commutators and symmetry of the discrete operators, plus the truncation
//! orders of the 5-point and compact 9-point Laplacians.

use elliptic_ocp::operators;
use elliptic_ocp::study::{self, observed_order};
use elliptic_ocp::{Grid, GridFunction};
use std::f64::consts::PI;

fn main() -> elliptic_ocp::Result<()> {
    for c in study::identity_suite(10)? {
        let tag = if c.passed { "ok " } else { "BAD" };
        println!("{tag} {:<26} {:.2e} (scale {:.2e})", c.name, c.value, c.scale);
    }

    // s = sin(πx) sin(2πy), -Δs = 5π² s
    let s = |x: f64, y: f64| (PI * x).sin() * (2.0 * PI * y).sin();
    let mut prev: Option<(usize, f64, f64)> = None;
    println!("\n   n   |Δs - (Δs)_h|   order   |Fs - R(-Δs)_h|   order");
    for n in [10, 20, 40, 80] {
        let grid = Grid::two_d(n)?;
        let sh = GridFunction::sample(grid, s)?;
        let lap_s = sh.scale(-5.0 * PI * PI);
        let e2 = operators::laplacian_5pt(grid).apply(&sh)?.sub(&lap_s)?.norm_inf();
        let e4 = operators::compact_f(grid)
            .apply(&sh)?
            .sub(&operators::compact_r(grid).apply(&lap_s.scale(-1.0))?)?
            .norm_inf();
        match prev {
            Some((m, a, b)) => println!(
                "{n:4}   {e2:.3e}       {:.2}    {e4:.3e}         {:.2}",
                observed_order(a, e2, m, n),
                observed_order(b, e4, m, n)
            ),
            None => println!("{n:4}   {e2:.3e}        --    {e4:.3e}          --"),
        }
        prev = Some((n, e2, e4));
    }
    Ok(())
}
