//! Convergence studies, oscillation measures and audits.

use crate::error::{OcpError, Result};
use crate::fmt::sci;
use crate::grid::{max_abs, Dim, Grid, GridData, GridFunction};
use crate::linsolve::{self, SolveConfig, SolveStats};
use crate::operators::{self, MassBase};
use crate::problems::{Field, ManufacturedProblem, ProblemName};
use crate::schemes::{self, SchemeData, SchemeName, SchemeSolution, SchemeSpec, SystemForm, DENSE_LIMIT};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StudyOptions {
    pub solve: SolveConfig,
    pub form: SystemForm,
    /// Run mesh cells on the rayon pool.
    pub parallel: bool,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            solve: SolveConfig::default(),
            form: SystemForm::Full,
            parallel: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MeshResult {
    pub n: usize,
    pub h: f64,
    pub err_z: f64,
    pub err_u: f64,
    pub err_p: f64,
    pub order_z: Option<f64>,
    pub order_u: Option<f64>,
    pub order_p: Option<f64>,
    pub osc_index: f64,
    pub stats: SolveStats,
    pub solve_ms: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Verdict {
    /// Least-squares slope of `log ‖e_u‖_∞` against `log h`.
    ConvergentOrder(f64),
    NonConvergent,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub scheme: SchemeSpec,
    pub problem: ProblemName,
    pub rows: Vec<MeshResult>,
    pub verdict: Verdict,
}

/// `log(e_prev / e_cur) / log(h_prev / h_cur)`.
pub fn observed_order(e_prev: f64, e_cur: f64, n_prev: usize, n_cur: usize) -> f64 {
    (e_prev / e_cur).ln() / (n_cur as f64 / n_prev as f64).ln()
}

fn verdict(rows: &[MeshResult]) -> Verdict {
    let (first, last) = (&rows[0], &rows[rows.len() - 1]);
    if !(first.err_u >= 2.0 * last.err_u) {
        return Verdict::NonConvergent;
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.h.ln(), r.err_u.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Verdict::ConvergentOrder(sxy / sxx)
}

fn problem_grid(problem: &ManufacturedProblem, n: usize) -> Result<Grid> {
    Grid::new(problem.dim(), n)
}

/// Solves `spec` for `problem` on the `n` grid.
pub fn solve_problem(
    spec: &SchemeSpec,
    problem: &ManufacturedProblem,
    n: usize,
    options: &StudyOptions,
) -> Result<SchemeSolution> {
    let grid = problem_grid(problem, n)?;
    let data = problem.data_on_grid(grid)?;
    schemes::solve_scheme(spec, grid, &data, &options.solve, options.form)
}

fn cell(spec: &SchemeSpec, problem: &ManufacturedProblem, n: usize, options: &StudyOptions) -> Result<MeshResult> {
    let grid = problem_grid(problem, n)?;
    let exact = |f| problem.exact_on_grid(f, grid);
    let (z, u, p) = (exact(Field::Z)?, exact(Field::U)?, exact(Field::P)?);
    let start = Instant::now();
    let sol = solve_problem(spec, problem, n, options)?;
    let solve_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(MeshResult {
        n,
        h: grid.h(),
        err_z: sol.z.sub(&z)?.norm_inf(),
        err_u: sol.u.sub(&u)?.norm_inf(),
        err_p: sol.p.sub(&p)?.norm_inf(),
        order_z: None,
        order_u: None,
        order_p: None,
        osc_index: oscillation_index(&sol.u),
        stats: sol.stats,
        solve_ms,
    })
}

/// Errors in the max norm against the exact solution on each mesh.
pub fn run_convergence(
    spec: &SchemeSpec,
    problem: &ManufacturedProblem,
    meshes: &[usize],
    options: &StudyOptions,
) -> Result<ConvergenceReport> {
    if meshes.is_empty() {
        return Err(OcpError::Precondition("mesh list is empty".into()));
    }
    if meshes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(OcpError::Precondition("meshes must be strictly ascending".into()));
    }
    if !problem.has_exact() {
        return Err(OcpError::NoExactSolution(problem.name().to_string()));
    }
    let mut rows: Vec<MeshResult> = if options.parallel {
        meshes
            .par_iter()
            .map(|&n| cell(spec, problem, n, options))
            .collect::<Result<_>>()?
    } else {
        meshes
            .iter()
            .map(|&n| cell(spec, problem, n, options))
            .collect::<Result<_>>()?
    };
    for i in 1..rows.len() {
        let (a, b) = (&rows[i - 1], &rows[i]);
        let o = |ea, eb| Some(observed_order(ea, eb, a.n, b.n));
        let (oz, ou, op) = (o(a.err_z, b.err_z), o(a.err_u, b.err_u), o(a.err_p, b.err_p));
        rows[i].order_z = oz;
        rows[i].order_u = ou;
        rows[i].order_p = op;
    }
    let verdict = verdict(&rows);
    Ok(ConvergenceReport {
        scheme: *spec,
        problem: problem.name(),
        rows,
        verdict,
    })
}

/// Quarter of the sine spectrum counted as high frequency: `4k >= 3n`.
fn is_high(k: usize, n: usize) -> bool {
    4 * k >= 3 * n
}

fn spectral_fraction(u: &GridFunction, dirichlet_weight: bool) -> f64 {
    let grid = u.grid();
    let n = grid.n();
    let m = grid.m();
    let c = linsolve::sine_coefficients(u);
    let w = |k: usize| {
        if dirichlet_weight {
            (k as f64 * std::f64::consts::PI / (2.0 * n as f64)).sin().powi(2)
        } else {
            1.0
        }
    };
    let (mut hi, mut total) = (0.0, 0.0);
    for (q, ck) in c.iter().enumerate() {
        let (kx, ky) = match grid.dim() {
            Dim::One => (q + 1, 0),
            Dim::Two => (q % m + 1, q / m + 1),
        };
        let e = match grid.dim() {
            Dim::One => ck * ck * w(kx),
            Dim::Two if dirichlet_weight => ck * ck * (w(kx) + w(ky)),
            Dim::Two => ck * ck,
        };
        total += e;
        if is_high(kx, n) || (grid.dim() == Dim::Two && is_high(ky, n)) {
            hi += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        hi / total
    }
}

/// Share of the discrete Dirichlet energy `(u, -Δ_h u)` carried by sine
/// modes in the top quarter of frequencies along either axis.
///
/// Each mode's energy is its squared sine coefficient times its `-Δ_h`
/// eigenvalue, so a smooth field modulated by a grid-scale pattern counts
/// as oscillatory even when most of its plain `l²` mass sits in the low
/// modes. 0 for the zero field.
pub fn oscillation_index(u: &GridFunction) -> f64 {
    spectral_fraction(u, true)
}

/// Share of the plain `l²` energy in the top quarter of sine frequencies.
pub fn spectral_energy_fraction(u: &GridFunction) -> f64 {
    spectral_fraction(u, false)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepEntry {
    pub gamma: f64,
    #[serde(skip)]
    pub z: GridFunction,
    #[serde(skip)]
    pub u: GridFunction,
    pub osc_index: f64,
    pub max_abs_u: f64,
    /// `‖u_h - u‖_∞`, when an exact control exists.
    pub err_u: Option<f64>,
    pub stats: SolveStats,
}

/// Solves `base` with the control-only penalty `γ‖∇_h u‖²` for each `γ`.
pub fn gamma_sweep(
    base: SchemeName,
    problem: &ManufacturedProblem,
    n: usize,
    gammas: &[f64],
    options: &StudyOptions,
) -> Result<Vec<SweepEntry>> {
    if gammas.is_empty() {
        return Err(OcpError::Precondition("gamma list is empty".into()));
    }
    let grid = problem_grid(problem, n)?;
    let exact_u = problem.exact_on_grid(Field::U, grid).ok();
    let run = |&gamma: &f64| -> Result<SweepEntry> {
        let spec = SchemeSpec::new(base, problem.alpha())?.with_control_penalty(gamma)?;
        let sol = solve_problem(&spec, problem, n, options)?;
        let err_u = match &exact_u {
            Some(e) => Some(sol.u.sub(e)?.norm_inf()),
            None => None,
        };
        Ok(SweepEntry {
            gamma,
            osc_index: oscillation_index(&sol.u),
            max_abs_u: sol.u.norm_inf(),
            err_u,
            z: sol.z,
            u: sol.u,
            stats: sol.stats,
        })
    };
    if options.parallel {
        gammas.par_iter().map(run).collect()
    } else {
        gammas.iter().map(run).collect()
    }
}

/// Pairs whose `(z, u)` coincide by elimination of `p`.
pub const EQUIVALENT_PAIRS: [(SchemeName, SchemeName); 3] = [
    (SchemeName::DO4Trap, SchemeName::OD4),
    (SchemeName::DO2TrapReg, SchemeName::OD2),
    (SchemeName::DO4TrapReg, SchemeName::OD4),
];

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EquivalenceReport {
    pub a: SchemeName,
    pub b: SchemeName,
    pub n: usize,
    pub dz: f64,
    pub du: f64,
    pub dp: f64,
    /// `‖p_a - α u_a‖_∞`.
    pub adjoint_gap_a: f64,
    /// `‖p_b - α u_b‖_∞`.
    pub adjoint_gap_b: f64,
}

pub fn equivalence_audit(
    a: SchemeName,
    b: SchemeName,
    problem: &ManufacturedProblem,
    n: usize,
    options: &StudyOptions,
) -> Result<EquivalenceReport> {
    let grid = problem_grid(problem, n)?;
    let data = problem.data_on_grid(grid)?;
    equivalence_audit_with_data(a, b, problem.alpha(), grid, &data, options)
}

pub fn equivalence_audit_with_data(
    a: SchemeName,
    b: SchemeName,
    alpha: f64,
    grid: Grid,
    data: &SchemeData,
    options: &StudyOptions,
) -> Result<EquivalenceReport> {
    let sa = schemes::solve_scheme(&SchemeSpec::new(a, alpha)?, grid, data, &options.solve, options.form)?;
    let sb = schemes::solve_scheme(&SchemeSpec::new(b, alpha)?, grid, data, &options.solve, options.form)?;
    Ok(EquivalenceReport {
        a,
        b,
        n: grid.n(),
        dz: sa.z.sub(&sb.z)?.norm_inf(),
        du: sa.u.sub(&sb.u)?.norm_inf(),
        dp: sa.p.sub(&sb.p)?.norm_inf(),
        adjoint_gap_a: sa.p.sub(&sa.u.scale(alpha))?.norm_inf(),
        adjoint_gap_b: sb.p.sub(&sb.u.scale(alpha))?.norm_inf(),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct StabilityReport {
    pub alpha: f64,
    pub n: usize,
    pub sigma_min: f64,
    /// `min(1/α, 1)`.
    pub bound: f64,
}

/// Smallest singular value of `[[I/α, Δ_h], [-Δ_h, I]]` by dense SVD.
pub fn stability_audit(alpha: f64, n: usize) -> Result<StabilityReport> {
    if !(alpha > 0.0) {
        return Err(OcpError::NonPositiveAlpha(alpha));
    }
    if n > DENSE_LIMIT {
        return Err(OcpError::DenseLimit { n, limit: DENSE_LIMIT });
    }
    let grid = Grid::two_d(n)?;
    let k = grid.interior_count();
    let lap = operators::laplacian_5pt(grid);
    let id = operators::identity(grid);
    let a = id.scale(1.0 / alpha);
    let neg = lap.neg();
    let l = crate::sparse::CsrMatrix::from_blocks(
        &[
            vec![Some(a.matrix()), Some(lap.matrix())],
            vec![Some(neg.matrix()), Some(id.matrix())],
        ],
        &[k, k],
        &[k, k],
    )?;
    let sv = l
        .to_faer_dense()
        .singular_values()
        .map_err(|e| OcpError::Precondition(format!("SVD failed: {e:?}")))?;
    Ok(StabilityReport {
        alpha,
        n,
        sigma_min: sv.last().copied().unwrap_or(0.0),
        bound: (1.0 / alpha).min(1.0),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TruncationRow {
    pub n: usize,
    /// Second-order state residual `-Δ_h z - u - f` at exact samples.
    pub f: f64,
    /// Second-order adjoint residual `-Δ_h p + z - g`.
    pub g: f64,
    /// Compact state residual `F_h z - R_h u - R_h f`.
    pub h: f64,
    /// Compact adjoint residual `F_h p + R_h z - R_h g`.
    pub s: f64,
    pub orders: Option<[f64; 4]>,
}

/// Discrete `l²` norms of the optimality-system residuals at exact samples.
pub fn truncation_audit(problem: &ManufacturedProblem, meshes: &[usize]) -> Result<Vec<TruncationRow>> {
    let mut rows: Vec<TruncationRow> = Vec::with_capacity(meshes.len());
    for &n in meshes {
        let grid = problem_grid(problem, n)?;
        let data = problem.data_on_grid(grid)?;
        let ex = |f| problem.exact_on_grid(f, grid);
        let (z, u, p) = (ex(Field::Z)?, ex(Field::U)?, ex(Field::P)?);
        let lap = operators::laplacian_5pt(grid);
        let f_op = operators::compact_f(grid);
        let r = operators::compact_r(grid);
        let (fi, gi) = (data.f.interior(), data.g.interior());
        let res_f = lap.apply(&z)?.scale(-1.0).sub(&u)?.sub(&fi)?;
        let res_g = lap.apply(&p)?.scale(-1.0).add(&z)?.sub(&gi)?;
        let res_h = f_op.apply(&z)?.sub(&r.apply(&u)?)?.sub(&r.apply_with_boundary(&data.f)?)?;
        let res_s = f_op.apply(&p)?.add(&r.apply(&z)?)?.sub(&r.apply_with_boundary(&data.g)?)?;
        let row = TruncationRow {
            n,
            f: res_f.norm_l2(),
            g: res_g.norm_l2(),
            h: res_h.norm_l2(),
            s: res_s.norm_l2(),
            orders: None,
        };
        let orders = rows.last().map(|prev| {
            [
                observed_order(prev.f, row.f, prev.n, n),
                observed_order(prev.g, row.g, prev.n, n),
                observed_order(prev.h, row.h, prev.n, n),
                observed_order(prev.s, row.s, prev.n, n),
            ]
        });
        rows.push(TruncationRow { orders, ..row });
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EmbeddingRow {
    pub n: usize,
    /// Largest `‖v‖_∞ / ‖Δ_h v‖` over the samples.
    pub max_ratio_laplacian: f64,
    /// Largest `‖v‖_∞ / ‖F_h v‖`.
    pub max_ratio_compact: f64,
}

/// Embedding ratios over random grid functions vanishing on the boundary.
///
/// Half of the samples are uniform noise, half are random combinations of
/// the lowest sine modes (the fields that make the ratio largest).
pub fn embedding_audit(meshes: &[usize], samples: usize, seed: u64) -> Result<Vec<EmbeddingRow>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for &n in meshes {
        let grid = Grid::two_d(n)?;
        let lap = operators::laplacian_5pt(grid);
        let f = operators::compact_f(grid);
        let (mut rl, mut rf) = (0.0f64, 0.0f64);
        for s in 0..samples {
            let v = if s % 2 == 0 {
                GridFunction::new(grid, (0..grid.interior_count()).map(|_| rng.random_range(-1.0..1.0)).collect())?
            } else {
                let coef: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
                GridFunction::sample(grid, |x, y| {
                    let mut acc = 0.0;
                    for a in 0..3 {
                        for b in 0..3 {
                            let (ka, kb) = ((a + 1) as f64, (b + 1) as f64);
                            acc += coef[3 * a + b]
                                * (ka * std::f64::consts::PI * x).sin()
                                * (kb * std::f64::consts::PI * y).sin();
                        }
                    }
                    acc
                })?
            };
            let vi = v.norm_inf();
            rl = rl.max(vi / lap.apply(&v)?.norm_l2());
            rf = rf.max(vi / f.apply(&v)?.norm_l2());
        }
        out.push(EmbeddingRow {
            n,
            max_ratio_laplacian: rl,
            max_ratio_compact: rf,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub n: usize,
    /// Max absolute entry of the tested difference.
    pub value: f64,
    /// Max absolute entry of the products involved.
    pub scale: f64,
    pub passed: bool,
}

/// Commutativity and symmetry identities of the operator algebra on the
/// `n × n` grid, with `γ = 1`.
pub fn identity_suite(n: usize) -> Result<Vec<IdentityCheck>> {
    let grid = Grid::two_d(n)?;
    let lap = operators::laplacian_5pt(grid);
    let f = operators::compact_f(grid);
    let r = operators::compact_r(grid);
    let q = operators::simpson_q(grid)?;
    let m = operators::reg_mass(MassBase::Identity, 1.0, grid)?;
    let mut out = Vec::new();
    let mut commute = |name: &str, a: &crate::DiscreteOperator, b: &crate::DiscreteOperator| -> Result<()> {
        let value = operators::check_commute(a, b)?;
        let scale = a.matrix().matmul(b.matrix())?.max_abs();
        out.push(IdentityCheck {
            name: name.to_string(),
            n,
            value,
            scale,
            passed: value <= 1e-12 * scale,
        });
        Ok(())
    };
    commute("F R = R F", &f, &r)?;
    commute("Δ(I - γΔ) = (I - γΔ)Δ", &lap, &m)?;
    commute("F(I - γΔ) = (I - γΔ)F", &f, &m)?;
    commute("R(I - γΔ) = (I - γΔ)R", &r, &m)?;
    let ql = q.matrix().matmul(lap.matrix())?;
    let lq = lap.matrix().matmul(q.matrix())?;
    let value = ql.transpose().max_abs_diff(&lq)?;
    let scale = ql.max_abs();
    out.push(IdentityCheck {
        name: "(QΔ)ᵀ = ΔQ".into(),
        n,
        value,
        scale,
        passed: value <= 1e-12 * scale,
    });
    let value = ql.max_abs_diff(&lq)?;
    out.push(IdentityCheck {
        name: "QΔ ≠ ΔQ".into(),
        n,
        value,
        scale,
        passed: value > 0.0,
    });
    for (name, op) in [("Δ", &lap), ("F", &f), ("R", &r), ("Q", &q), ("I - γΔ", &m)] {
        let mx = op.matrix();
        let value = mx.max_abs_diff(&mx.transpose())?;
        out.push(IdentityCheck {
            name: format!("{name} symmetric"),
            n,
            value,
            scale: mx.max_abs(),
            passed: value == 0.0,
        });
    }
    Ok(out)
}

/// Nodes whose `5 × 5` neighbourhood lies on one side of every jump of the
/// target; the whole grid for problems with a smooth target.
pub fn smooth_target_mask(problem: ProblemName, grid: Grid) -> Vec<bool> {
    if problem != ProblemName::Ex4 || grid.dim() != Dim::Two {
        return vec![true; grid.interior_count()];
    }
    let n = grid.n() as f64;
    let m = grid.m() as i64;
    let inside = |i: i64, j: i64| {
        let (x, y) = (i as f64 / n, j as f64 / n);
        (x - 0.5).abs() >= 0.25 && (y - 0.5).abs() >= 0.25
    };
    (0..grid.interior_count())
        .map(|k| {
            let (i, j) = grid.node(k);
            let c = inside(i as i64, j as i64);
            (-2..=2).all(|di: i64| {
                (-2..=2).all(|dj: i64| {
                    let ii = (i as i64 + di).clamp(1, m);
                    let jj = (j as i64 + dj).clamp(1, m);
                    inside(ii, jj) == c
                })
            })
        })
        .collect()
}

/// `‖z_h - g_h‖_∞` over the nodes where the target is smooth.
pub fn tracking_gap(problem: ProblemName, z: &GridFunction, g: &GridData) -> Result<f64> {
    let grid = z.grid();
    let diff = z.sub(&g.interior())?;
    let mask = smooth_target_mask(problem, grid);
    let vals: Vec<f64> = diff.values().iter().zip(&mask).filter(|(_, &m)| m).map(|(v, _)| *v).collect();
    Ok(max_abs(&vals))
}

fn mesh_label(n: usize) -> String {
    format!("1/{n}")
}

/// Markdown table with one `Error | Order` column pair per report.
pub fn markdown_table(reports: &[ConvergenceReport]) -> String {
    let mut s = String::new();
    let _ = write!(s, "| h |");
    for r in reports {
        let _ = write!(s, " {} Error | Order |", r.scheme.name);
    }
    s.push('\n');
    s.push_str("|---|");
    for _ in reports {
        s.push_str("---|---|");
    }
    s.push('\n');
    let rows = reports.iter().map(|r| r.rows.len()).max().unwrap_or(0);
    for i in 0..rows {
        let n = reports.iter().find_map(|r| r.rows.get(i).map(|m| m.n)).unwrap_or(0);
        let _ = write!(s, "| {} |", mesh_label(n));
        for r in reports {
            match r.rows.get(i) {
                Some(m) => {
                    let order = match (m.order_u, r.verdict) {
                        (Some(o), Verdict::ConvergentOrder(_)) => format!("{o:.2}"),
                        _ => "--".into(),
                    };
                    let _ = write!(s, " {} | {} |", sci(m.err_u, 1), order);
                }
                None => s.push_str(" | |"),
            }
        }
        s.push('\n');
    }
    s
}

pub const CSV_HEADER: &str = "scheme,problem,n,h,err_z,err_u,err_p,order_u,osc_index,solve_ms,residual";

/// Report rows as CSV. `solve_ms` is written as 0 unless `timings` is set,
/// so identical runs give identical files.
pub fn report_csv(reports: &[ConvergenceReport], timings: bool) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in reports {
        for m in &r.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.scheme.name,
                r.problem,
                m.n,
                sci(m.h, 6),
                sci(m.err_z, 6),
                sci(m.err_u, 6),
                sci(m.err_p, 6),
                m.order_u.map(|o| sci(o, 6)).unwrap_or_default(),
                sci(m.osc_index, 6),
                sci(if timings { m.solve_ms } else { 0.0 }, 6),
                sci(m.stats.final_relative_residual, 6),
            );
        }
    }
    s
}
