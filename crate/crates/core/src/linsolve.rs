//! Linear solvers for assembled block systems.
//!
//! * `Direct`: sparse LU (fill-reducing ordering, sequential so results are
//!   bitwise reproducible) followed by a few steps of iterative refinement
//!   if the residual is above tolerance.
//! * `FastDiag`: every block is a polynomial in `A ⊗ I` and `I ⊗ A`, so the
//!   discrete sine transform diagonalizes all of them at once and the
//!   system splits into one small dense solve per sine mode.
//! * `Krylov`: restarted GMRES, right-preconditioned by the fast solver
//!   applied to the nearest sine-diagonal system (`Q_h` replaced by `I_h`).

use crate::error::{OcpError, Result};
use crate::grid::{Dim, Grid, GridFunction};
use crate::operators::{second_difference_eigenvalue, DiscreteOperator, Symbol};
use crate::schemes::KktSystem;
use crate::sparse::CsrMatrix;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::sparse::linalg::lu::{factorize_symbolic_lu, NumericLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat, Par};
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    #[default]
    Direct,
    Krylov,
    FastDiag,
}

impl SolveMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveMethod::Direct => "direct",
            SolveMethod::Krylov => "krylov",
            SolveMethod::FastDiag => "fastdiag",
        }
    }
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for SolveMethod {
    type Err = OcpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "direct" => Ok(SolveMethod::Direct),
            "krylov" | "gmres" => Ok(SolveMethod::Krylov),
            "fastdiag" | "fast-diag" => Ok(SolveMethod::FastDiag),
            _ => Err(OcpError::UnknownName {
                kind: "solver method",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolveConfig {
    pub method: SolveMethod,
    pub rel_residual_tol: f64,
    pub max_iterations: usize,
    /// GMRES restart length.
    pub restart: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            method: SolveMethod::Direct,
            rel_residual_tol: 1e-10,
            max_iterations: 2000,
            restart: 80,
        }
    }
}

impl SolveConfig {
    pub fn with_method(method: SolveMethod) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_residual_tol > 0.0 && self.rel_residual_tol <= 1e-4) {
            return Err(OcpError::Precondition(format!(
                "relative residual tolerance must lie in (0, 1e-4], got {}",
                self.rel_residual_tol
            )));
        }
        if self.restart == 0 {
            return Err(OcpError::Precondition("GMRES restart length must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveStats {
    pub method: SolveMethod,
    pub unknowns: usize,
    /// Refinement steps (direct), Krylov iterations, or 0 (fast solver).
    pub iterations: usize,
    pub final_relative_residual: f64,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub x: Vec<f64>,
    pub stats: SolveStats,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn relative_residual(system: &KktSystem, x: &[f64], bnorm: f64) -> f64 {
    norm2(&system.residual_of(x)) / bnorm
}

/// Solves `system` and checks the residual contract
/// `‖Ax - b‖₂ / ‖b‖₂ <= rel_residual_tol`.
pub fn solve(system: &KktSystem, config: &SolveConfig) -> Result<Solution> {
    config.validate()?;
    let n = system.len();
    let bnorm = norm2(&system.rhs);
    if bnorm == 0.0 {
        if config.method == SolveMethod::FastDiag {
            block_symbols(system, false)?;
        }
        return Ok(Solution {
            x: vec![0.0; n],
            stats: SolveStats {
                method: config.method,
                unknowns: n,
                iterations: 0,
                final_relative_residual: 0.0,
            },
        });
    }
    let (x, iterations) = match config.method {
        SolveMethod::Direct => direct(system, config, bnorm)?,
        SolveMethod::FastDiag => {
            let symbols = block_symbols(system, false)?;
            (fast_diag_solve(system.grid, &symbols, &system.rhs)?, 0)
        }
        SolveMethod::Krylov => krylov(system, config, bnorm)?,
    };
    let res = relative_residual(system, &x, bnorm);
    let stats = SolveStats {
        method: config.method,
        unknowns: n,
        iterations,
        final_relative_residual: res,
    };
    if !res.is_finite() || res > config.rel_residual_tol {
        return Err(OcpError::Solver {
            reason: format!("residual {res:.3e} above tolerance {:.1e}", config.rel_residual_tol),
            stats,
        });
    }
    Ok(Solution { x, stats })
}

fn direct(system: &KktSystem, config: &SolveConfig, bnorm: f64) -> Result<(Vec<f64>, usize)> {
    let a = system.matrix();
    let lu = SparseLu::new(&a).map_err(|reason| OcpError::Solver {
        reason,
        stats: SolveStats {
            method: SolveMethod::Direct,
            unknowns: a.nrows(),
            iterations: 0,
            final_relative_residual: f64::NAN,
        },
    })?;
    let mut x = lu.solve(&system.rhs);
    let mut steps = 0;
    while steps < 5 {
        let r = system.residual_of(&x);
        if norm2(&r) / bnorm <= config.rel_residual_tol {
            break;
        }
        let dx = lu.solve(&r);
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi -= d;
        }
        steps += 1;
    }
    Ok((x, steps))
}

/// Sequential sparse LU factorization of a square matrix.
pub struct SparseLu {
    symbolic: faer::sparse::linalg::lu::SymbolicLu<usize>,
    numeric: NumericLu<usize, f64>,
    n: usize,
}

impl SparseLu {
    pub fn new(a: &CsrMatrix) -> std::result::Result<Self, String> {
        let n = a.nrows();
        let triplets: Vec<Triplet<usize, usize, f64>> = a.triplets().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets).map_err(|e| format!("{e:?}"))?;
        let symbolic = factorize_symbolic_lu(mat.symbolic(), Default::default()).map_err(|e| format!("{e:?}"))?;
        let mut numeric = NumericLu::<usize, f64>::new();
        let par = Par::Seq;
        let mut mem = MemBuffer::new(symbolic.factorize_numeric_lu_scratch::<f64>(par, Default::default()));
        symbolic
            .factorize_numeric_lu(&mut numeric, mat.as_ref(), par, MemStack::new(&mut mem), Default::default())
            .map_err(|e| format!("LU factorization failed: {e:?}"))?;
        Ok(Self { symbolic, numeric, n })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let par = Par::Seq;
        let lu = faer::sparse::linalg::lu::LuRef::new_unchecked(&self.symbolic, &self.numeric);
        let mut mem = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(1, par));
        let mut rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        lu.solve_in_place_with_conj(Conj::No, rhs.as_mut(), par, MemStack::new(&mut mem));
        (0..self.n).map(|i| rhs[(i, 0)]).collect()
    }
}

/// Per-block symbols; `surrogate` allows the nearest sine-diagonal stand-in.
fn block_symbols(system: &KktSystem, surrogate: bool) -> Result<Vec<Vec<Option<Symbol>>>> {
    system
        .blocks
        .iter()
        .map(|row| {
            row.iter()
                .map(|b| match b {
                    None => Ok(None),
                    Some(op) => {
                        let s = if surrogate { op.surrogate() } else { op.symbol() };
                        s.cloned().map(Some).ok_or(OcpError::NotDiagonalizable)
                    }
                })
                .collect()
        })
        .collect()
}

/// Discrete sine transform `S_{kj} = sin(kjπ/n)` on the interior nodes.
struct Dst {
    dim: Dim,
    m: usize,
    n: usize,
    /// Row-major `m × m`, symmetric.
    s: Vec<f64>,
}

impl Dst {
    fn new(grid: Grid) -> Self {
        let n = grid.n();
        let m = n - 1;
        let mut s = vec![0.0; m * m];
        for k in 1..=m {
            for j in 1..=m {
                // reduce k·j mod 2n before scaling to keep the argument small
                let arg = ((k * j) % (2 * n)) as f64 * std::f64::consts::PI / n as f64;
                s[(k - 1) * m + (j - 1)] = arg.sin();
            }
        }
        Self { dim: grid.dim(), m, n, s }
    }

    fn forward(&self, v: &[f64]) -> Vec<f64> {
        let m = self.m;
        match self.dim {
            Dim::One => (0..m)
                .map(|k| self.s[k * m..(k + 1) * m].iter().zip(v).map(|(a, b)| a * b).sum())
                .collect(),
            Dim::Two => {
                // T = V S (x direction), C = S T (y direction)
                let mut t = vec![0.0; m * m];
                for j in 0..m {
                    let trow = &mut t[j * m..(j + 1) * m];
                    for i in 0..m {
                        let vji = v[j * m + i];
                        if vji == 0.0 {
                            continue;
                        }
                        for (tk, sik) in trow.iter_mut().zip(&self.s[i * m..(i + 1) * m]) {
                            *tk += vji * sik;
                        }
                    }
                }
                let mut c = vec![0.0; m * m];
                for l in 0..m {
                    let crow = &mut c[l * m..(l + 1) * m];
                    for j in 0..m {
                        let slj = self.s[l * m + j];
                        for (ck, tjk) in crow.iter_mut().zip(&t[j * m..(j + 1) * m]) {
                            *ck += slj * tjk;
                        }
                    }
                }
                c
            }
        }
    }

    fn inverse(&self, c: &[f64]) -> Vec<f64> {
        let scale = match self.dim {
            Dim::One => 2.0 / self.n as f64,
            Dim::Two => 4.0 / (self.n * self.n) as f64,
        };
        self.forward(c).into_iter().map(|x| x * scale).collect()
    }

    /// Eigenvalue pair `(a_x, a_y)` of mode storage index `q`.
    fn mode(&self, q: usize, lam: &[f64]) -> (f64, f64) {
        match self.dim {
            Dim::One => (lam[q], 0.0),
            Dim::Two => (lam[q % self.m], lam[q / self.m]),
        }
    }
}

/// Coefficients of `v` in the sine basis (unnormalized forward transform).
pub fn sine_coefficients(v: &GridFunction) -> Vec<f64> {
    Dst::new(v.grid()).forward(v.values())
}

/// Solves a block system whose blocks are given by their sine symbols.
pub fn fast_diag_solve(grid: Grid, symbols: &[Vec<Option<Symbol>>], rhs: &[f64]) -> Result<Vec<f64>> {
    let k = symbols.len();
    let nint = grid.interior_count();
    if rhs.len() != k * nint {
        return Err(OcpError::DimensionMismatch {
            expected: k * nint,
            found: rhs.len(),
        });
    }
    let dst = Dst::new(grid);
    let lam: Vec<f64> = (1..grid.n()).map(|i| second_difference_eigenvalue(grid.n(), i)).collect();
    let coeffs: Vec<Vec<f64>> = (0..k).map(|b| dst.forward(&rhs[b * nint..(b + 1) * nint])).collect();
    let mut out = vec![vec![0.0; nint]; k];
    let mut a = vec![0.0; k * k];
    let mut y = vec![0.0; k];
    for q in 0..nint {
        let (ax, ay) = dst.mode(q, &lam);
        for (i, row) in symbols.iter().enumerate() {
            for (j, s) in row.iter().enumerate() {
                a[i * k + j] = s.as_ref().map_or(0.0, |s| s.eval(ax, ay));
            }
            y[i] = coeffs[i][q];
        }
        small_solve(&mut a, &mut y, k)?;
        for b in 0..k {
            out[b][q] = y[b];
        }
    }
    Ok(out.iter().flat_map(|c| dst.inverse(c)).collect())
}

/// Gaussian elimination with partial pivoting on a row-major `k × k` matrix.
fn small_solve(a: &mut [f64], y: &mut [f64], k: usize) -> Result<()> {
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&i, &j| a[i * k + col].abs().total_cmp(&a[j * k + col].abs()))
            .expect("non-empty range");
        if a[piv * k + col] == 0.0 {
            return Err(OcpError::Precondition("singular sine-mode block".into()));
        }
        if piv != col {
            for c in 0..k {
                a.swap(piv * k + c, col * k + c);
            }
            y.swap(piv, col);
        }
        for r in col + 1..k {
            let f = a[r * k + col] / a[col * k + col];
            if f != 0.0 {
                for c in col..k {
                    a[r * k + c] -= f * a[col * k + c];
                }
                y[r] -= f * y[col];
            }
        }
    }
    for r in (0..k).rev() {
        let s: f64 = (r + 1..k).map(|c| a[r * k + c] * y[c]).sum();
        y[r] = (y[r] - s) / a[r * k + r];
    }
    Ok(())
}

/// `op⁻¹ rhs` through the sine transform.
pub fn fast_diag_apply_inverse(op: &DiscreteOperator, rhs: &GridFunction) -> Result<GridFunction> {
    if op.grid() != rhs.grid() {
        return Err(OcpError::GridMismatch);
    }
    let symbol = op.symbol().ok_or(OcpError::NotDiagonalizable)?.clone();
    let x = fast_diag_solve(op.grid(), &[vec![Some(symbol)]], rhs.values())?;
    GridFunction::new(op.grid(), x)
}

fn krylov(system: &KktSystem, config: &SolveConfig, bnorm: f64) -> Result<(Vec<f64>, usize)> {
    let a = system.matrix();
    let pre = block_symbols(system, true).ok();
    let grid = system.grid;
    let apply_pre = |v: &[f64]| -> Vec<f64> {
        match &pre {
            Some(s) => fast_diag_solve(grid, s, v).unwrap_or_else(|_| v.to_vec()),
            None => v.to_vec(),
        }
    };
    let out = gmres(&a, &apply_pre, &system.rhs, bnorm, config);
    if out.converged {
        Ok((out.x, out.iterations))
    } else {
        Err(OcpError::Solver {
            reason: "GMRES did not converge within the iteration limit".into(),
            stats: SolveStats {
                method: SolveMethod::Krylov,
                unknowns: system.len(),
                iterations: out.iterations,
                final_relative_residual: out.relres,
            },
        })
    }
}

struct GmresOutcome {
    x: Vec<f64>,
    iterations: usize,
    relres: f64,
    converged: bool,
}

fn gmres(a: &CsrMatrix, pre: &dyn Fn(&[f64]) -> Vec<f64>, b: &[f64], bnorm: f64, cfg: &SolveConfig) -> GmresOutcome {
    let n = b.len();
    let restart = cfg.restart.min(n.max(1));
    let tol = cfg.rel_residual_tol;
    let mut x = vec![0.0; n];
    let mut total = 0;
    loop {
        let ax = a.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        let relres = beta / bnorm;
        if relres <= tol || total >= cfg.max_iterations || !relres.is_finite() {
            return GmresOutcome {
                x,
                iterations: total,
                relres,
                converged: relres <= tol,
            };
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..restart {
            let mut w = a.matvec(&pre(&basis[j]));
            total += 1;
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let d: f64 = w.iter().zip(v).map(|(a, b)| a * b).sum();
                    h[i][j] += d;
                    for (wk, vk) in w.iter_mut().zip(v) {
                        *wk -= d * vk;
                    }
                }
            }
            let hn = norm2(&w);
            h[j + 1][j] = hn;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = h[j][j].hypot(h[j + 1][j]);
            if denom == 0.0 {
                break;
            }
            cs[j] = h[j][j] / denom;
            sn[j] = h[j + 1][j] / denom;
            h[j][j] = denom;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            if g[j + 1].abs() / bnorm <= 0.5 * tol || hn == 0.0 || total >= cfg.max_iterations {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let s: f64 = (i + 1..used).map(|k| h[i][k] * y[k]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        let mut comb = vec![0.0; n];
        for (yi, v) in y.iter().zip(&basis) {
            for (c, vk) in comb.iter_mut().zip(v) {
                *c += yi * vk;
            }
        }
        for (xi, d) in x.iter_mut().zip(pre(&comb)) {
            *xi += d;
        }
        if used == 0 {
            total = cfg.max_iterations;
        }
    }
}
