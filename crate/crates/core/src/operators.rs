//! Discrete operators on interior grid functions.
//!
//! Every stencil operator is assembled directly from its stencil with the
//! zero-Dirichlet truncation at boundary-adjacent rows. Operators that are
//! polynomials in `A ⊗ I` and `I ⊗ A`, with `A = tridiag(1, -2, 1) / h²`
//! the 1D second difference, also carry that polynomial as a [`Symbol`]:
//! its value at the eigenvalue pair of sine mode `(k, l)` is the operator's
//! eigenvalue for that mode, which the fast solver relies on.
//!
//! Sign convention: [`laplacian_5pt`] is the Laplacian `Δ_h` itself
//! (negative definite); [`compact_f`] is the already-negated compact
//! operator `F_h`.

use crate::error::{OcpError, Result};
use crate::grid::{Dim, Grid, GridData, GridFunction};
use crate::sparse::CsrMatrix;
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MassBase {
    Simpson,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OperatorKind {
    Laplacian5pt,
    CompactF,
    CompactR,
    SimpsonQ,
    Identity,
    GradForward,
    RegMass { base: MassBase, gamma: f64 },
    Composite,
}

/// Polynomial `Σ c · a_x^i · a_y^j` in the eigenvalues of the 1D second
/// difference along each axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Symbol {
    terms: Vec<(f64, u32, u32)>,
}

impl Symbol {
    pub fn constant(c: f64) -> Self {
        Self {
            terms: vec![(c, 0, 0)],
        }
    }

    pub fn ax() -> Self {
        Self {
            terms: vec![(1.0, 1, 0)],
        }
    }

    pub fn ay() -> Self {
        Self {
            terms: vec![(1.0, 0, 1)],
        }
    }

    /// Symbol of `Δ_h`: `a_x` in 1D, `a_x + a_y` in 2D.
    pub fn laplacian(dim: Dim) -> Self {
        match dim {
            Dim::One => Self::ax(),
            Dim::Two => Self::ax().add(&Self::ay()),
        }
    }

    pub fn add(&self, other: &Symbol) -> Self {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn lin_comb(&self, a: f64, other: &Symbol, b: f64) -> Self {
        let mut terms: Vec<(f64, u32, u32)> = self.terms.iter().map(|&(c, i, j)| (a * c, i, j)).collect();
        for &(c, i, j) in &other.terms {
            match terms.iter_mut().find(|t| t.1 == i && t.2 == j) {
                Some(t) => t.0 += b * c,
                None => terms.push((b * c, i, j)),
            }
        }
        Self { terms }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|&(c, i, j)| (s * c, i, j)).collect(),
        }
    }

    pub fn mul(&self, other: &Symbol) -> Self {
        let mut out = Symbol { terms: Vec::new() };
        for &(c1, i1, j1) in &self.terms {
            for &(c2, i2, j2) in &other.terms {
                out = out.add(&Symbol {
                    terms: vec![(c1 * c2, i1 + i2, j1 + j2)],
                });
            }
        }
        out
    }

    pub fn eval(&self, ax: f64, ay: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(c, i, j)| c * ax.powi(i as i32) * ay.powi(j as i32))
            .sum()
    }
}

/// Eigenvalue of the 1D second difference `tridiag(1, -2, 1) / h²` for
/// sine mode `k`: `-(4 / h²) sin²(k π h / 2)`.
pub fn second_difference_eigenvalue(n: usize, k: usize) -> f64 {
    let h = 1.0 / n as f64;
    let s = (k as f64 * std::f64::consts::PI * h / 2.0).sin();
    -4.0 * s * s / (h * h)
}

/// Constant-coefficient stencil: `(dx, dy, weight)` offsets.
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil {
    entries: Vec<(i32, i32, f64)>,
}

impl Stencil {
    fn new(entries: Vec<(i32, i32, f64)>) -> Self {
        Self { entries }
    }

    fn lin_comb(&self, a: f64, other: &Stencil, b: f64) -> Self {
        let mut entries: Vec<_> = self.entries.iter().map(|&(x, y, w)| (x, y, a * w)).collect();
        for &(x, y, w) in &other.entries {
            match entries.iter_mut().find(|e| e.0 == x && e.1 == y) {
                Some(e) => e.2 += b * w,
                None => entries.push((x, y, b * w)),
            }
        }
        Self { entries }
    }

    pub fn entries(&self) -> &[(i32, i32, f64)] {
        &self.entries
    }

    fn assemble(&self, grid: Grid) -> CsrMatrix {
        let n = grid.interior_count();
        let m = grid.m() as i64;
        let mut triplets = Vec::with_capacity(n * self.entries.len());
        for k in 0..n {
            let (i, j) = grid.node(k);
            for &(dx, dy, w) in &self.entries {
                let (ii, jj) = (i as i64 + dx as i64, j as i64 + dy as i64);
                let inside_x = (1..=m).contains(&ii);
                let inside_y = match grid.dim() {
                    Dim::One => true,
                    Dim::Two => (1..=m).contains(&jj),
                };
                if inside_x && inside_y {
                    triplets.push((k, grid.index(ii as usize, jj.max(1) as usize), w));
                }
            }
        }
        CsrMatrix::from_triplets(n, n, &triplets)
    }

    fn boundary_contribution(&self, data: &GridData) -> GridFunction {
        let grid = data.grid();
        let n = grid.n() as i64;
        let values = (0..grid.interior_count())
            .map(|k| {
                let (i, j) = grid.node(k);
                self.entries
                    .iter()
                    .filter_map(|&(dx, dy, w)| {
                        let ii = (i as i64 + dx as i64) as usize;
                        let jj = match grid.dim() {
                            Dim::One => 0,
                            Dim::Two => (j as i64 + dy as i64) as usize,
                        };
                        debug_assert!((ii as i64) <= n);
                        grid.is_boundary(ii, jj).then(|| w * data.at(ii, jj))
                    })
                    .sum()
            })
            .collect();
        GridFunction::new(grid, values).expect("interior length")
    }
}

fn five_point(dim: Dim, center: f64, edge: f64) -> Stencil {
    let mut e = vec![(0, 0, center), (-1, 0, edge), (1, 0, edge)];
    if dim == Dim::Two {
        e.extend([(0, -1, edge), (0, 1, edge)]);
    }
    Stencil::new(e)
}

#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    grid: Grid,
    kind: OperatorKind,
    matrix: CsrMatrix,
    symbol: Option<Symbol>,
    surrogate: Option<Symbol>,
    stencil: Option<Stencil>,
}

impl DiscreteOperator {
    fn from_stencil(grid: Grid, kind: OperatorKind, stencil: Stencil, symbol: Symbol) -> Self {
        Self {
            grid,
            kind,
            matrix: stencil.assemble(grid),
            surrogate: Some(symbol.clone()),
            symbol: Some(symbol),
            stencil: Some(stencil),
        }
    }

    /// Wraps an arbitrary square matrix as a composite operator.
    pub fn from_matrix(grid: Grid, matrix: CsrMatrix) -> Result<Self> {
        if matrix.nrows() != grid.interior_count() || !matrix.is_square() {
            return Err(OcpError::DimensionMismatch {
                expected: grid.interior_count(),
                found: matrix.nrows(),
            });
        }
        Ok(Self {
            grid,
            kind: OperatorKind::Composite,
            matrix,
            symbol: None,
            surrogate: None,
            stencil: None,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Exact sine-basis symbol, when the operator is diagonal in that basis.
    pub fn symbol(&self) -> Option<&Symbol> {
        self.symbol.as_ref()
    }

    /// Symbol of the nearest sine-diagonal operator (`Q_h` replaced by its
    /// mean weight, the identity). Used for preconditioning.
    pub fn surrogate(&self) -> Option<&Symbol> {
        self.surrogate.as_ref()
    }

    pub fn stencil(&self) -> Option<&Stencil> {
        self.stencil.as_ref()
    }

    pub fn apply(&self, v: &GridFunction) -> Result<GridFunction> {
        if v.grid() != self.grid {
            return Err(OcpError::GridMismatch);
        }
        GridFunction::new(self.grid, self.matrix.matvec(v.values()))
    }

    /// Contribution of the boundary samples of `data` through the stencil,
    /// i.e. the part of the stencil application the interior matrix drops.
    pub fn boundary_contribution(&self, data: &GridData) -> Result<GridFunction> {
        if data.grid() != self.grid {
            return Err(OcpError::GridMismatch);
        }
        match &self.stencil {
            Some(s) => Ok(s.boundary_contribution(data)),
            None if self.matrix.is_diagonal() => Ok(GridFunction::zeros(self.grid)),
            None => Err(OcpError::NoStencil),
        }
    }

    /// Applies the operator to closed-grid data, boundary values included.
    pub fn apply_with_boundary(&self, data: &GridData) -> Result<GridFunction> {
        let inner = self.apply(&data.interior())?;
        if !data.has_nonzero_boundary() {
            return Ok(inner);
        }
        inner.add(&self.boundary_contribution(data)?)
    }

    pub fn is_symmetric(&self) -> bool {
        self.matrix.is_symmetric()
    }

    pub fn transpose(&self) -> Self {
        let mut t = self.clone();
        t.matrix = self.matrix.transpose();
        if self.kind != OperatorKind::GradForward {
            t.kind = OperatorKind::Composite;
        }
        t
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &DiscreteOperator, b: f64) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            grid: self.grid,
            kind: OperatorKind::Composite,
            matrix: self.matrix.lin_comb(a, &other.matrix, b)?,
            symbol: both(&self.symbol, &other.symbol, |x, y| x.lin_comb(a, y, b)),
            surrogate: both(&self.surrogate, &other.surrogate, |x, y| x.lin_comb(a, y, b)),
            stencil: both(&self.stencil, &other.stencil, |x, y| x.lin_comb(a, y, b)),
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            kind: OperatorKind::Composite,
            matrix: self.matrix.scale(s),
            symbol: self.symbol.as_ref().map(|x| x.scale(s)),
            surrogate: self.surrogate.as_ref().map(|x| x.scale(s)),
            stencil: self
                .stencil
                .as_ref()
                .map(|x| x.lin_comb(s, &Stencil::new(Vec::new()), 0.0)),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    /// Operator product `self * other`.
    pub fn compose(&self, other: &DiscreteOperator) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            grid: self.grid,
            kind: OperatorKind::Composite,
            matrix: self.matrix.matmul(&other.matrix)?,
            symbol: both(&self.symbol, &other.symbol, Symbol::mul),
            surrogate: both(&self.surrogate, &other.surrogate, Symbol::mul),
            stencil: None,
        })
    }

    /// Writes the matrix in Matrix Market coordinate format; symmetric
    /// operators store their lower triangle only.
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let m = &self.matrix;
        let symmetric = m.is_symmetric();
        writeln!(
            w,
            "%%MatrixMarket matrix coordinate real {}",
            if symmetric { "symmetric" } else { "general" }
        )?;
        let entries: Vec<_> = m.triplets().filter(|&(r, c, _)| !symmetric || r >= c).collect();
        writeln!(w, "{} {} {}", m.nrows(), m.ncols(), entries.len())?;
        for (r, c, v) in entries {
            writeln!(w, "{} {} {:.17e}", r + 1, c + 1, v)?;
        }
        Ok(())
    }

    fn check_grid(&self, other: &DiscreteOperator) -> Result<()> {
        if self.grid != other.grid {
            return Err(OcpError::GridMismatch);
        }
        Ok(())
    }
}

fn both<T, U>(a: &Option<T>, b: &Option<T>, f: impl Fn(&T, &T) -> U) -> Option<U> {
    match (a, b) {
        (Some(x), Some(y)) => Some(f(x, y)),
        _ => None,
    }
}

/// Five-point Laplacian `Δ_h` (three-point in 1D).
pub fn laplacian_5pt(grid: Grid) -> DiscreteOperator {
    let h2 = grid.h() * grid.h();
    let center = match grid.dim() {
        Dim::One => -2.0,
        Dim::Two => -4.0,
    };
    DiscreteOperator::from_stencil(
        grid,
        OperatorKind::Laplacian5pt,
        five_point(grid.dim(), center / h2, 1.0 / h2),
        Symbol::laplacian(grid.dim()),
    )
}

/// Compact fourth-order operator `F_h`.
///
/// 2D: `1/(6h²) [-1 -4 -1; -4 20 -4; -1 -4 -1]`, equal to
/// `-Δ_h - (h²/6) A⊗A`. 1D: `tridiag(-1, 2, -1) / h²`.
pub fn compact_f(grid: Grid) -> DiscreteOperator {
    let h2 = grid.h() * grid.h();
    let (stencil, symbol) = match grid.dim() {
        Dim::One => (
            five_point(Dim::One, 2.0 / h2, -1.0 / h2),
            Symbol::ax().scale(-1.0),
        ),
        Dim::Two => {
            let s = 6.0 * h2;
            let (c, e, k) = (20.0 / s, -4.0 / s, -1.0 / s);
            let stencil = Stencil::new(vec![
                (0, 0, c),
                (-1, 0, e),
                (1, 0, e),
                (0, -1, e),
                (0, 1, e),
                (-1, -1, k),
                (1, -1, k),
                (-1, 1, k),
                (1, 1, k),
            ]);
            let symbol = Symbol::laplacian(Dim::Two)
                .scale(-1.0)
                .lin_comb(1.0, &Symbol::ax().mul(&Symbol::ay()), -h2 / 6.0);
            (stencil, symbol)
        }
    };
    DiscreteOperator::from_stencil(grid, OperatorKind::CompactF, stencil, symbol)
}

/// Right-hand-side averaging `R_h = I + (h²/12) Δ_h`.
///
/// 2D: `1/12 [0 1 0; 1 8 1; 0 1 0]`. 1D: `tridiag(1, 10, 1) / 12`.
pub fn compact_r(grid: Grid) -> DiscreteOperator {
    let center = match grid.dim() {
        Dim::One => 10.0 / 12.0,
        Dim::Two => 8.0 / 12.0,
    };
    let h2 = grid.h() * grid.h();
    DiscreteOperator::from_stencil(
        grid,
        OperatorKind::CompactR,
        five_point(grid.dim(), center, 1.0 / 12.0),
        Symbol::constant(1.0).lin_comb(1.0, &Symbol::laplacian(grid.dim()), h2 / 12.0),
    )
}

pub fn identity(grid: Grid) -> DiscreteOperator {
    DiscreteOperator::from_stencil(
        grid,
        OperatorKind::Identity,
        Stencil::new(vec![(0, 0, 1.0)]),
        Symbol::constant(1.0),
    )
}

/// 1D composite Simpson weights at interior nodes: 4/3 at odd, 2/3 at even.
pub fn simpson_weights_1d(n: usize) -> Result<Vec<f64>> {
    if n % 2 != 0 {
        return Err(OcpError::SimpsonParity(n));
    }
    Ok((1..n)
        .map(|i| if i % 2 == 1 { 4.0 / 3.0 } else { 2.0 / 3.0 })
        .collect())
}

/// Diagonal composite Simpson weight matrix `Q_h` (tensor product in 2D).
pub fn simpson_q(grid: Grid) -> Result<DiscreteOperator> {
    let w = simpson_weights_1d(grid.n())?;
    let diag: Vec<f64> = (0..grid.interior_count())
        .map(|k| {
            let (i, j) = grid.node(k);
            match grid.dim() {
                Dim::One => w[i - 1],
                Dim::Two => w[i - 1] * w[j - 1],
            }
        })
        .collect();
    Ok(DiscreteOperator {
        grid,
        kind: OperatorKind::SimpsonQ,
        matrix: CsrMatrix::diagonal(&diag),
        symbol: None,
        // the 1D weights average to one over each period
        surrogate: Some(Symbol::constant(1.0)),
        stencil: None,
    })
}

/// Regularized mass operator `Q_h - γΔ_h` or `I_h - γΔ_h`.
pub fn reg_mass(base: MassBase, gamma: f64, grid: Grid) -> Result<DiscreteOperator> {
    if !(gamma >= 0.0) {
        return Err(OcpError::NegativeGamma(gamma));
    }
    let b = match base {
        MassBase::Simpson => simpson_q(grid)?,
        MassBase::Identity => identity(grid),
    };
    let mut op = if gamma == 0.0 {
        b
    } else {
        b.lin_comb(1.0, &laplacian_5pt(grid), -gamma)?
    };
    op.kind = OperatorKind::RegMass { base, gamma };
    Ok(op)
}

/// 1D second difference `A = tridiag(1, -2, 1) / h²` on `n - 1` nodes.
pub fn second_difference_1d(n: usize) -> CsrMatrix {
    let m = n - 1;
    let h2 = 1.0 / (n * n) as f64;
    let mut t = Vec::with_capacity(3 * m);
    for i in 0..m {
        t.push((i, i, -2.0 / h2));
        if i > 0 {
            t.push((i, i - 1, 1.0 / h2));
        }
        if i + 1 < m {
            t.push((i, i + 1, 1.0 / h2));
        }
    }
    CsrMatrix::from_triplets(m, m, &t)
}

/// Forward-difference gradient.
///
/// Rows are edge differences `(v_{next} - v) / h` with zero boundary values.
/// 1D: `n` edges, edge `e` joins nodes `e` and `e + 1`. 2D: first the
/// `n (n-1)` x-edges ordered by row `j = 1..n-1` then `i = 0..n-1`, then the
/// `n (n-1)` y-edges ordered by `j = 0..n-1` then `i = 1..n-1`.
pub fn grad_forward(grid: Grid) -> DiscreteOperator {
    let n = grid.n();
    let m = grid.m();
    let inv_h = 1.0 / grid.h();
    let mut t = Vec::new();
    let rows = match grid.dim() {
        Dim::One => {
            for e in 0..n {
                if e >= 1 {
                    t.push((e, grid.index(e, 0), -inv_h));
                }
                if e + 1 <= m {
                    t.push((e, grid.index(e + 1, 0), inv_h));
                }
            }
            n
        }
        Dim::Two => {
            for j in 1..=m {
                for i in 0..n {
                    let row = (j - 1) * n + i;
                    if i >= 1 {
                        t.push((row, grid.index(i, j), -inv_h));
                    }
                    if i + 1 <= m {
                        t.push((row, grid.index(i + 1, j), inv_h));
                    }
                }
            }
            for j in 0..n {
                for i in 1..=m {
                    let row = n * m + j * m + (i - 1);
                    if j >= 1 {
                        t.push((row, grid.index(i, j), -inv_h));
                    }
                    if j + 1 <= m {
                        t.push((row, grid.index(i, j + 1), inv_h));
                    }
                }
            }
            2 * n * m
        }
    };
    DiscreteOperator {
        grid,
        kind: OperatorKind::GradForward,
        matrix: CsrMatrix::from_triplets(rows, grid.interior_count(), &t),
        symbol: None,
        surrogate: None,
        stencil: None,
    }
}

/// `(∇_h v, ∇_h v)` with the `h^dim` weight.
pub fn gradient_energy(v: &GridFunction) -> f64 {
    let grad = grad_forward(v.grid()).matrix.matvec(v.values());
    v.grid().cell_measure() * grad.iter().map(|x| x * x).sum::<f64>()
}

/// Max absolute entry of the commutator `AB - BA`.
pub fn check_commute(a: &DiscreteOperator, b: &DiscreteOperator) -> Result<f64> {
    if a.grid != b.grid {
        return Err(OcpError::GridMismatch);
    }
    if !a.matrix.is_square() || !b.matrix.is_square() {
        return Err(OcpError::Precondition("commutator needs square operators".into()));
    }
    let ab = a.matrix.matmul(&b.matrix)?;
    let ba = b.matrix.matmul(&a.matrix)?;
    ab.max_abs_diff(&ba)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sin_sin(grid: Grid) -> GridFunction {
        GridFunction::sample(grid, |x, y| (PI * x).sin() * (PI * y).sin()).unwrap()
    }

    #[test]
    fn laplacian_rows() {
        let g = Grid::one_d(4).unwrap();
        let l = laplacian_5pt(g);
        let h2 = 1.0 / 16.0;
        assert_eq!(l.matrix().get(1, 0), 1.0 / h2);
        assert_eq!(l.matrix().get(1, 1), -2.0 / h2);
        assert_eq!(l.matrix().get(1, 2), 1.0 / h2);
        let g2 = Grid::two_d(6).unwrap();
        let l2 = laplacian_5pt(g2);
        let sums: Vec<f64> = (0..g2.interior_count())
            .map(|r| l2.matrix().row(r).map(|(_, v)| v).sum())
            .collect();
        // interior node with full stencil
        assert_eq!(sums[g2.index(3, 3)], 0.0);
        // corner-adjacent node misses two neighbours
        assert_eq!(sums[g2.index(1, 1)], -2.0 * 36.0);
        let zero = GridFunction::zeros(g2);
        assert_eq!(l2.apply(&zero).unwrap(), zero);
    }

    #[test]
    fn laplacian_truncation_order() {
        let err = |n: usize| {
            let g = Grid::two_d(n).unwrap();
            let z = sin_sin(g);
            let lz = laplacian_5pt(g).apply(&z).unwrap();
            lz.add(&z.scale(2.0 * PI * PI)).unwrap().norm_inf()
        };
        let ratio = err(20) / err(40);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn compact_pair_row_sums_and_truncation() {
        let g = Grid::two_d(8).unwrap();
        let r = compact_r(g);
        let f = compact_f(g);
        let k = g.index(4, 4);
        assert!((r.matrix().row(k).map(|(_, v)| v).sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(f.matrix().row(k).map(|(_, v)| v).sum::<f64>().abs() < 1e-12);
        let one = GridFunction::constant(g, 1.0);
        assert!((r.apply(&one).unwrap().values()[k] - 1.0).abs() < 1e-15);

        let err = |n: usize| {
            let g = Grid::two_d(n).unwrap();
            let z = sin_sin(g);
            let fz = compact_f(g).apply(&z).unwrap();
            let rhs = compact_r(g).apply(&z.scale(2.0 * PI * PI)).unwrap();
            fz.sub(&rhs).unwrap().norm_inf()
        };
        let ratio = err(20) / err(40);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn compact_f_kronecker_route() {
        for n in [5, 10] {
            let g = Grid::two_d(n).unwrap();
            let a = second_difference_1d(n);
            let aa = a.kron(&a);
            let h2 = g.h() * g.h();
            let kron = laplacian_5pt(g).matrix().lin_comb(-1.0, &aa, -h2 / 6.0).unwrap();
            let f = compact_f(g);
            let diff = f.matrix().max_abs_diff(&kron).unwrap();
            assert!(diff <= 1e-12 * f.matrix().max_abs(), "diff {diff}");
            let i = CsrMatrix::identity(n - 1);
            let lap = i.kron(&a).add(&a.kron(&i)).unwrap();
            assert!(lap.max_abs_diff(laplacian_5pt(g).matrix()).unwrap() <= 1e-15 * lap.max_abs());
            let r = CsrMatrix::identity(g.interior_count()).lin_comb(1.0, &lap, h2 / 12.0).unwrap();
            assert!(r.max_abs_diff(compact_r(g).matrix()).unwrap() <= 1e-15);
        }
    }

    #[test]
    fn one_d_compact_pair() {
        let g = Grid::one_d(8).unwrap();
        let f = compact_f(g);
        let r = compact_r(g);
        assert_eq!(f.matrix().get(3, 3), 2.0 * 64.0);
        assert_eq!(f.matrix().get(3, 4), -64.0);
        assert!((r.matrix().get(3, 3) - 10.0 / 12.0).abs() < 1e-16);
        assert!(check_commute(&f, &r).unwrap() < 1e-12);
    }

    #[test]
    fn simpson_weights() {
        let g = Grid::two_d(6).unwrap();
        let q = simpson_q(g).unwrap();
        assert!((q.matrix().get(g.index(1, 1), g.index(1, 1)) - 16.0 / 9.0).abs() < 1e-15);
        assert!((q.matrix().get(g.index(2, 1), g.index(2, 1)) - 8.0 / 9.0).abs() < 1e-15);
        assert!((q.matrix().get(g.index(2, 2), g.index(2, 2)) - 4.0 / 9.0).abs() < 1e-15);
        let q1 = simpson_q(Grid::one_d(6).unwrap()).unwrap();
        assert!((q1.matrix().get(1, 1) - 2.0 / 3.0).abs() < 1e-16);
        assert!(matches!(simpson_q(Grid::two_d(7).unwrap()), Err(OcpError::SimpsonParity(7))));
        assert!(q.is_symmetric());
    }

    #[test]
    fn reg_mass_cases() {
        let g = Grid::one_d(8).unwrap();
        let id = reg_mass(MassBase::Identity, 0.0, g).unwrap();
        assert_eq!(id.matrix().to_dense(), CsrMatrix::identity(7).to_dense());
        assert!(matches!(reg_mass(MassBase::Identity, -1.0, g), Err(OcpError::NegativeGamma(_))));

        // smallest eigenvalue of I - Δ_h via its sine symbol
        let m = reg_mass(MassBase::Identity, 1.0, g).unwrap();
        let lmin = (1..8)
            .map(|k| m.symbol().unwrap().eval(second_difference_eigenvalue(8, k), 0.0))
            .fold(f64::INFINITY, f64::min);
        assert!(lmin >= 1.0);

        let g = Grid::two_d(20).unwrap();
        let gamma = 400.0;
        let qm = reg_mass(MassBase::Simpson, gamma, g).unwrap();
        let expected = simpson_q(g)
            .unwrap()
            .matrix()
            .add(&laplacian_5pt(g).matrix().scale(-gamma))
            .unwrap();
        assert!(qm.matrix().max_abs_diff(&expected).unwrap() <= 1e-14 * expected.max_abs());
        assert!(qm.is_symmetric());
    }

    #[test]
    fn symmetry_is_exact() {
        for g in [Grid::two_d(10).unwrap(), Grid::one_d(10).unwrap()] {
            assert!(laplacian_5pt(g).is_symmetric());
            assert!(compact_f(g).is_symmetric());
            assert!(compact_r(g).is_symmetric());
            assert!(reg_mass(MassBase::Identity, 1.0, g).unwrap().is_symmetric());
        }
    }

    #[test]
    fn summation_by_parts() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for g in [Grid::two_d(16).unwrap(), Grid::one_d(16).unwrap()] {
            let lap = laplacian_5pt(g);
            for c in [None, Some(1.0)] {
                let v = match c {
                    Some(c) => GridFunction::constant(g, c),
                    None => GridFunction::new(g, (0..g.interior_count()).map(|_| rng.random_range(-1.0..1.0)).collect())
                        .unwrap(),
                };
                let lhs = gradient_energy(&v);
                let rhs = v.inner_product(&lap.apply(&v).unwrap().scale(-1.0)).unwrap();
                assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs(), "{lhs} vs {rhs}");
            }
            assert_eq!(gradient_energy(&GridFunction::zeros(g)), 0.0);
        }
    }

    #[test]
    fn commutators() {
        let g = Grid::two_d(10).unwrap();
        let f = compact_f(g);
        let r = compact_r(g);
        let scale = f.matrix().matmul(r.matrix()).unwrap().max_abs();
        assert!(check_commute(&f, &r).unwrap() <= 1e-12 * scale);
        let lap = laplacian_5pt(g);
        let m = reg_mass(MassBase::Identity, 1.0, g).unwrap();
        let scale = lap.matrix().matmul(m.matrix()).unwrap().max_abs();
        assert!(check_commute(&lap, &m).unwrap() <= 1e-12 * scale);
        let q = simpson_q(g).unwrap();
        let c = check_commute(&q, &lap).unwrap();
        assert!(c > 0.1 / (g.h() * g.h()), "commutator {c}");
        let ql = q.matrix().matmul(lap.matrix()).unwrap();
        let lq = lap.matrix().matmul(q.matrix()).unwrap();
        assert_eq!(ql.transpose().max_abs_diff(&lq).unwrap(), 0.0);
    }

    #[test]
    fn boundary_contribution_completes_the_stencil() {
        let g = Grid::two_d(6).unwrap();
        let data = GridData::sample(g, |x, y| 1.0 + x * y).unwrap();
        let r = compact_r(g);
        let full = r.apply_with_boundary(&data).unwrap();
        // the full 5-point average of an affine-in-each-variable field
        // reproduces it exactly
        for (k, v) in full.values().iter().enumerate() {
            let (x, y) = g.coords(k);
            assert!((v - (1.0 + x * y)).abs() < 1e-14);
        }
        let q = simpson_q(g).unwrap();
        assert!(q.boundary_contribution(&data).unwrap().norm_inf() == 0.0);
        let composite = r.compose(&r).unwrap();
        assert!(matches!(composite.boundary_contribution(&data), Err(OcpError::NoStencil)));
    }

    #[test]
    fn matrix_market_dump() {
        let g = Grid::one_d(4).unwrap();
        let mut buf = Vec::new();
        laplacian_5pt(g).write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("%%MatrixMarket matrix coordinate real symmetric"));
        assert_eq!(lines.next(), Some("3 3 5"));
    }
}
