//! Uniform grids on the unit interval / unit square and the fields that
//! live on them.
//!
//! Unknown fields (state, control, adjoint) are stored on interior nodes
//! only; the homogeneous Dirichlet boundary is implicit. Interior node
//! `(i, j)`, `1 <= i, j <= n - 1`, sits at `(i h, j h)` and is stored at
//! index `(j - 1) (n - 1) + (i - 1)`, so `x` runs fastest.
//!
//! Data fields (source `f`, target `g`) may be nonzero on the boundary.
//! [`GridData`] keeps samples on the closed grid for the stencils that
//! reach boundary nodes.

use crate::error::{OcpError, Result};
use crate::fmt::sci;
use std::io::{BufRead, Write};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dim {
    One,
    Two,
}

impl Dim {
    pub fn as_usize(self) -> usize {
        match self {
            Dim::One => 1,
            Dim::Two => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Grid {
    dim: Dim,
    n: usize,
}

impl Grid {
    pub fn new(dim: Dim, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(OcpError::InvalidGrid(format!(
                "need at least 2 subintervals per axis, got {n}"
            )));
        }
        Ok(Self { dim, n })
    }

    pub fn one_d(n: usize) -> Result<Self> {
        Self::new(Dim::One, n)
    }

    pub fn two_d(n: usize) -> Result<Self> {
        Self::new(Dim::Two, n)
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    /// Subintervals per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Interior nodes per axis.
    pub fn m(&self) -> usize {
        self.n - 1
    }

    pub fn interior_count(&self) -> usize {
        self.m().pow(self.dim.as_usize() as u32)
    }

    pub fn closed_count(&self) -> usize {
        (self.n + 1).pow(self.dim.as_usize() as u32)
    }

    /// Quadrature weight `h^dim` of the discrete inner product.
    pub fn cell_measure(&self) -> f64 {
        self.h().powi(self.dim.as_usize() as i32)
    }

    /// Storage index of interior node `(i, j)` (1-based; `j` ignored in 1D).
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!((1..self.n).contains(&i));
        match self.dim {
            Dim::One => i - 1,
            Dim::Two => {
                debug_assert!((1..self.n).contains(&j));
                (j - 1) * self.m() + (i - 1)
            }
        }
    }

    /// Inverse of [`Grid::index`]: `(i, j)`, with `j = 0` in 1D.
    pub fn node(&self, k: usize) -> (usize, usize) {
        match self.dim {
            Dim::One => (k + 1, 0),
            Dim::Two => (k % self.m() + 1, k / self.m() + 1),
        }
    }

    /// Coordinates of interior node `k`; `y = 0` in 1D.
    pub fn coords(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.node(k);
        let nf = self.n as f64;
        (i as f64 / nf, j as f64 / nf)
    }

    /// Storage index on the closed grid, `0 <= i, j <= n`.
    pub fn closed_index(&self, i: usize, j: usize) -> usize {
        match self.dim {
            Dim::One => i,
            Dim::Two => j * (self.n + 1) + i,
        }
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        let edge = |t: usize| t == 0 || t == self.n;
        match self.dim {
            Dim::One => edge(i),
            Dim::Two => edge(i) || edge(j),
        }
    }
}

/// Values on the interior nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.interior_count() {
            return Err(OcpError::DimensionMismatch {
                expected: grid.interior_count(),
                found: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.interior_count()],
        }
    }

    /// Samples `f` at every interior node.
    pub fn sample(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..grid.interior_count())
            .map(|k| {
                let (x, y) = grid.coords(k);
                let value = f(x, y);
                if value.is_finite() {
                    Ok(value)
                } else {
                    Err(OcpError::NonFiniteSample { x, y, value })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn inner_product(&self, other: &GridFunction) -> Result<f64> {
        inner_product(self, other)
    }

    pub fn norm_l2(&self) -> f64 {
        norm_l2(self)
    }

    pub fn norm_inf(&self) -> f64 {
        norm_inf(self)
    }

    /// `self - other`, entrywise.
    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        self.map(|v| c * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        same_grid(self.grid, other.grid)?;
        Ok(GridFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Writes `i,j,x,y,value` (2D) or `i,x,value` (1D) rows in storage order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        match self.grid.dim {
            Dim::One => writeln!(w, "i,x,value")?,
            Dim::Two => writeln!(w, "i,j,x,y,value")?,
        }
        for (k, &v) in self.values.iter().enumerate() {
            let (i, j) = self.grid.node(k);
            let (x, y) = self.grid.coords(k);
            match self.grid.dim {
                Dim::One => writeln!(w, "{i},{},{}", sci(x, 6), sci(v, 6))?,
                Dim::Two => writeln!(w, "{i},{j},{},{},{}", sci(x, 6), sci(y, 6), sci(v, 6))?,
            }
        }
        Ok(())
    }

    /// Reads the format produced by [`GridFunction::write_csv`].
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| OcpError::Precondition("empty field CSV".into()))??;
        let dim = match header.trim() {
            "i,x,value" => Dim::One,
            "i,j,x,y,value" => Dim::Two,
            other => {
                return Err(OcpError::Precondition(format!(
                    "unrecognised field CSV header `{other}`"
                )))
            }
        };
        let bad = |line: &str| OcpError::Precondition(format!("malformed field CSV row `{line}`"));
        let mut rows = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            let expected = if dim == Dim::One { 3 } else { 5 };
            if cols.len() != expected {
                return Err(bad(&line));
            }
            let value: f64 = cols[expected - 1].trim().parse().map_err(|_| bad(&line))?;
            rows.push(value);
        }
        let per_axis = match dim {
            Dim::One => rows.len(),
            Dim::Two => (rows.len() as f64).sqrt().round() as usize,
        };
        let grid = Grid::new(dim, per_axis + 1)?;
        GridFunction::new(grid, rows)
    }
}

/// Samples on every node of the closed grid (boundary included), same
/// x-fastest ordering with indices `0..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridData {
    grid: Grid,
    values: Vec<f64>,
}

impl GridData {
    pub fn sample(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let n = grid.n();
        let nf = n as f64;
        let mut values = Vec::with_capacity(grid.closed_count());
        let rows = if grid.dim() == Dim::Two { n + 1 } else { 1 };
        for j in 0..rows {
            for i in 0..=n {
                let (x, y) = (i as f64 / nf, j as f64 / nf);
                let value = f(x, y);
                if !value.is_finite() {
                    return Err(OcpError::NonFiniteSample { x, y, value });
                }
                values.push(value);
            }
        }
        Ok(Self { grid, values })
    }

    /// Interior values with a zero boundary.
    pub fn from_interior(v: &GridFunction) -> Self {
        let grid = v.grid();
        let mut values = vec![0.0; grid.closed_count()];
        for (k, &x) in v.values().iter().enumerate() {
            let (i, j) = grid.node(k);
            values[grid.closed_index(i, j)] = x;
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.closed_index(i, j)]
    }

    pub fn interior(&self) -> GridFunction {
        let grid = self.grid;
        let values = (0..grid.interior_count())
            .map(|k| {
                let (i, j) = grid.node(k);
                self.at(i, j)
            })
            .collect();
        GridFunction { grid, values }
    }

    pub fn has_nonzero_boundary(&self) -> bool {
        let n = self.grid.n();
        let rows = if self.grid.dim() == Dim::Two { n + 1 } else { 1 };
        (0..rows).any(|j| (0..=n).any(|i| self.grid.is_boundary(i, j) && self.at(i, j) != 0.0))
    }
}

fn same_grid(a: Grid, b: Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else if a.interior_count() != b.interior_count() {
        Err(OcpError::DimensionMismatch {
            expected: a.interior_count(),
            found: b.interior_count(),
        })
    } else {
        Err(OcpError::GridMismatch)
    }
}

/// `h^dim * sum_k v_k w_k`.
pub fn inner_product(v: &GridFunction, w: &GridFunction) -> Result<f64> {
    same_grid(v.grid, w.grid)?;
    let sum: f64 = v.values.iter().zip(&w.values).map(|(a, b)| a * b).sum();
    Ok(v.grid.cell_measure() * sum)
}

pub fn norm_l2(v: &GridFunction) -> f64 {
    let sum: f64 = v.values.iter().map(|a| a * a).sum();
    (v.grid.cell_measure() * sum).sqrt()
}

pub fn norm_inf(v: &GridFunction) -> f64 {
    v.values.iter().fold(0.0, |m, a| m.max(a.abs()))
}

/// Max-norm of a plain vector.
pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, a| m.max(a.abs()))
}
