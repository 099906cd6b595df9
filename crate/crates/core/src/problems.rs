//! Manufactured test problems.
//!
//! Each problem with a known optimum stores its exact fields as products of
//! factors `sin(kπt) e^{st}`, whose second derivatives are analytic. The
//! data `f = -Δz - u` and `g = z - Δp` are written out in closed form and
//! checked against the factor route when the problem is built.

use crate::error::{OcpError, Result};
use crate::grid::{Dim, Grid, GridData, GridFunction};
use rand::{Rng, SeedableRng};
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProblemName {
    Ex1,
    Ex2,
    Ex3,
    Ex4,
}

impl ProblemName {
    pub const ALL: [ProblemName; 4] = [ProblemName::Ex1, ProblemName::Ex2, ProblemName::Ex3, ProblemName::Ex4];

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemName::Ex1 => "ex1",
            ProblemName::Ex2 => "ex2",
            ProblemName::Ex3 => "ex3",
            ProblemName::Ex4 => "ex4",
        }
    }

    pub fn dim(self) -> Dim {
        match self {
            ProblemName::Ex1 => Dim::One,
            _ => Dim::Two,
        }
    }

    pub fn default_alpha(self) -> f64 {
        match self {
            ProblemName::Ex1 | ProblemName::Ex2 => 0.1,
            ProblemName::Ex3 => 1.0,
            ProblemName::Ex4 => 1e-4,
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ProblemName::Ex1 => "1D, z = sin(πx), u = sin(2πx)/α, α = 0.1",
            ProblemName::Ex2 => "z = sin(πx)sin(πy), u = sin(2πx)sin(2πy)/α, α = 0.1",
            ProblemName::Ex3 => "z = sin(2πx)sin(2πy)e^(x+y), u = sin(4πx)sin(4πy)e^(x-y)/α, α = 1",
            ProblemName::Ex4 => "f = 0, discontinuous target in the four corner squares, α = 1e-4, no exact solution",
        }
    }
}

impl Serialize for ProblemName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl fmt::Display for ProblemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for ProblemName {
    type Err = OcpError;

    fn from_str(s: &str) -> Result<Self> {
        ProblemName::ALL
            .into_iter()
            .find(|p| p.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| OcpError::UnknownName {
                kind: "problem",
                name: s.to_string(),
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Z,
    U,
    P,
}

impl Field {
    pub fn as_str(self) -> &'static str {
        match self {
            Field::Z => "z",
            Field::U => "u",
            Field::P => "p",
        }
    }
}

/// `sin(kπt) e^{st}`.
#[derive(Clone, Copy, Debug)]
struct Factor {
    k: f64,
    s: f64,
}

impl Factor {
    const ONE: Factor = Factor { k: 0.0, s: 0.0 };

    fn value(self, t: f64) -> f64 {
        if self.k == 0.0 {
            return (self.s * t).exp();
        }
        (self.k * PI * t).sin() * (self.s * t).exp()
    }

    fn d2(self, t: f64) -> f64 {
        let w = self.k * PI;
        if self.k == 0.0 {
            return self.s * self.s * (self.s * t).exp();
        }
        ((self.s * self.s - w * w) * (w * t).sin() + 2.0 * self.s * w * (w * t).cos()) * (self.s * t).exp()
    }
}

/// `c · X(x) · Y(y)`.
#[derive(Clone, Copy, Debug)]
struct Separable {
    c: f64,
    x: Factor,
    y: Factor,
}

impl Separable {
    fn value(&self, x: f64, y: f64) -> f64 {
        self.c * self.x.value(x) * self.y.value(y)
    }

    fn laplacian(&self, x: f64, y: f64) -> f64 {
        self.c * (self.x.d2(x) * self.y.value(y) + self.x.value(x) * self.y.d2(y))
    }
}

#[derive(Clone, Copy, Debug)]
struct Exact {
    z: Separable,
    /// `u` without the `1/α` factor.
    u: Separable,
}

#[derive(Clone, Debug)]
pub struct ManufacturedProblem {
    name: ProblemName,
    alpha: f64,
    exact: Option<Exact>,
}

fn sf(k: f64, s: f64) -> Factor {
    Factor { k, s }
}

impl ManufacturedProblem {
    /// Builds the problem with its default `α` and checks the closed-form
    /// data against the exact fields.
    pub fn make(name: ProblemName) -> Self {
        Self::with_alpha(name, name.default_alpha()).expect("default alpha is positive")
    }

    pub fn with_alpha(name: ProblemName, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(OcpError::NonPositiveAlpha(alpha));
        }
        let exact = match name {
            ProblemName::Ex1 => Some(Exact {
                z: Separable { c: 1.0, x: sf(1.0, 0.0), y: Factor::ONE },
                u: Separable { c: 1.0, x: sf(2.0, 0.0), y: Factor::ONE },
            }),
            ProblemName::Ex2 => Some(Exact {
                z: Separable { c: 1.0, x: sf(1.0, 0.0), y: sf(1.0, 0.0) },
                u: Separable { c: 1.0, x: sf(2.0, 0.0), y: sf(2.0, 0.0) },
            }),
            ProblemName::Ex3 => Some(Exact {
                z: Separable { c: 1.0, x: sf(2.0, 1.0), y: sf(2.0, 1.0) },
                u: Separable { c: 1.0, x: sf(4.0, 1.0), y: sf(4.0, -1.0) },
            }),
            ProblemName::Ex4 => None,
        };
        let p = Self { name, alpha, exact };
        p.check_consistency()?;
        Ok(p)
    }

    pub fn name(&self) -> ProblemName {
        self.name
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> Dim {
        self.name.dim()
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    fn exact(&self) -> Result<&Exact> {
        self.exact
            .as_ref()
            .ok_or_else(|| OcpError::NoExactSolution(self.name.to_string()))
    }

    pub fn z(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.exact()?.z.value(x, y))
    }

    pub fn u(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.exact()?.u.value(x, y) / self.alpha)
    }

    /// `p = αu`.
    pub fn p(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.exact()?.u.value(x, y))
    }

    /// State source `f`, closed form.
    pub fn f(&self, x: f64, y: f64) -> f64 {
        let a = self.alpha;
        match self.name {
            ProblemName::Ex1 => PI * PI * (PI * x).sin() - (2.0 * PI * x).sin() / a,
            ProblemName::Ex2 => {
                2.0 * PI * PI * (PI * x).sin() * (PI * y).sin() - (2.0 * PI * x).sin() * (2.0 * PI * y).sin() / a
            }
            ProblemName::Ex3 => {
                let (s2x, s2y, c2x, c2y) = (
                    (2.0 * PI * x).sin(),
                    (2.0 * PI * y).sin(),
                    (2.0 * PI * x).cos(),
                    (2.0 * PI * y).cos(),
                );
                let minus_lap_z = (x + y).exp()
                    * ((8.0 * PI * PI - 2.0) * s2x * s2y - 4.0 * PI * c2x * s2y - 4.0 * PI * s2x * c2y);
                let u = (4.0 * PI * x).sin() * (4.0 * PI * y).sin() * (x - y).exp() / a;
                minus_lap_z - u
            }
            ProblemName::Ex4 => 0.0,
        }
    }

    /// Target `g`, closed form.
    pub fn g(&self, x: f64, y: f64) -> f64 {
        match self.name {
            ProblemName::Ex1 => (PI * x).sin() + 4.0 * PI * PI * (2.0 * PI * x).sin(),
            ProblemName::Ex2 => {
                (PI * x).sin() * (PI * y).sin() + 8.0 * PI * PI * (2.0 * PI * x).sin() * (2.0 * PI * y).sin()
            }
            ProblemName::Ex3 => {
                let z = (2.0 * PI * x).sin() * (2.0 * PI * y).sin() * (x + y).exp();
                let (s4x, s4y, c4x, c4y) = (
                    (4.0 * PI * x).sin(),
                    (4.0 * PI * y).sin(),
                    (4.0 * PI * x).cos(),
                    (4.0 * PI * y).cos(),
                );
                z + (x - y).exp()
                    * ((32.0 * PI * PI - 2.0) * s4x * s4y - 8.0 * PI * c4x * s4y + 8.0 * PI * s4x * c4y)
            }
            ProblemName::Ex4 => {
                if (x - 0.5).abs() >= 0.25 && (y - 0.5).abs() >= 0.25 {
                    (PI * x).sin() * (PI * y).sin()
                } else {
                    0.0
                }
            }
        }
    }

    /// Compares the closed-form data with `-Δz - u` and `z - Δp` from the
    /// factor representation at 100 seeded random points.
    fn check_consistency(&self) -> Result<()> {
        let Some(ex) = self.exact else {
            return Ok(());
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..100 {
            let x: f64 = rng.random();
            let y: f64 = if self.dim() == Dim::Two { rng.random() } else { 0.0 };
            let f_ref = -ex.z.laplacian(x, y) - ex.u.value(x, y) / self.alpha;
            let g_ref = ex.z.value(x, y) - ex.u.laplacian(x, y);
            for (got, want, what) in [(self.f(x, y), f_ref, "f"), (self.g(x, y), g_ref, "g")] {
                if (got - want).abs() > 1e-10 * (1.0 + want.abs()) {
                    return Err(OcpError::Precondition(format!(
                        "{}: closed-form {what} disagrees with exact fields at ({x}, {y}): {got} vs {want}",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_grid(&self, grid: Grid) -> Result<()> {
        if grid.dim() != self.dim() {
            return Err(OcpError::InvalidGrid(format!(
                "{} is posed in {}D, grid is {}D",
                self.name,
                self.dim().as_usize(),
                grid.dim().as_usize()
            )));
        }
        Ok(())
    }

    /// Exact field sampled at the interior nodes.
    pub fn exact_on_grid(&self, field: Field, grid: Grid) -> Result<GridFunction> {
        self.check_grid(grid)?;
        let ex = *self.exact()?;
        let a = self.alpha;
        match field {
            Field::Z => GridFunction::sample(grid, |x, y| ex.z.value(x, y)),
            Field::U => GridFunction::sample(grid, |x, y| ex.u.value(x, y) / a),
            Field::P => GridFunction::sample(grid, |x, y| ex.u.value(x, y)),
        }
    }

    /// `f` and `g` on the closed grid, boundary samples included.
    pub fn data_on_grid(&self, grid: Grid) -> Result<crate::schemes::SchemeData> {
        self.check_grid(grid)?;
        Ok(crate::schemes::SchemeData {
            f: GridData::sample(grid, |x, y| self.f(x, y))?,
            g: GridData::sample(grid, |x, y| self.g(x, y))?,
        })
    }
}
