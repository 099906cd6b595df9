//! Finite-difference discretizations of the linear-quadratic elliptic
//! optimal control problem
//!
//! ```text
//! min  ½‖z - g‖² + (α/2)‖u‖²   subject to  -Δz = u + f in (0,1)^d,  z = 0 on ∂Ω
//! ```
//!
//! on uniform grids, in both the optimize-then-discretize and
//! discretize-then-optimize forms, together with the tools for convergence
//! studies on manufactured problems.

pub mod cli;
pub mod error;
pub mod fmt;
pub mod grid;
pub mod linsolve;
pub mod objective;
pub mod operators;
pub mod problems;
pub mod schemes;
pub mod sparse;
pub mod study;

pub use error::{OcpError, Result};
pub use grid::{Dim, Grid, GridData, GridFunction};
pub use linsolve::{SolveConfig, SolveMethod, SolveStats};
pub use objective::{ObjectiveSpec, Quadrature, Regularization};
pub use operators::DiscreteOperator;
pub use problems::{Field, ManufacturedProblem, ProblemName};
pub use schemes::{GammaRule, KktSystem, SchemeData, SchemeName, SchemeSpec, SystemForm};
