//! Discrete objective functionals and the discrete Lagrangian.
//!
//! All quadratures here are unscaled: the `h^dim` factor of the discrete
//! inner product is dropped, so weights are `I_h` (trapezoidal) or `Q_h`
//! (Simpson) and the optimality systems keep the same scaling as the
//! state equation.

use crate::error::{OcpError, Result};
use crate::grid::{Grid, GridFunction};
use crate::operators::{self, DiscreteOperator, MassBase};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quadrature {
    Trapezoidal,
    Simpson,
}

impl Quadrature {
    pub fn mass_base(self) -> MassBase {
        match self {
            Quadrature::Trapezoidal => MassBase::Identity,
            Quadrature::Simpson => MassBase::Simpson,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regularization {
    None,
    /// `γ ‖∇_h u‖²` added to the objective; the tracking term is untouched.
    UOnly(f64),
    /// Both mass weights `M` replaced by `M - γΔ_h`.
    Full(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveSpec {
    pub quadrature: Quadrature,
    pub alpha: f64,
    pub regularization: Regularization,
}

impl ObjectiveSpec {
    pub fn new(quadrature: Quadrature, alpha: f64, regularization: Regularization) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(OcpError::NonPositiveAlpha(alpha));
        }
        if let Regularization::UOnly(g) | Regularization::Full(g) = regularization {
            if !(g >= 0.0) || !g.is_finite() {
                return Err(OcpError::NegativeGamma(g));
            }
        }
        Ok(Self {
            quadrature,
            alpha,
            regularization,
        })
    }

    /// Hessian block of the tracking term, `M_z`.
    pub fn tracking_weight(&self, grid: Grid) -> Result<DiscreteOperator> {
        let gamma = match self.regularization {
            Regularization::Full(g) => g,
            _ => 0.0,
        };
        operators::reg_mass(self.quadrature.mass_base(), gamma, grid)
    }

    /// Hessian block of the control term, `M_u`.
    ///
    /// `α M_z` in general; for `UOnly(γ)` it is `α M + 2γ(-Δ_h)`, the
    /// gradient of `γ uᵀ(-Δ_h)u`. With `γ = 0` the extra term is skipped so
    /// the result is bit-identical to the unregularized weight.
    pub fn control_weight(&self, grid: Grid) -> Result<DiscreteOperator> {
        let base = self.tracking_weight(grid)?.scale(self.alpha);
        match self.regularization {
            Regularization::UOnly(g) if g > 0.0 => base.lin_comb(1.0, &operators::laplacian_5pt(grid), -2.0 * g),
            _ => Ok(base),
        }
    }
}

fn quad_form(op: &DiscreteOperator, v: &GridFunction) -> Result<f64> {
    let av = op.apply(v)?;
    Ok(v.values().iter().zip(av.values()).map(|(a, b)| a * b).sum())
}

fn dot(a: &GridFunction, b: &GridFunction) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum()
}

/// `½(z-g)ᵀM_z(z-g) + ½uᵀM_u u`, unscaled.
pub fn eval_objective(spec: &ObjectiveSpec, z: &GridFunction, u: &GridFunction, g: &GridFunction) -> Result<f64> {
    let grid = z.grid();
    if u.grid() != grid || g.grid() != grid {
        return Err(OcpError::GridMismatch);
    }
    let e = z.sub(g)?;
    let mz = spec.tracking_weight(grid)?;
    let mu = spec.control_weight(grid)?;
    Ok(0.5 * quad_form(&mz, &e)? + 0.5 * quad_form(&mu, u)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateOrder {
    Second,
    Fourth,
}

/// Discrete state equation `S z - C u = C f`: `S = -Δ_h, C = I` at second
/// order, `S = F_h, C = R_h` at fourth order.
#[derive(Clone, Debug)]
pub struct StateEquation {
    pub order: StateOrder,
    pub state_op: DiscreteOperator,
    pub coupling: DiscreteOperator,
}

impl StateEquation {
    pub fn new(order: StateOrder, grid: Grid) -> Self {
        let (state_op, coupling) = match order {
            StateOrder::Second => (operators::laplacian_5pt(grid).neg(), operators::identity(grid)),
            StateOrder::Fourth => (operators::compact_f(grid), operators::compact_r(grid)),
        };
        Self {
            order,
            state_op,
            coupling,
        }
    }

    /// `S z - C u - C f`.
    pub fn residual(&self, z: &GridFunction, u: &GridFunction, f: &GridFunction) -> Result<GridFunction> {
        let sz = self.state_op.apply(z)?;
        let cuf = self.coupling.apply(&u.add(f)?)?;
        sz.sub(&cuf)
    }
}

/// `J_h(z, u) + pᵀ(S z - C u - C f)`.
#[allow(clippy::too_many_arguments)]
pub fn eval_lagrangian(
    spec: &ObjectiveSpec,
    state: &StateEquation,
    z: &GridFunction,
    u: &GridFunction,
    p: &GridFunction,
    f: &GridFunction,
    g: &GridFunction,
) -> Result<f64> {
    if p.grid() != z.grid() || f.grid() != z.grid() {
        return Err(OcpError::GridMismatch);
    }
    let j = eval_objective(spec, z, u, g)?;
    Ok(j + dot(p, &state.residual(z, u, f)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn specs() -> Vec<ObjectiveSpec> {
        let mut out = Vec::new();
        for q in [Quadrature::Trapezoidal, Quadrature::Simpson] {
            for r in [Regularization::None, Regularization::UOnly(0.01), Regularization::Full(1.0)] {
                out.push(ObjectiveSpec::new(q, 0.1, r).unwrap());
            }
        }
        out
    }

    #[test]
    fn exact_tracking_without_control_is_zero() {
        let grid = Grid::two_d(8).unwrap();
        let g = GridFunction::sample(grid, |x, y| x * y).unwrap();
        let u = GridFunction::zeros(grid);
        for s in specs() {
            assert_eq!(eval_objective(&s, &g, &u, &g).unwrap(), 0.0);
        }
    }

    #[test]
    fn constant_offset_trapezoidal() {
        let grid = Grid::two_d(8).unwrap();
        let g = GridFunction::sample(grid, |x, y| x + y).unwrap();
        let z = g.add(&GridFunction::constant(grid, 0.3)).unwrap();
        let s = ObjectiveSpec::new(Quadrature::Trapezoidal, 1.0, Regularization::None).unwrap();
        let j = eval_objective(&s, &z, &GridFunction::zeros(grid), &g).unwrap();
        assert!((j - 0.5 * 0.09 * 49.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_objective_converges() {
        // ½∫∫ (1+x)² sin²(πx) sin²(πy) = (7/6 - 1/(4π²)) / 4
        let s = ObjectiveSpec::new(Quadrature::Simpson, 1.0, Regularization::None).unwrap();
        let exact = (7.0 / 6.0 - 0.25 / (PI * PI)) / 4.0;
        let err = |n: usize| {
            let grid = Grid::two_d(n).unwrap();
            let e = GridFunction::sample(grid, |x, y| (1.0 + x) * (PI * x).sin() * (PI * y).sin()).unwrap();
            let zero = GridFunction::zeros(grid);
            let j = eval_objective(&s, &e, &zero, &zero).unwrap() * grid.cell_measure();
            (j - exact).abs()
        };
        let (e1, e2) = (err(8), err(16));
        assert!((e1 / e2).log2() >= 2.0, "{e1} {e2}");
    }

    #[test]
    fn control_weight_zero_gamma_is_bitwise_plain() {
        let grid = Grid::two_d(8).unwrap();
        let a = ObjectiveSpec::new(Quadrature::Simpson, 0.1, Regularization::UOnly(0.0)).unwrap();
        let b = ObjectiveSpec::new(Quadrature::Simpson, 0.1, Regularization::None).unwrap();
        assert_eq!(a.control_weight(grid).unwrap().matrix(), b.control_weight(grid).unwrap().matrix());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            ObjectiveSpec::new(Quadrature::Simpson, 0.0, Regularization::None),
            Err(OcpError::NonPositiveAlpha(_))
        ));
        assert!(matches!(
            ObjectiveSpec::new(Quadrature::Simpson, 1.0, Regularization::Full(-1.0)),
            Err(OcpError::NegativeGamma(_))
        ));
        let s = ObjectiveSpec::new(Quadrature::Simpson, 1.0, Regularization::None).unwrap();
        let odd = Grid::two_d(7).unwrap();
        let v = GridFunction::zeros(odd);
        assert!(matches!(eval_objective(&s, &v, &v, &v), Err(OcpError::SimpsonParity(7))));
    }

    #[test]
    fn hessian_blocks_positive_definite() {
        use faer::Side;
        for s in specs() {
            let grid = Grid::two_d(8).unwrap();
            for op in [s.tracking_weight(grid).unwrap(), s.control_weight(grid).unwrap()] {
                let eig = op.matrix().to_faer_dense().self_adjoint_eigenvalues(Side::Lower).unwrap();
                assert!(eig[0] > 0.0);
            }
        }
    }

    #[test]
    fn lagrangian_reduces_to_objective() {
        let grid = Grid::two_d(6).unwrap();
        let s = specs()[1];
        let state = StateEquation::new(StateOrder::Fourth, grid);
        let z = GridFunction::sample(grid, |x, y| x * (1.0 - y)).unwrap();
        let u = GridFunction::sample(grid, |x, _| x).unwrap();
        let g = GridFunction::constant(grid, 0.2);
        let f = GridFunction::constant(grid, 1.0);
        let j = eval_objective(&s, &z, &u, &g).unwrap();
        let l = eval_lagrangian(&s, &state, &z, &u, &GridFunction::zeros(grid), &f, &g).unwrap();
        assert_eq!(j, l);
    }
}
