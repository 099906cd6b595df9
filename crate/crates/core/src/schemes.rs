//! The ten discrete optimality systems.
//!
//! Unknowns are ordered `(z, p, u)` and equations `(state, adjoint,
//! gradient)`. With `S = -Δ_h, C = I` (second order) or `S = F_h, C = R_h`
//! (fourth order), and tracking/control weights `M_z`, `M_u` from the
//! discrete objective, every discretize-then-optimize system reads
//!
//! ```text
//! [ S    0   -C  ] [z]   [ C f     ]
//! [ M_z  S    0  ] [p] = [ M_z g   ]
//! [ 0   -C   M_u ] [u]   [ 0       ]
//! ```
//!
//! The optimize-then-discretize schemes discretize the continuous
//! optimality system instead: `od2` is `do2-trap`, and `od4` applies the
//! compact pair to both PDEs while keeping `αu - p = 0` pointwise.
//!
//! Fourth-order right-hand sides apply `R_h` to the data with its boundary
//! samples. The adjoint target of the fourth-order discretize-then-optimize
//! schemes is `g̃ = g_h + R_h⁻¹ b_g`, where `b_g` collects the boundary part
//! of `R_h g`; then `R_h g̃` is the full compact average and `g̃ = g_h`
//! whenever `g` vanishes on the boundary.

use crate::error::{OcpError, Result};
use crate::grid::{Grid, GridData, GridFunction};
use crate::linsolve::{self, SolveConfig, SolveStats};
use crate::objective::{ObjectiveSpec, Quadrature, Regularization, StateEquation, StateOrder};
use crate::operators::{self, DiscreteOperator};
use crate::problems::Field;
use crate::sparse::CsrMatrix;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchemeName {
    OD2,
    OD4,
    DO2Trap,
    DO2Simp,
    DO4Trap,
    DO4Simp,
    DO2TrapReg,
    DO2SimpReg,
    DO4TrapReg,
    DO4SimpReg,
}

impl SchemeName {
    pub const ALL: [SchemeName; 10] = [
        SchemeName::OD2,
        SchemeName::OD4,
        SchemeName::DO2Trap,
        SchemeName::DO2Simp,
        SchemeName::DO4Trap,
        SchemeName::DO4Simp,
        SchemeName::DO2TrapReg,
        SchemeName::DO2SimpReg,
        SchemeName::DO4TrapReg,
        SchemeName::DO4SimpReg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeName::OD2 => "od2",
            SchemeName::OD4 => "od4",
            SchemeName::DO2Trap => "do2-trap",
            SchemeName::DO2Simp => "do2-simp",
            SchemeName::DO4Trap => "do4-trap",
            SchemeName::DO4Simp => "do4-simp",
            SchemeName::DO2TrapReg => "do2-trap-reg",
            SchemeName::DO2SimpReg => "do2-simp-reg",
            SchemeName::DO4TrapReg => "do4-trap-reg",
            SchemeName::DO4SimpReg => "do4-simp-reg",
        }
    }

    pub fn order(self) -> StateOrder {
        use SchemeName::*;
        match self {
            OD2 | DO2Trap | DO2Simp | DO2TrapReg | DO2SimpReg => StateOrder::Second,
            _ => StateOrder::Fourth,
        }
    }

    pub fn is_od(self) -> bool {
        matches!(self, SchemeName::OD2 | SchemeName::OD4)
    }

    pub fn is_reg(self) -> bool {
        use SchemeName::*;
        matches!(self, DO2TrapReg | DO2SimpReg | DO4TrapReg | DO4SimpReg)
    }

    /// Objective quadrature; `None` for the optimize-then-discretize schemes.
    pub fn quadrature(self) -> Option<Quadrature> {
        use SchemeName::*;
        match self {
            OD2 | OD4 => None,
            DO2Trap | DO4Trap | DO2TrapReg | DO4TrapReg => Some(Quadrature::Trapezoidal),
            _ => Some(Quadrature::Simpson),
        }
    }

    /// Same discretization without the `-γΔ_h` terms.
    pub fn unregularized(self) -> SchemeName {
        use SchemeName::*;
        match self {
            DO2TrapReg => DO2Trap,
            DO2SimpReg => DO2Simp,
            DO4TrapReg => DO4Trap,
            DO4SimpReg => DO4Simp,
            other => other,
        }
    }

    pub fn default_gamma_rule(self) -> GammaRule {
        match self.order() {
            StateOrder::Second => GammaRule::Fixed(1.0),
            StateOrder::Fourth => GammaRule::InverseHSquared,
        }
    }

    /// The system in operator form, for help output.
    pub fn equations(self) -> &'static str {
        use SchemeName::*;
        match self {
            OD2 => "-Δz - u = f,  -Δp + z = g,  αu - p = 0",
            OD4 => "Fz - Ru = Rf,  Fp + Rz = Rg,  αu - p = 0",
            DO2Trap => "-Δz - u = f,  -Δp + z = g,  αu - p = 0",
            DO2Simp => "-Δz - u = f,  -Δp + Qz = Qg,  αQu - p = 0",
            DO4Trap => "Fz - Ru = Rf,  Fp + z = g,  αu - Rp = 0",
            DO4Simp => "Fz - Ru = Rf,  Fp + Qz = Qg,  αQu - Rp = 0",
            DO2TrapReg => "-Δz - u = f,  -Δp + Mz = Mg,  αMu - p = 0,  M = I - γΔ",
            DO2SimpReg => "-Δz - u = f,  -Δp + Mz = Mg,  αMu - p = 0,  M = Q - γΔ",
            DO4TrapReg => "Fz - Ru = Rf,  Fp + Mz = Mg,  αMu - Rp = 0,  M = I - γΔ",
            DO4SimpReg => "Fz - Ru = Rf,  Fp + Mz = Mg,  αMu - Rp = 0,  M = Q - γΔ",
        }
    }
}

impl Serialize for SchemeName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl fmt::Display for SchemeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for SchemeName {
    type Err = OcpError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        SchemeName::ALL
            .into_iter()
            .find(|n| n.as_str() == key)
            .ok_or_else(|| OcpError::UnknownName {
                kind: "scheme",
                name: s.to_string(),
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum GammaRule {
    Fixed(f64),
    InverseHSquared,
}

impl GammaRule {
    pub fn resolve(self, grid: Grid) -> f64 {
        match self {
            GammaRule::Fixed(g) => g,
            GammaRule::InverseHSquared => 1.0 / (grid.h() * grid.h()),
        }
    }
}

impl fmt::Display for GammaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaRule::Fixed(g) => write!(f, "{g}"),
            GammaRule::InverseHSquared => f.write_str("h^-2"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SchemeSpec {
    pub name: SchemeName,
    pub alpha: f64,
    /// Only read by the regularized schemes.
    pub gamma_rule: GammaRule,
    /// `γ` of an extra `γ‖∇_h u‖²` objective term (unregularized
    /// discretize-then-optimize schemes only).
    pub control_h1_penalty: Option<f64>,
}

impl SchemeSpec {
    pub fn new(name: SchemeName, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(OcpError::NonPositiveAlpha(alpha));
        }
        Ok(Self {
            name,
            alpha,
            gamma_rule: name.default_gamma_rule(),
            control_h1_penalty: None,
        })
    }

    pub fn with_gamma_rule(mut self, rule: GammaRule) -> Result<Self> {
        if let GammaRule::Fixed(g) = rule {
            if !(g >= 0.0) || !g.is_finite() {
                return Err(OcpError::NegativeGamma(g));
            }
        }
        self.gamma_rule = rule;
        Ok(self)
    }

    pub fn with_control_penalty(mut self, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(OcpError::NegativeGamma(gamma));
        }
        if self.name.is_od() || self.name.is_reg() {
            return Err(OcpError::Precondition(format!(
                "the control-only gradient penalty applies to unregularized DO schemes, not {}",
                self.name
            )));
        }
        self.control_h1_penalty = Some(gamma);
        Ok(self)
    }

    /// Resolved `γ` on `grid`, for regularized schemes.
    pub fn gamma(&self, grid: Grid) -> Option<f64> {
        self.name.is_reg().then(|| self.gamma_rule.resolve(grid))
    }

    pub fn objective(&self, grid: Grid) -> Result<Option<ObjectiveSpec>> {
        let Some(q) = self.name.quadrature() else {
            return Ok(None);
        };
        let reg = match (self.gamma(grid), self.control_h1_penalty) {
            (Some(g), _) => Regularization::Full(g),
            (None, Some(g)) => Regularization::UOnly(g),
            (None, None) => Regularization::None,
        };
        ObjectiveSpec::new(q, self.alpha, reg).map(Some)
    }
}

/// Problem data on the closed grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeData {
    pub f: GridData,
    pub g: GridData,
}

impl SchemeData {
    pub fn zeros(grid: Grid) -> Self {
        let z = GridData::from_interior(&GridFunction::zeros(grid));
        Self { f: z.clone(), g: z }
    }

    pub fn from_interior(f: &GridFunction, g: &GridFunction) -> Self {
        Self {
            f: GridData::from_interior(f),
            g: GridData::from_interior(g),
        }
    }

    pub fn grid(&self) -> Grid {
        self.f.grid()
    }
}

/// A block linear system over interior grid functions.
#[derive(Clone, Debug)]
pub struct KktSystem {
    pub grid: Grid,
    /// `blocks[row][col]`; `None` is a zero block.
    pub blocks: Vec<Vec<Option<DiscreteOperator>>>,
    pub rhs: Vec<f64>,
    /// Unknown field of each block column.
    pub layout: Vec<Field>,
}

impl KktSystem {
    pub fn new(
        grid: Grid,
        blocks: Vec<Vec<Option<DiscreteOperator>>>,
        rhs: Vec<f64>,
        layout: Vec<Field>,
    ) -> Result<Self> {
        let k = layout.len();
        let n = grid.interior_count();
        if blocks.len() != k || blocks.iter().any(|r| r.len() != k) {
            return Err(OcpError::DimensionMismatch {
                expected: k,
                found: blocks.len(),
            });
        }
        if rhs.len() != k * n {
            return Err(OcpError::DimensionMismatch {
                expected: k * n,
                found: rhs.len(),
            });
        }
        for b in blocks.iter().flatten().flatten() {
            if b.grid() != grid || !b.matrix().is_square() {
                return Err(OcpError::GridMismatch);
            }
        }
        Ok(Self {
            grid,
            blocks,
            rhs,
            layout,
        })
    }

    pub fn block_size(&self) -> usize {
        self.grid.interior_count()
    }

    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    pub fn block(&self, row: usize, col: usize) -> Option<&DiscreteOperator> {
        self.blocks[row][col].as_ref()
    }

    /// The assembled sparse matrix.
    pub fn matrix(&self) -> CsrMatrix {
        let refs: Vec<Vec<Option<&CsrMatrix>>> = self
            .blocks
            .iter()
            .map(|r| r.iter().map(|b| b.as_ref().map(|b| b.matrix())).collect())
            .collect();
        let sizes = vec![self.block_size(); self.layout.len()];
        CsrMatrix::from_blocks(&refs, &sizes, &sizes).expect("blocks validated at construction")
    }

    /// Block matrix-vector product.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.block_size();
        let mut y = vec![0.0; self.len()];
        let mut tmp = vec![0.0; n];
        for (bi, row) in self.blocks.iter().enumerate() {
            for (bj, b) in row.iter().enumerate() {
                if let Some(b) = b {
                    b.matrix().matvec_into(&x[bj * n..(bj + 1) * n], &mut tmp);
                    for (yi, t) in y[bi * n..(bi + 1) * n].iter_mut().zip(&tmp) {
                        *yi += t;
                    }
                }
            }
        }
        y
    }

    /// `A x - b`.
    pub fn residual_of(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.apply(x);
        for (ri, bi) in r.iter_mut().zip(&self.rhs) {
            *ri -= bi;
        }
        r
    }

    /// The solution block for `field`.
    pub fn field(&self, x: &[f64], field: Field) -> Option<GridFunction> {
        let n = self.block_size();
        let j = self.layout.iter().position(|&f| f == field)?;
        GridFunction::new(self.grid, x[j * n..(j + 1) * n].to_vec()).ok()
    }

    /// Stacks per-field values in layout order.
    pub fn stack(&self, fields: &[(Field, &GridFunction)]) -> Result<Vec<f64>> {
        let mut x = Vec::with_capacity(self.len());
        for f in &self.layout {
            let v = fields
                .iter()
                .find(|(g, _)| g == f)
                .ok_or_else(|| OcpError::Precondition(format!("missing field {}", f.as_str())))?
                .1;
            if v.grid() != self.grid {
                return Err(OcpError::GridMismatch);
            }
            x.extend_from_slice(v.values());
        }
        Ok(x)
    }
}

struct Parts {
    state: StateEquation,
    mz: DiscreteOperator,
    mu: DiscreteOperator,
}

fn parts(spec: &SchemeSpec, grid: Grid) -> Result<Parts> {
    let state = StateEquation::new(spec.name.order(), grid);
    let (mz, mu) = match spec.objective(grid)? {
        Some(obj) => (obj.tracking_weight(grid)?, obj.control_weight(grid)?),
        None => (operators::identity(grid), operators::identity(grid).scale(spec.alpha)),
    };
    Ok(Parts { state, mz, mu })
}

fn check_data(grid: Grid, data: &SchemeData) -> Result<()> {
    if data.f.grid() != grid || data.g.grid() != grid {
        return Err(OcpError::GridMismatch);
    }
    Ok(())
}

/// `g_h + R_h⁻¹ b_g`: the interior target whose compact average equals the
/// full-stencil average of `g`.
pub fn boundary_corrected_target(g: &GridData) -> Result<GridFunction> {
    let inner = g.interior();
    if !g.has_nonzero_boundary() {
        return Ok(inner);
    }
    let r = operators::compact_r(g.grid());
    let b = r.boundary_contribution(g)?;
    inner.add(&linsolve::fast_diag_apply_inverse(&r, &b)?)
}

struct Rhs {
    state: GridFunction,
    /// Adjoint right-hand side of the full system.
    adjoint: GridFunction,
    /// Adjoint right-hand side of the reduced system.
    reduced: GridFunction,
}

fn right_hand_sides(spec: &SchemeSpec, p: &Parts, data: &SchemeData) -> Result<Rhs> {
    let c = &p.state.coupling;
    let (state, gi) = match spec.name.order() {
        StateOrder::Second => (data.f.interior(), data.g.interior()),
        StateOrder::Fourth => (c.apply_with_boundary(&data.f)?, boundary_corrected_target(&data.g)?),
    };
    let (adjoint, reduced) = match (spec.name.is_od(), spec.name.order()) {
        (true, StateOrder::Second) => (gi.clone(), gi),
        (true, StateOrder::Fourth) => {
            let rg = c.apply_with_boundary(&data.g)?;
            (rg.clone(), rg)
        }
        (false, StateOrder::Second) => {
            let mg = p.mz.apply(&gi)?;
            (mg.clone(), mg)
        }
        (false, StateOrder::Fourth) => {
            let mg = p.mz.apply(&gi)?;
            let rmg = c.apply(&mg)?;
            (mg, rmg)
        }
    };
    Ok(Rhs {
        state,
        adjoint,
        reduced,
    })
}

fn stacked(parts: &[&GridFunction]) -> Vec<f64> {
    parts.iter().flat_map(|v| v.values().iter().copied()).collect()
}

/// Assembles the three-field system in unknown order `(z, p, u)`.
pub fn assemble(spec: &SchemeSpec, grid: Grid, data: &SchemeData) -> Result<KktSystem> {
    check_data(grid, data)?;
    let p = parts(spec, grid)?;
    let rhs = right_hand_sides(spec, &p, data)?;
    let s = p.state.state_op.clone();
    let c = p.state.coupling.clone();
    let id = operators::identity(grid);
    let blocks = if spec.name.is_od() {
        // the coupling of the adjoint equation to z is C, the gradient
        // equation stays pointwise
        vec![
            vec![Some(s.clone()), None, Some(c.neg())],
            vec![Some(c), Some(s), None],
            vec![None, Some(id.neg()), Some(id.scale(spec.alpha))],
        ]
    } else {
        vec![
            vec![Some(s.clone()), None, Some(c.neg())],
            vec![Some(p.mz), Some(s), None],
            vec![None, Some(c.neg()), Some(p.mu)],
        ]
    };
    let zero = GridFunction::zeros(grid);
    KktSystem::new(
        grid,
        blocks,
        stacked(&[&rhs.state, &rhs.adjoint, &zero]),
        vec![Field::Z, Field::P, Field::U],
    )
}

/// Assembles the two-field system in `(z, u)` obtained by eliminating `p`.
///
/// Second order: `p = M_u u`, giving `[[S, -I], [M_z, S M_u]]`. Fourth
/// order: `R p = M_u u`; multiplying the adjoint row by `R_h` and using
/// `F_h R_h = R_h F_h` gives `[[F, -R], [R M_z, F M_u]]`. The
/// optimize-then-discretize schemes have `M_z = I, M_u = αI` with the
/// adjoint coupling `C` in place of `C M_z`.
pub fn assemble_reduced(spec: &SchemeSpec, grid: Grid, data: &SchemeData) -> Result<KktSystem> {
    check_data(grid, data)?;
    let p = parts(spec, grid)?;
    let rhs = right_hand_sides(spec, &p, data)?;
    let s = p.state.state_op.clone();
    let c = p.state.coupling.clone();
    let (b10, b11) = match (spec.name.is_od(), spec.name.order()) {
        (true, _) => (c.clone(), s.scale(spec.alpha)),
        (false, StateOrder::Second) => (p.mz.clone(), s.compose(&p.mu)?),
        (false, StateOrder::Fourth) => (c.compose(&p.mz)?, s.compose(&p.mu)?),
    };
    KktSystem::new(
        grid,
        vec![vec![Some(s), Some(c.neg())], vec![Some(b10), Some(b11)]],
        stacked(&[&rhs.state, &rhs.reduced]),
        vec![Field::Z, Field::U],
    )
}

/// Stacked residual `A x - b` of `system` at the given fields.
pub fn residual(
    system: &KktSystem,
    z: &GridFunction,
    u: &GridFunction,
    p: Option<&GridFunction>,
) -> Result<Vec<f64>> {
    let mut fields = vec![(Field::Z, z), (Field::U, u)];
    if let Some(p) = p {
        fields.push((Field::P, p));
    }
    Ok(system.residual_of(&system.stack(&fields)?))
}

/// Adjoint from the gradient equation: `p = αu` (OD), `p = M_u u` (second
/// order DO), `p = R_h⁻¹ M_u u` (fourth order DO).
pub fn recover_adjoint(spec: &SchemeSpec, z: &GridFunction, u: &GridFunction) -> Result<GridFunction> {
    let grid = u.grid();
    if z.grid() != grid {
        return Err(OcpError::GridMismatch);
    }
    if spec.name.is_od() {
        return Ok(u.scale(spec.alpha));
    }
    let mu = parts(spec, grid)?.mu;
    let mu_u = mu.apply(u)?;
    match spec.name.order() {
        StateOrder::Second => Ok(mu_u),
        StateOrder::Fourth => linsolve::fast_diag_apply_inverse(&operators::compact_r(grid), &mu_u),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
pub enum SystemForm {
    #[default]
    Full,
    Reduced,
}

#[derive(Clone, Debug)]
pub struct SchemeSolution {
    pub z: GridFunction,
    pub u: GridFunction,
    pub p: GridFunction,
    pub stats: SolveStats,
}

/// Assembles and solves a scheme; in reduced form the adjoint is recovered
/// afterwards.
pub fn solve_scheme(
    spec: &SchemeSpec,
    grid: Grid,
    data: &SchemeData,
    config: &SolveConfig,
    form: SystemForm,
) -> Result<SchemeSolution> {
    let system = match form {
        SystemForm::Full => assemble(spec, grid, data)?,
        SystemForm::Reduced => assemble_reduced(spec, grid, data)?,
    };
    let sol = linsolve::solve(&system, config)?;
    let z = system.field(&sol.x, Field::Z).expect("z in layout");
    let u = system.field(&sol.x, Field::U).expect("u in layout");
    let p = match system.field(&sol.x, Field::P) {
        Some(p) => p,
        None => recover_adjoint(spec, &z, &u)?,
    };
    Ok(SchemeSolution {
        z,
        u,
        p,
        stats: sol.stats,
    })
}

/// Largest `n` accepted by dense audits.
pub const DENSE_LIMIT: usize = 32;

/// `‖S_h - I‖_∞` for `S_h = Δ_h⁻¹ M⁻¹ Δ_h M`, `M = Q_h - γΔ_h`: the factor
/// separating the reduced regularized Simpson system from the reduced
/// `od2` system.
pub fn filter_deviation(grid: Grid, gamma: f64) -> Result<f64> {
    if grid.n() > DENSE_LIMIT {
        return Err(OcpError::DenseLimit {
            n: grid.n(),
            limit: DENSE_LIMIT,
        });
    }
    use faer::linalg::solvers::Solve;
    let m = operators::reg_mass(crate::operators::MassBase::Simpson, gamma, grid)?;
    let lap = operators::laplacian_5pt(grid);
    let lm = lap.matrix().matmul(m.matrix())?.to_faer_dense();
    let inner = m.matrix().to_faer_dense().partial_piv_lu().solve(&lm);
    let s = lap.matrix().to_faer_dense().partial_piv_lu().solve(&inner);
    let k = grid.interior_count();
    let norm = (0..k)
        .map(|i| (0..k).map(|j| (s[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    Ok(norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsolve::SolveMethod;

    fn random_data(grid: Grid, seed: u64) -> SchemeData {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut v = || {
            GridFunction::new(grid, (0..grid.interior_count()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
        };
        let f = v();
        let g = v();
        SchemeData::from_interior(&f, &g)
    }

    #[test]
    fn names_round_trip() {
        for s in SchemeName::ALL {
            assert_eq!(s.as_str().parse::<SchemeName>().unwrap(), s);
        }
        assert!(matches!("do3-trap".parse::<SchemeName>(), Err(OcpError::UnknownName { .. })));
    }

    #[test]
    fn od2_block_layout() {
        let grid = Grid::two_d(6).unwrap();
        let spec = SchemeSpec::new(SchemeName::OD2, 0.1).unwrap();
        let sys = assemble(&spec, grid, &random_data(grid, 1)).unwrap();
        let lap = operators::laplacian_5pt(grid);
        let id = CsrMatrix::identity(grid.interior_count());
        assert_eq!(sys.block(0, 0).unwrap().matrix(), lap.neg().matrix());
        assert!(sys.block(0, 1).is_none());
        assert_eq!(sys.block(0, 2).unwrap().matrix(), &id.scale(-1.0));
        assert_eq!(sys.block(1, 0).unwrap().matrix(), &id);
        assert_eq!(sys.block(2, 1).unwrap().matrix(), &id.scale(-1.0));
        assert_eq!(sys.block(2, 2).unwrap().matrix(), &id.scale(0.1));
        assert_eq!(sys.layout, vec![Field::Z, Field::P, Field::U]);
    }

    #[test]
    fn do2_simp_gradient_row() {
        let grid = Grid::two_d(6).unwrap();
        let spec = SchemeSpec::new(SchemeName::DO2Simp, 0.1).unwrap();
        let sys = assemble(&spec, grid, &random_data(grid, 2)).unwrap();
        let q = operators::simpson_q(grid).unwrap();
        assert_eq!(sys.block(2, 2).unwrap().matrix(), &q.matrix().scale(0.1));
        assert_eq!(sys.block(2, 1).unwrap().matrix(), &CsrMatrix::identity(25).scale(-1.0));
    }

    #[test]
    fn simpson_parity_is_reported() {
        let grid = Grid::two_d(7).unwrap();
        let spec = SchemeSpec::new(SchemeName::DO4SimpReg, 0.1).unwrap();
        let err = assemble(&spec, grid, &SchemeData::zeros(grid)).unwrap_err();
        assert!(matches!(err, OcpError::SimpsonParity(7)));
    }

    #[test]
    fn regularized_with_zero_gamma_matches_plain() {
        let grid = Grid::two_d(8).unwrap();
        let data = random_data(grid, 3);
        for name in SchemeName::ALL.into_iter().filter(|n| n.is_reg()) {
            let spec = SchemeSpec::new(name, 0.1)
                .unwrap()
                .with_gamma_rule(GammaRule::Fixed(0.0))
                .unwrap();
            let plain = SchemeSpec::new(name.unregularized(), 0.1).unwrap();
            let a = assemble(&spec, grid, &data).unwrap();
            let b = assemble(&plain, grid, &data).unwrap();
            assert_eq!(a.matrix(), b.matrix(), "{name}");
            assert_eq!(a.rhs, b.rhs);
        }
    }

    #[test]
    fn hessian_blocks_symmetric_and_constraint_transposed() {
        let grid = Grid::two_d(8).unwrap();
        for name in SchemeName::ALL.into_iter().filter(|n| !n.is_od()) {
            let spec = SchemeSpec::new(name, 0.1).unwrap();
            let sys = assemble(&spec, grid, &SchemeData::zeros(grid)).unwrap();
            assert!(sys.block(1, 0).unwrap().is_symmetric());
            assert!(sys.block(2, 2).unwrap().is_symmetric());
            let a = sys.block(0, 0).unwrap().matrix();
            assert_eq!(&a.transpose(), sys.block(1, 1).unwrap().matrix());
            assert_eq!(
                &sys.block(0, 2).unwrap().matrix().transpose(),
                sys.block(2, 1).unwrap().matrix()
            );
        }
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let grid = Grid::two_d(8).unwrap();
        let cfg = SolveConfig::default();
        for name in SchemeName::ALL {
            let spec = SchemeSpec::new(name, 0.1).unwrap();
            let sol = solve_scheme(&spec, grid, &SchemeData::zeros(grid), &cfg, SystemForm::Full).unwrap();
            assert_eq!(sol.z.norm_inf() + sol.u.norm_inf() + sol.p.norm_inf(), 0.0);
        }
    }

    #[test]
    fn reduced_matches_full() {
        let grid = Grid::two_d(10).unwrap();
        let data = random_data(grid, 4);
        let cfg = SolveConfig::default();
        for name in SchemeName::ALL {
            let spec = SchemeSpec::new(name, 0.1).unwrap();
            let full = solve_scheme(&spec, grid, &data, &cfg, SystemForm::Full).unwrap();
            let red = solve_scheme(&spec, grid, &data, &cfg, SystemForm::Reduced).unwrap();
            let scale = 1.0 + full.u.norm_inf();
            assert!(full.z.sub(&red.z).unwrap().norm_inf() <= 1e-9 * scale, "{name}");
            assert!(full.u.sub(&red.u).unwrap().norm_inf() <= 1e-9 * scale, "{name}");
            assert!(full.p.sub(&red.p).unwrap().norm_inf() <= 1e-9 * scale, "{name}");
        }
    }

    #[test]
    fn do4_trap_reduced_equals_od4_reduced() {
        let grid = Grid::two_d(12).unwrap();
        let data = random_data(grid, 5);
        let a = assemble_reduced(&SchemeSpec::new(SchemeName::DO4Trap, 0.1).unwrap(), grid, &data).unwrap();
        let b = assemble_reduced(&SchemeSpec::new(SchemeName::OD4, 0.1).unwrap(), grid, &data).unwrap();
        let (ma, mb) = (a.matrix(), b.matrix());
        assert!(ma.max_abs_diff(&mb).unwrap() <= 1e-12 * mb.max_abs());
        let rhs_diff = a.rhs.iter().zip(&b.rhs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(rhs_diff <= 1e-12);
    }

    #[test]
    fn adjoint_recovery() {
        let grid = Grid::two_d(8).unwrap();
        let u = GridFunction::sample(grid, |x, y| x * y * (1.0 - x)).unwrap();
        let z = GridFunction::zeros(grid);
        let od = SchemeSpec::new(SchemeName::OD2, 0.1).unwrap();
        assert_eq!(recover_adjoint(&od, &z, &u).unwrap(), u.scale(0.1));
        let spec = SchemeSpec::new(SchemeName::DO4Trap, 0.1).unwrap();
        let p = recover_adjoint(&spec, &z, &u).unwrap();
        let rp = operators::compact_r(grid).apply(&p).unwrap();
        assert!(rp.sub(&u.scale(0.1)).unwrap().norm_inf() < 1e-14);
        assert_eq!(recover_adjoint(&spec, &z, &GridFunction::zeros(grid)).unwrap().norm_inf(), 0.0);
    }

    #[test]
    fn control_penalty_validation() {
        let s = SchemeSpec::new(SchemeName::DO2Simp, 0.1).unwrap();
        assert!(s.with_control_penalty(0.01).is_ok());
        assert!(s.with_control_penalty(-1.0).is_err());
        assert!(SchemeSpec::new(SchemeName::OD2, 0.1).unwrap().with_control_penalty(0.1).is_err());
        assert!(SchemeSpec::new(SchemeName::OD2, 0.0).is_err());
    }

    #[test]
    fn boundary_corrected_target_restores_full_average() {
        let grid = Grid::two_d(10).unwrap();
        let g = GridData::sample(grid, |x, y| (x + 2.0 * y).exp()).unwrap();
        let gt = boundary_corrected_target(&g).unwrap();
        let r = operators::compact_r(grid);
        let lhs = r.apply(&gt).unwrap();
        let rhs = r.apply_with_boundary(&g).unwrap();
        assert!(lhs.sub(&rhs).unwrap().norm_inf() < 1e-12);
        let zero_bd = GridData::from_interior(&g.interior());
        assert_eq!(boundary_corrected_target(&zero_bd).unwrap(), g.interior());
    }

    #[test]
    fn fast_diag_handles_trapezoidal_reduced_systems() {
        let grid = Grid::two_d(12).unwrap();
        let data = random_data(grid, 6);
        let direct = SolveConfig::default();
        let fast = SolveConfig {
            method: SolveMethod::FastDiag,
            ..SolveConfig::default()
        };
        for name in [SchemeName::OD2, SchemeName::OD4, SchemeName::DO4Trap, SchemeName::DO4TrapReg] {
            let spec = SchemeSpec::new(name, 0.1).unwrap();
            let a = solve_scheme(&spec, grid, &data, &direct, SystemForm::Reduced).unwrap();
            let b = solve_scheme(&spec, grid, &data, &fast, SystemForm::Reduced).unwrap();
            assert!(a.u.sub(&b.u).unwrap().norm_inf() <= 1e-9 * a.u.norm_inf(), "{name}");
        }
    }

    #[test]
    fn filter_deviation_positive_and_dense_limited() {
        let d = filter_deviation(Grid::two_d(8).unwrap(), 1.0).unwrap();
        assert!(d > 0.0);
        assert!(matches!(
            filter_deviation(Grid::two_d(40).unwrap(), 1.0),
            Err(OcpError::DenseLimit { .. })
        ));
    }
}
