use elliptic_ocp::linsolve::{self, SolveConfig, SolveMethod};
use elliptic_ocp::operators;
use elliptic_ocp::schemes::{self, GammaRule, SchemeData, SchemeName, SchemeSpec, SystemForm};
use elliptic_ocp::study;
use elliptic_ocp::{Grid, GridFunction, ManufacturedProblem, ProblemName};
use proptest::prelude::*;
use std::f64::consts::PI;

fn even_n() -> impl Strategy<Value = usize> {
    (2usize..7).prop_map(|k| 2 * k)
}

fn field_on(grid: Grid) -> impl Strategy<Value = GridFunction> {
    proptest::collection::vec(-5.0f64..5.0, grid.interior_count())
        .prop_map(move |v| GridFunction::new(grid, v).unwrap())
}

fn scheme() -> impl Strategy<Value = SchemeName> {
    proptest::sample::select(SchemeName::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operators_are_linear_and_symmetric(
        (a, b) in even_n().prop_flat_map(|n| {
            let g = Grid::two_d(n).unwrap();
            (field_on(g), field_on(g))
        }),
        s in -2.0f64..2.0,
    ) {
        let grid = a.grid();
        let ops = [
            operators::laplacian_5pt(grid),
            operators::compact_f(grid),
            operators::compact_r(grid),
            operators::simpson_q(grid).unwrap(),
            operators::reg_mass(operators::MassBase::Simpson, 0.7, grid).unwrap(),
        ];
        for op in &ops {
            prop_assert!(op.is_symmetric());
            let lhs = op.apply(&a.scale(s).add(&b).unwrap()).unwrap();
            let rhs = op.apply(&a).unwrap().scale(s).add(&op.apply(&b).unwrap()).unwrap();
            let scale = op.matrix().max_abs() * (a.norm_inf() * s.abs() + b.norm_inf()) * 9.0;
            prop_assert!(lhs.sub(&rhs).unwrap().norm_inf() <= 1e-14 * scale.max(1.0));
            // (Av, w) = (v, Aw)
            let x = op.apply(&a).unwrap().inner_product(&b).unwrap();
            let y = a.inner_product(&op.apply(&b).unwrap()).unwrap();
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0));
        }
    }

    #[test]
    fn zero_gamma_regularization_is_exact(name in scheme(), alpha in 1e-3f64..10.0, n in even_n()) {
        prop_assume!(name.is_reg());
        let grid = Grid::two_d(n).unwrap();
        let data = SchemeData::zeros(grid);
        let reg = SchemeSpec::new(name, alpha).unwrap().with_gamma_rule(GammaRule::Fixed(0.0)).unwrap();
        let plain = SchemeSpec::new(name.unregularized(), alpha).unwrap();
        let a = schemes::assemble(&reg, grid, &data).unwrap().matrix();
        let b = schemes::assemble(&plain, grid, &data).unwrap().matrix();
        prop_assert!(a == b);
    }

    #[test]
    fn solves_satisfy_residual_contract(
        name in scheme(),
        alpha in 1e-3f64..10.0,
        (f, g) in even_n().prop_flat_map(|n| {
            let grid = Grid::two_d(n).unwrap();
            (field_on(grid), field_on(grid))
        }),
    ) {
        let grid = f.grid();
        let spec = SchemeSpec::new(name, alpha).unwrap();
        let data = SchemeData::from_interior(&f, &g);
        let cfg = SolveConfig::default();
        let sys = schemes::assemble(&spec, grid, &data).unwrap();
        let full = schemes::solve_scheme(&spec, grid, &data, &cfg, SystemForm::Full).unwrap();
        let res = schemes::residual(&sys, &full.z, &full.u, Some(&full.p)).unwrap();
        let rn = res.iter().map(|r| r * r).sum::<f64>().sqrt();
        let bn = sys.rhs.iter().map(|r| r * r).sum::<f64>().sqrt();
        prop_assert!(rn <= 1e-10 * bn.max(1e-300));
        let red = schemes::solve_scheme(&spec, grid, &data, &cfg, SystemForm::Reduced).unwrap();
        let scale = full.u.norm_inf().max(1e-300);
        prop_assert!(red.u.sub(&full.u).unwrap().norm_inf() <= 1e-8 * scale);
    }

    #[test]
    fn oscillation_index_is_a_fraction(v in even_n().prop_flat_map(|n| field_on(Grid::two_d(n).unwrap())), c in 0.1f64..100.0) {
        let i = study::oscillation_index(&v);
        prop_assert!((0.0..=1.0).contains(&i));
        prop_assert!((study::oscillation_index(&v.scale(c)) - i).abs() <= 1e-12);
        let e = study::spectral_energy_fraction(&v);
        prop_assert!((0.0..=1.0).contains(&e));
    }

    #[test]
    fn one_d_norm_bound(v in proptest::collection::vec(-5.0f64..5.0, 1..40)) {
        let grid = Grid::one_d(v.len() + 1).unwrap();
        let v = GridFunction::new(grid, v).unwrap();
        prop_assert!(v.norm_l2() <= v.norm_inf() + 1e-15);
    }
}

/// `(I - Q_h)` applied to smooth samples does not shrink with `h`.
#[test]
fn simpson_inconsistency_witness() {
    let w = |n: usize| {
        let grid = Grid::two_d(n).unwrap();
        let s = GridFunction::sample(grid, |x, y| (PI * x).sin() * (PI * y).sin()).unwrap();
        let q = operators::simpson_q(grid).unwrap();
        s.sub(&q.apply(&s).unwrap()).unwrap().norm_inf()
    };
    let (a, b) = (w(20), w(200));
    assert!(b >= 0.9 * a, "{a} -> {b}");
    assert!(a > 0.1);
}

/// `‖(R_h - I)p‖_∞ = O(h²)` for smooth `p`.
#[test]
fn compact_r_perturbation_witness() {
    let w = |n: usize| {
        let grid = Grid::two_d(n).unwrap();
        let s = GridFunction::sample(grid, |x, y| (2.0 * PI * x).sin() * (2.0 * PI * y).sin()).unwrap();
        let r = operators::compact_r(grid);
        r.apply(&s).unwrap().sub(&s).unwrap().norm_inf()
    };
    let order = study::observed_order(w(20), w(40), 20, 40);
    assert!((order - 2.0).abs() <= 0.3, "{order}");
}

/// Different methods agree to ten times the residual tolerance.
#[test]
fn solution_is_unique_across_methods() {
    let p = ManufacturedProblem::make(ProblemName::Ex2);
    let grid = Grid::two_d(16).unwrap();
    let data = p.data_on_grid(grid).unwrap();
    for name in [SchemeName::OD2, SchemeName::DO4Trap, SchemeName::DO2SimpReg] {
        let spec = SchemeSpec::new(name, p.alpha()).unwrap();
        let sys = schemes::assemble_reduced(&spec, grid, &data).unwrap();
        let mut sols = Vec::new();
        for m in [SolveMethod::Direct, SolveMethod::Krylov, SolveMethod::FastDiag] {
            match linsolve::solve(&sys, &SolveConfig::with_method(m)) {
                Ok(s) => sols.push(s.x),
                Err(e) => assert!(m == SolveMethod::FastDiag && name == SchemeName::DO2SimpReg, "{name} {m}: {e}"),
            }
        }
        let tol = SolveConfig::default().rel_residual_tol;
        let scale = sols[0].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for s in &sols[1..] {
            let d = s.iter().zip(&sols[0]).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            assert!(d <= 10.0 * tol * scale, "{name}: {d} vs scale {scale}");
        }
    }
}

#[test]
fn homogeneous_data_gives_zero_for_every_scheme() {
    let grid = Grid::two_d(8).unwrap();
    for name in SchemeName::ALL {
        let spec = SchemeSpec::new(name, 0.5).unwrap();
        let sol = schemes::solve_scheme(&spec, grid, &SchemeData::zeros(grid), &SolveConfig::default(), SystemForm::Full)
            .unwrap();
        for f in [&sol.z, &sol.u, &sol.p] {
            assert_eq!(f.norm_inf(), 0.0);
        }
    }
}

/// Control-only penalty: a large weight is smooth with the wrong magnitude,
/// a smaller weight is closer in size but rougher.
#[test]
fn control_penalty_sweep_shape() {
    let p = ManufacturedProblem::make(ProblemName::Ex2);
    let s = study::gamma_sweep(SchemeName::DO2Simp, &p, 40, &[0.01, 0.001], &study::StudyOptions::default()).unwrap();
    let exact_max = 1.0 / p.alpha();
    assert!(s[0].osc_index <= 0.1);
    assert!((s[0].max_abs_u - exact_max).abs() > 0.25 * exact_max);
    assert!(s[1].osc_index > s[0].osc_index);
    assert!((s[1].max_abs_u - exact_max).abs() < (s[0].max_abs_u - exact_max).abs());
}
