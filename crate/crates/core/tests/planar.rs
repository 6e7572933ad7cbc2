use fuchs_core::anisotropy::AnisotropyMatrix;
use fuchs_core::fundamental::{fundamental_constant, FundamentalSolution};
use fuchs_core::planar::{
    discrete_energy, harnack_ratio, minimize_dirichlet, AnnularGrid2D, DiscreteField2D, EnergyModel, MinimizerSpec,
    NodeKind, PlanarProblem,
};
use fuchs_core::potential::Potential;
use fuchs_core::radial::{solve_radial_dirichlet, RadialProblem, SolverSpec};
use proptest::prelude::*;

#[test]
fn fundamental_energy_matches_log_coordinate_integral() {
    // |∇μ|_A² integrates to det(A)^{1/2} · 2π C² log(R/r) over the annulus.
    let a = AnisotropyMatrix::diagonal(&[4.0, 1.0]).unwrap();
    let (r0, r1) = (1.0, 4.0);
    let fs = FundamentalSolution::new(2.0, a.clone()).unwrap();
    let c = fundamental_constant(2.0, 2, &a).unwrap();
    let grid = AnnularGrid2D::new(a.clone(), r0, r1, 1.0 / 64.0).unwrap();
    let field = DiscreteField2D::from_fn(grid, |x| fs.mu(x).unwrap()).unwrap();
    let discrete = discrete_energy(&field, &PlanarProblem::new(2.0, Potential::zero(2))).unwrap();
    let exact = a.det().sqrt() * 2.0 * std::f64::consts::PI * c * c * (r1 / r0).ln();
    assert!((discrete - exact).abs() / exact < 0.01, "{discrete} vs {exact}");
}

#[test]
fn minimizer_converges_to_fundamental_solution() {
    let a = AnisotropyMatrix::identity(2).unwrap();
    let fs = FundamentalSolution::new(2.0, a.clone()).unwrap();
    let mut errs = Vec::new();
    for h in [1.0 / 16.0, 1.0 / 32.0] {
        let grid = AnnularGrid2D::new(a.clone(), 0.5, 1.5, h).unwrap();
        let data = DiscreteField2D::from_dirichlet(grid, |x| fs.mu(x).unwrap()).unwrap();
        let (u, rep) = minimize_dirichlet(&data, &PlanarProblem::new(2.0, Potential::zero(2)), &MinimizerSpec::default()).unwrap();
        assert!(rep.residual <= rep.tolerance);
        errs.push(u.max_abs_error(|x| fs.mu(x).unwrap()));
    }
    assert!((errs[0] / errs[1]).log2() >= 0.9, "{errs:?}");
}

#[test]
fn minimizer_matches_radial_solver() {
    let a = AnisotropyMatrix::diagonal(&[4.0, 1.0]).unwrap();
    let fs = FundamentalSolution::new(3.0, a.clone()).unwrap();
    let h = 1.0 / 32.0;
    let (r0, r1) = (0.5, 1.5);
    let grid = AnnularGrid2D::new(a.clone(), r0, r1, h).unwrap();
    let data = DiscreteField2D::from_dirichlet(grid, |x| fs.mu(x).unwrap()).unwrap();
    let (u, _) = minimize_dirichlet(&data, &PlanarProblem::new(3.0, Potential::zero(2)), &MinimizerSpec::default()).unwrap();
    let prob = RadialProblem::new(3.0, a.clone(), Potential::zero(2), r0, r1, fs.radial(r0), fs.radial(r1)).unwrap();
    let radial = solve_radial_dirichlet(&prob, &SolverSpec::default()).unwrap();
    let gap = u.max_abs_error(|x| radial.eval(a.anorm_inv(x).unwrap()));
    let spread = fs.radial(r1) - fs.radial(r0);
    assert!(gap < 2.0 * (1e-6 + h) * spread.abs(), "{gap}");
}

#[test]
fn hardy_minimizer_is_positive_with_stable_harnack_ratios() {
    let p = 2.5;
    let lambda = 0.5 * fuchs_core::fundamental::hardy_constant(p, 2);
    let grid = AnnularGrid2D::new(AnisotropyMatrix::identity(2).unwrap(), 0.1, 2.0, 1.0 / 32.0).unwrap();
    let data = DiscreteField2D::from_dirichlet(grid, |x| 1.0 + 0.3 * x[0].signum()).unwrap();
    let (u, rep) = minimize_dirichlet(&data, &PlanarProblem::new(p, Potential::hardy(2, lambda, p)), &MinimizerSpec::default()).unwrap();
    assert!(rep.energy_nonincreasing());
    let h = harnack_ratio(&u, &[1.0, 0.5, 0.25]).unwrap();
    assert!(h.spread <= 2.0, "{h:?}");
}

#[test]
fn dirichlet_band_is_never_updated() {
    let grid = AnnularGrid2D::new(AnisotropyMatrix::identity(2).unwrap(), 0.5, 1.5, 1.0 / 16.0).unwrap();
    let data = DiscreteField2D::from_dirichlet(grid.clone(), |x| (3.0 * x[0]).sin() + x[1]).unwrap();
    let (u, _) = minimize_dirichlet(&data, &PlanarProblem::new(3.0, Potential::constant(2, 1.0)), &MinimizerSpec::default()).unwrap();
    for (k, node) in grid.nodes().iter().enumerate() {
        if node.kind == NodeKind::Boundary {
            assert_eq!(u.values[k], data.values[k]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gradient_agrees_with_central_differences(seed in 0u64..1000, p in 1.3f64..4.0) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = AnisotropyMatrix::diagonal(&[rng.random_range(0.5..3.0), rng.random_range(0.5..3.0)]).unwrap();
        let grid = AnnularGrid2D::new(a, 0.5, 1.5, 0.2).unwrap();
        let model = EnergyModel::new(grid.clone(), p, &Potential::constant(2, 0.5)).unwrap();
        // Small amplitudes keep the total energy, and with it the roundoff of
        // the difference quotient, well below the gradient entries.
        let values: Vec<f64> = (0..grid.node_count()).map(|_| rng.random_range(-0.1..0.1)).collect();
        let grad = model.gradient(&values);
        let floor = 1e-3 * grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        let step = 1e-6;
        for &k in grid.free_nodes().iter().step_by(5) {
            let mut plus = values.clone();
            let mut minus = values.clone();
            plus[k] += step;
            minus[k] -= step;
            let fd = (model.energy(&plus) - model.energy(&minus)) / (2.0 * step);
            prop_assert!((fd - grad[k]).abs() <= 1e-6 * grad[k].abs().max(floor), "fd {} grad {}", fd, grad[k]);
        }
    }

    #[test]
    fn ordered_data_give_ordered_minimizers(seed in 0u64..1000, shift in 0.0f64..0.5) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let grid = AnnularGrid2D::new(AnisotropyMatrix::identity(2).unwrap(), 0.5, 1.5, 1.0 / 8.0).unwrap();
        let c = rng.random_range(-1.0..1.0);
        let lower = DiscreteField2D::from_dirichlet(grid.clone(), |x| c + x[0] * x[1]).unwrap();
        let upper = DiscreteField2D::from_dirichlet(grid, |x| c + x[0] * x[1] + shift * (1.0 + x[0].cos())).unwrap();
        let problem = PlanarProblem::new(3.0, Potential::constant(2, 1.0));
        let (u1, _) = minimize_dirichlet(&lower, &problem, &MinimizerSpec::default()).unwrap();
        let (u2, _) = minimize_dirichlet(&upper, &problem, &MinimizerSpec::default()).unwrap();
        for (a, b) in u1.values.iter().zip(&u2.values) {
            prop_assert!(a - b <= 1e-8);
        }
    }
}
