use faer::prelude::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::SparseColMat;
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use super::energy::EnergyModel;
use super::grid::DiscreteField2D;
use crate::error::{invalid, Error, Result};
use crate::fundamental::hardy_constant;
use crate::potential::{Potential, PotentialKind};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimizerSpec {
    /// Bound on the strong-form residual, relative to `scale^{p-1}`.
    pub tol: f64,
    pub max_iterations: usize,
    /// Regularization `ε` relative to the data scale.
    pub epsilon_rel: f64,
    /// Energies below `-watchdog · max(1, |E₀|)` trip the unbounded-below flag.
    pub watchdog: f64,
    pub newton: bool,
    /// Replace the free values by the `A`-harmonic extension of the data first.
    pub warm_start: bool,
}

impl Default for MinimizerSpec {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iterations: 200,
            epsilon_rel: 1e-10,
            watchdog: 1e12,
            newton: true,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinimizeReport {
    /// Energy after each accepted iterate, starting with the initial one.
    pub energies: Vec<f64>,
    /// Roundoff scale of the energy at each recorded iterate.
    pub energy_magnitudes: Vec<f64>,
    pub residual: f64,
    pub tolerance: f64,
    pub iterations: usize,
    pub newton_steps: usize,
    pub descent_steps: usize,
    pub epsilon: f64,
}

impl MinimizeReport {
    /// Whether the energy trace never increases beyond roundoff.
    pub fn energy_nonincreasing(&self) -> bool {
        self.energies
            .windows(2)
            .zip(self.energy_magnitudes.windows(2))
            .all(|(e, m)| e[1] <= e[0] + roundoff_slack(m[0].max(m[1])))
    }
}

fn roundoff_slack(magnitude: f64) -> f64 {
    64.0 * f64::EPSILON * magnitude
}

/// Data of a planar Dirichlet problem besides the grid and boundary values.
#[derive(Debug, Clone)]
pub struct PlanarProblem {
    pub p: f64,
    pub potential: Potential,
    /// Exponent `β` of the gradient weight `|x|_{A⁻¹}^β`.
    pub weight_exponent: f64,
}

impl PlanarProblem {
    pub fn new(p: f64, potential: Potential) -> Self {
        Self { p, potential, weight_exponent: 0.0 }
    }

    pub fn with_weight_exponent(mut self, beta: f64) -> Self {
        self.weight_exponent = beta;
        self
    }

    /// Hardy-type potentials must stay strictly below the Hardy constant.
    pub fn validate(&self) -> Result<()> {
        if let PotentialKind::PowerLaw { coef, exponent } = self.potential.kind {
            if coef < 0.0 && (exponent + self.p).abs() < 1e-12 {
                let c_h = hardy_constant(self.p, 2);
                if -coef >= c_h {
                    return Err(invalid(format!(
                        "Hardy coupling {} is not below the Hardy constant {c_h}",
                        -coef
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn model(&self, field: &DiscreteField2D, epsilon: f64) -> Result<EnergyModel> {
        EnergyModel::new(field.grid.clone(), self.p, &self.potential)?
            .with_epsilon(epsilon)
            .with_weight_exponent(self.weight_exponent)
    }
}

struct NewtonSolver {
    symbolic: Option<SymbolicLlt<usize>>,
    n: usize,
}

impl NewtonSolver {
    fn new(n: usize) -> Self {
        Self { symbolic: None, n }
    }

    /// Solves `H d = -g`; `None` when `H` is not numerically positive definite.
    fn direction(&mut self, model: &EnergyModel, values: &[f64], grad: &[f64], eps: f64) -> Result<Option<Vec<f64>>> {
        let trips = model.hessian_triplets(values, eps);
        let h = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &trips)
            .map_err(|e| Error::Numeric(format!("Hessian assembly failed: {e:?}")))?;
        if self.symbolic.is_none() {
            let sym = SymbolicLlt::try_new(h.symbolic(), Side::Lower)
                .map_err(|e| Error::Numeric(format!("symbolic factorization failed: {e:?}")))?;
            self.symbolic = Some(sym);
        }
        let sym = self.symbolic.clone().expect("symbolic factorization present");
        let Ok(llt) = Llt::try_new_with_symbolic(sym, h.as_ref(), Side::Lower) else {
            return Ok(None);
        };
        let rhs = Mat::from_fn(self.n, 1, |i, _| -grad[i]);
        let sol = llt.solve(&rhs);
        let d: Vec<f64> = (0..self.n).map(|i| sol[(i, 0)]).collect();
        if d.iter().any(|v| !v.is_finite()) {
            return Ok(None);
        }
        Ok(Some(d))
    }
}

/// Minimizes the discrete energy over the free values of `field`, keeping the
/// boundary band fixed. Newton steps with a sparse Cholesky factorization are
/// used while the Hessian is positive definite; otherwise a diagonally
/// preconditioned Polak–Ribière conjugate-gradient step. Every step passes an
/// Armijo test, so the energy trace is nonincreasing.
pub fn minimize_dirichlet(
    field: &DiscreteField2D,
    problem: &PlanarProblem,
    spec: &MinimizerSpec,
) -> Result<(DiscreteField2D, MinimizeReport)> {
    problem.validate()?;
    if !(spec.tol > 0.0 && spec.epsilon_rel >= 0.0 && spec.watchdog > 0.0) {
        return Err(invalid("minimizer tolerances must be positive"));
    }
    let scale = field.data_scale();
    let epsilon = spec.epsilon_rel * scale;
    let model = problem.model(field, epsilon)?;
    let grid = field.grid.clone();
    let n = grid.free_count();
    let tolerance = spec.tol * scale.powf(problem.p - 1.0);
    let residual_scale = 1.0 / (problem.p * grid.h * grid.h);

    let mut out = field.clone();
    let mut newton = NewtonSolver::new(n);
    if spec.warm_start {
        let harmonic = EnergyModel::new(grid.clone(), 2.0, &Potential::zero(2))?;
        let mut start = out.clone();
        start.set_free_values(&vec![0.0; n]);
        let g0 = harmonic.free_gradient(&start.values);
        if let Some(d) = newton.direction(&harmonic, &start.values, &g0, 0.0)? {
            start.set_free_values(&d);
            out = start;
        }
    }

    let (mut energy, mut magnitude) = model.energy_parts(&out.values);
    if !energy.is_finite() {
        return Err(Error::Numeric("initial energy is not finite".into()));
    }
    let floor = -spec.watchdog * energy.abs().max(1.0);
    let mut report = MinimizeReport {
        energies: vec![energy],
        energy_magnitudes: vec![magnitude],
        residual: f64::INFINITY,
        tolerance,
        iterations: 0,
        newton_steps: 0,
        descent_steps: 0,
        epsilon,
    };

    let mut use_newton = spec.newton;
    let mut prev_grad: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut prev_dir: Option<Vec<f64>> = None;
    let mut stalls = 0;
    for it in 0..spec.max_iterations {
        let grad = model.free_gradient(&out.values);
        let residual = grad.iter().fold(0.0f64, |m, g| m.max(g.abs())) * residual_scale;
        report.residual = residual;
        report.iterations = it;
        if residual <= tolerance {
            return Ok((out, report));
        }

        let free = out.free_values();
        let mut newton_dir = None;
        if use_newton {
            newton_dir = newton
                .direction(&model, &out.values, &grad, epsilon.max(1e-10 * scale))?
                .filter(|d| dot(d, &grad) < 0.0);
        }
        let is_newton = newton_dir.is_some();
        let dir = match newton_dir {
            Some(d) => {
                prev_grad = None;
                prev_dir = None;
                d
            }
            None => {
                let precond = diagonal_preconditioner(&model, &out.values, epsilon.max(1e-10 * scale), n);
                let z: Vec<f64> = grad.iter().zip(&precond).map(|(g, m)| g / m).collect();
                let mut d: Vec<f64> = z.iter().map(|v| -v).collect();
                if let (Some((pg, pz)), Some(pd)) = (&prev_grad, &prev_dir) {
                    let num: f64 = z.iter().zip(grad.iter().zip(pg)).map(|(zz, (g, gp))| zz * (g - gp)).sum();
                    let den = dot(pg, pz);
                    let beta = if den > 0.0 { (num / den).max(0.0) } else { 0.0 };
                    for (di, pdi) in d.iter_mut().zip(pd) {
                        *di += beta * pdi;
                    }
                    if dot(&d, &grad) >= 0.0 {
                        d = z.iter().map(|v| -v).collect();
                    }
                }
                prev_grad = Some((grad.clone(), z));
                d
            }
        };

        let slope = dot(&dir, &grad);
        let mut step = 1.0;
        let mut accepted = None;
        let mut trial = out.clone();
        // Once the predicted decrease is at roundoff level the energy cannot
        // rank trial points; require a smaller residual and no energy rise
        // beyond roundoff instead of the Armijo test.
        let near_noise = -slope <= 1e3 * roundoff_slack(magnitude);
        for _ in 0..60 {
            let x: Vec<f64> = free.iter().zip(&dir).map(|(u, d)| u + step * d).collect();
            trial.set_free_values(&x);
            let (e, m) = model.energy_parts(&trial.values);
            let ok = if near_noise {
                e.is_finite()
                    && e <= energy + roundoff_slack(magnitude.max(m))
                    && model.max_residual(&trial.values) < residual
            } else {
                e.is_finite() && e <= energy + 1e-4 * step * slope
            };
            if ok {
                accepted = Some((e, m));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((e, m)) => {
                if e < floor || trial.values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::UnboundedBelow(e));
                }
                out = trial;
                energy = e;
                magnitude = m;
                report.energies.push(e);
                report.energy_magnitudes.push(m);
                if is_newton {
                    report.newton_steps += 1;
                } else {
                    report.descent_steps += 1;
                    prev_dir = Some(dir);
                }
                stalls = 0;
                use_newton = spec.newton;
            }
            None => {
                stalls += 1;
                prev_grad = None;
                prev_dir = None;
                if is_newton {
                    use_newton = false;
                } else if stalls >= 3 {
                    return Err(Error::BudgetExceeded { iterations: it + 1, residual });
                }
            }
        }
    }
    let residual = model.max_residual(&out.values);
    report.residual = residual;
    report.iterations = spec.max_iterations;
    if residual <= tolerance {
        return Ok((out, report));
    }
    Err(Error::BudgetExceeded { iterations: spec.max_iterations, residual })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn diagonal_preconditioner(model: &EnergyModel, values: &[f64], eps: f64, n: usize) -> Vec<f64> {
    let mut diag = vec![0.0; n];
    for t in model.hessian_triplets(values, eps) {
        if t.row == t.col {
            diag[t.row] += t.val;
        }
    }
    let positive: Vec<f64> = diag.iter().copied().filter(|v| *v > 0.0).collect();
    let fallback = if positive.is_empty() {
        1.0
    } else {
        positive.iter().sum::<f64>() / positive.len() as f64
    };
    diag.into_iter().map(|v| if v > 0.0 { v } else { fallback }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anisotropy::AnisotropyMatrix;
    use crate::fundamental::FundamentalSolution;
    use crate::planar::grid::AnnularGrid2D;

    fn annulus(a: AnisotropyMatrix, h: f64) -> std::sync::Arc<AnnularGrid2D> {
        AnnularGrid2D::new(a, 0.5, 1.5, h).unwrap()
    }

    #[test]
    fn constant_data_give_constant_minimizer() {
        let g = annulus(AnisotropyMatrix::identity(2).unwrap(), 1.0 / 16.0);
        let f = DiscreteField2D::from_dirichlet(g, |_| 2.5).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let (u, rep) = minimize_dirichlet(&f, &PlanarProblem::new(p, Potential::zero(2)), &MinimizerSpec::default()).unwrap();
            let dev = u.values.iter().fold(0.0f64, |m, v| m.max((v - 2.5).abs()));
            assert!(dev < 1e-10, "p={p} dev={dev} {rep:?}");
            assert!(rep.energy_nonincreasing());
        }
    }

    #[test]
    fn recovers_fundamental_solution() {
        let a = AnisotropyMatrix::diagonal(&[4.0, 1.0]).unwrap();
        let fs = FundamentalSolution::new(3.0, a.clone()).unwrap();
        let mut errors = Vec::new();
        for h in [1.0 / 8.0, 1.0 / 16.0] {
            let g = annulus(a.clone(), h);
            let f = DiscreteField2D::from_dirichlet(g, |x| fs.mu(x).unwrap()).unwrap();
            let (u, rep) = minimize_dirichlet(&f, &PlanarProblem::new(3.0, Potential::zero(2)), &MinimizerSpec::default()).unwrap();
            assert!(rep.residual <= rep.tolerance);
            assert!(rep.energy_nonincreasing());
            errors.push(u.max_abs_error(|x| fs.mu(x).unwrap()));
        }
        assert!(errors[1] < errors[0]);
        assert!((errors[0] / errors[1]).log2() >= 0.9, "{errors:?}");
    }

    #[test]
    fn sublinear_exponent_converges() {
        let a = AnisotropyMatrix::identity(2).unwrap();
        let fs = FundamentalSolution::new(1.5, a.clone()).unwrap();
        let g = annulus(a, 1.0 / 16.0);
        let f = DiscreteField2D::from_dirichlet(g, |x| fs.mu(x).unwrap()).unwrap();
        let (u, rep) = minimize_dirichlet(&f, &PlanarProblem::new(1.5, Potential::zero(2)), &MinimizerSpec::default()).unwrap();
        assert!(rep.energy_nonincreasing());
        assert!(u.max_abs_error(|x| fs.mu(x).unwrap()) < 0.05 * fs.radial(0.5).abs());
    }

    #[test]
    fn epsilon_halving_is_invisible() {
        let a = AnisotropyMatrix::identity(2).unwrap();
        let g = annulus(a, 1.0 / 8.0);
        let f = DiscreteField2D::from_dirichlet(g, |x| 1.0 + x[0] * x[0]).unwrap();
        let problem = PlanarProblem::new(1.5, Potential::zero(2));
        let (u1, _) = minimize_dirichlet(&f, &problem, &MinimizerSpec::default()).unwrap();
        let spec = MinimizerSpec { epsilon_rel: 5e-11, ..Default::default() };
        let (u2, _) = minimize_dirichlet(&f, &problem, &spec).unwrap();
        let gap = u1.values.iter().zip(&u2.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(gap < 1e-8, "{gap}");
    }

    #[test]
    fn descent_only_mode_also_converges() {
        let g = annulus(AnisotropyMatrix::identity(2).unwrap(), 1.0 / 8.0);
        let f = DiscreteField2D::from_dirichlet(g, |x| x[0] + 2.0).unwrap();
        let spec = MinimizerSpec { newton: false, warm_start: false, max_iterations: 5000, tol: 1e-6, ..Default::default() };
        let (u, rep) = minimize_dirichlet(&f, &PlanarProblem::new(2.0, Potential::constant(2, 1.0)), &spec).unwrap();
        assert!(rep.newton_steps == 0 && rep.descent_steps > 0);
        assert!(rep.energy_nonincreasing());
        assert!(u.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn supercritical_hardy_is_rejected() {
        let g = annulus(AnisotropyMatrix::identity(2).unwrap(), 0.25);
        let f = DiscreteField2D::from_dirichlet(g, |_| 1.0).unwrap();
        let c_h = hardy_constant(3.0, 2);
        let problem = PlanarProblem::new(3.0, Potential::hardy(2, 1.5 * c_h, 3.0));
        assert!(matches!(minimize_dirichlet(&f, &problem, &MinimizerSpec::default()), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let g = annulus(AnisotropyMatrix::identity(2).unwrap(), 1.0 / 8.0);
        let f = DiscreteField2D::from_dirichlet(g, |x| x[0]).unwrap();
        let spec = MinimizerSpec { newton: false, warm_start: false, max_iterations: 2, ..Default::default() };
        let r = minimize_dirichlet(&f, &PlanarProblem::new(3.0, Potential::zero(2)), &spec);
        assert!(matches!(r, Err(Error::BudgetExceeded { .. })));
    }
}
