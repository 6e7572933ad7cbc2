//! Planar Dirichlet problems for `Q(u) = -div(|∇u|_A^{p-2}A∇u) + V|u|^{p-2}u`
//! on ellipse annuli: a lattice discretization of the energy, its minimizer,
//! and Harnack and Kelvin diagnostics on the results.

mod energy;
mod grid;
mod harnack;
mod kelvin;
mod optimizer;

pub use energy::EnergyModel;
pub use grid::{AnnularGrid2D, DiscreteField2D, Node, NodeKind};
pub use harnack::{harnack_ratio, HarnackReport, HarnackRung};
pub use kelvin::{kelvin_image, kelvin_residual, observed_orders, KelvinResidual};
pub use optimizer::{minimize_dirichlet, MinimizeReport, MinimizerSpec, PlanarProblem};

/// Discrete energy of a field under `problem`, without regularization.
pub fn discrete_energy(field: &DiscreteField2D, problem: &PlanarProblem) -> crate::Result<f64> {
    Ok(problem.model(field, 0.0)?.energy(&field.values))
}
