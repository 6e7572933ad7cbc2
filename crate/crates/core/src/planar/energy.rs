use std::sync::Arc;

use faer::sparse::Triplet;

use super::grid::AnnularGrid2D;
use crate::error::{invalid, Result};
use crate::potential::Potential;

/// Coefficient rows of the corner gradients of a cell with corners
/// `(0,0), (1,0), (0,1), (1,1)`, in units of `1/h`.
const GX: [[f64; 4]; 4] = [
    [-1.0, 1.0, 0.0, 0.0],
    [-1.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, -1.0, 1.0],
    [0.0, 0.0, -1.0, 1.0],
];
const GY: [[f64; 4]; 4] = [
    [-1.0, 0.0, 1.0, 0.0],
    [0.0, -1.0, 0.0, 1.0],
    [-1.0, 0.0, 1.0, 0.0],
    [0.0, -1.0, 0.0, 1.0],
];

/// Discrete energy
/// `Σ_cells h² · mean_corners w |∇_h u|_A^p + Σ_free h² V |u|^p`
/// with one-sided corner gradients and an optional weight `w = |x|_{A⁻¹}^β`
/// taken at the cell center.
///
/// With `epsilon > 0` the gradient term becomes `(|g|_A² + ε²)^{p/2} - ε^p`.
/// The potential term is lumped onto free nodes; band nodes carry fixed data
/// and contribute a constant, which is omitted.
#[derive(Debug, Clone)]
pub struct EnergyModel {
    pub p: f64,
    pub epsilon: f64,
    pub weight_exponent: f64,
    grid: Arc<AnnularGrid2D>,
    a: [[f64; 2]; 2],
    cell_weight: Vec<f64>,
    node_potential: Vec<f64>,
}

impl EnergyModel {
    pub fn new(grid: Arc<AnnularGrid2D>, p: f64, potential: &Potential) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(invalid("p must lie in (1, inf)"));
        }
        if potential.dim != 2 {
            return Err(invalid("planar energy needs a two-dimensional potential"));
        }
        let m = grid.matrix.entries();
        let a = [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]];
        let h2 = grid.h * grid.h;
        let mut node_potential = vec![0.0; grid.node_count()];
        if !potential.is_zero() {
            for &k in grid.free_nodes() {
                let v = potential.eval_in(&grid.matrix, &grid.nodes()[k].x);
                if !v.is_finite() {
                    return Err(invalid("potential is not finite on the grid"));
                }
                node_potential[k] = h2 * v;
            }
        }
        let mut model = Self {
            p,
            epsilon: 0.0,
            weight_exponent: 0.0,
            grid,
            a,
            cell_weight: Vec::new(),
            node_potential,
        };
        model.set_weight_exponent(0.0)?;
        Ok(model)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon.max(0.0);
        self
    }

    /// Uses the weight `|x|_{A⁻¹}^β` on the gradient term.
    pub fn with_weight_exponent(mut self, beta: f64) -> Result<Self> {
        self.set_weight_exponent(beta)?;
        Ok(self)
    }

    fn set_weight_exponent(&mut self, beta: f64) -> Result<()> {
        let g = &self.grid;
        let quarter = g.h * g.h / 4.0;
        let mut weights = Vec::with_capacity(g.cells().len());
        for c in g.cells() {
            let w = if beta == 0.0 {
                1.0
            } else {
                let n0 = &g.nodes()[c[0]].x;
                let center = [n0[0] + 0.5 * g.h, n0[1] + 0.5 * g.h];
                g.matrix.anorm_inv(&center)?.powf(beta)
            };
            if !w.is_finite() {
                return Err(invalid("gradient weight is not finite on the grid"));
            }
            weights.push(quarter * w);
        }
        self.cell_weight = weights;
        self.weight_exponent = beta;
        Ok(())
    }

    pub fn grid(&self) -> &Arc<AnnularGrid2D> {
        &self.grid
    }

    fn anorm2(&self, g: [f64; 2]) -> f64 {
        let a = &self.a;
        g[0] * (a[0][0] * g[0] + a[0][1] * g[1]) + g[1] * (a[1][0] * g[0] + a[1][1] * g[1])
    }

    fn corner_gradients(&self, c: &[usize; 4], values: &[f64]) -> [[f64; 2]; 4] {
        let inv_h = 1.0 / self.grid.h;
        let u = c.map(|k| values[k]);
        let mut out = [[0.0; 2]; 4];
        for (k, g) in out.iter_mut().enumerate() {
            let gx: f64 = (0..4).map(|m| GX[k][m] * u[m]).sum();
            let gy: f64 = (0..4).map(|m| GY[k][m] * u[m]).sum();
            *g = [gx * inv_h, gy * inv_h];
        }
        out
    }

    /// Energy and the sum of absolute term magnitudes (a roundoff scale).
    pub fn energy_parts(&self, values: &[f64]) -> (f64, f64) {
        let p = self.p;
        let eps2 = self.epsilon * self.epsilon;
        let shift = if self.epsilon > 0.0 { self.epsilon.powf(p) } else { 0.0 };
        let mut total = 0.0;
        let mut magnitude = 0.0;
        for (c, &w) in self.grid.cells().iter().zip(&self.cell_weight) {
            let mut cell = 0.0;
            for g in self.corner_gradients(c, values) {
                cell += (self.anorm2(g) + eps2).powf(0.5 * p) - shift;
            }
            total += w * cell;
            magnitude += (w * cell).abs();
        }
        for &k in self.grid.free_nodes() {
            let term = self.node_potential[k] * values[k].abs().powf(p);
            total += term;
            magnitude += term.abs();
        }
        (total, magnitude)
    }

    pub fn energy(&self, values: &[f64]) -> f64 {
        self.energy_parts(values).0
    }

    /// Gradient with respect to every node value (band entries included).
    pub fn gradient(&self, values: &[f64]) -> Vec<f64> {
        let p = self.p;
        let eps2 = self.epsilon * self.epsilon;
        let inv_h = 1.0 / self.grid.h;
        let a = &self.a;
        let mut out = vec![0.0; values.len()];
        for (c, &w) in self.grid.cells().iter().zip(&self.cell_weight) {
            let grads = self.corner_gradients(c, values);
            for (k, g) in grads.iter().enumerate() {
                let s = self.anorm2(*g) + eps2;
                if s == 0.0 {
                    continue;
                }
                let coef = w * p * s.powf(0.5 * p - 1.0) * inv_h;
                let q0 = coef * (a[0][0] * g[0] + a[0][1] * g[1]);
                let q1 = coef * (a[1][0] * g[0] + a[1][1] * g[1]);
                for m in 0..4 {
                    out[c[m]] += GX[k][m] * q0 + GY[k][m] * q1;
                }
            }
        }
        for &k in self.grid.free_nodes() {
            let u = values[k];
            if u != 0.0 {
                out[k] += self.node_potential[k] * p * u.abs().powf(p - 2.0) * u;
            }
        }
        out
    }

    /// Gradient restricted to free nodes, in unknown order.
    pub fn free_gradient(&self, values: &[f64]) -> Vec<f64> {
        let g = self.gradient(values);
        self.grid.free_nodes().iter().map(|&k| g[k]).collect()
    }

    /// Strong-form Euler–Lagrange residual `∂E/∂u_i / (p h²)` on free nodes.
    pub fn residual(&self, values: &[f64]) -> Vec<f64> {
        let scale = 1.0 / (self.p * self.grid.h * self.grid.h);
        self.free_gradient(values).into_iter().map(|g| g * scale).collect()
    }

    pub fn max_residual(&self, values: &[f64]) -> f64 {
        self.residual(values).iter().fold(0.0f64, |m, r| m.max(r.abs()))
    }

    /// Lower-triangular Hessian entries over the unknowns. The pattern is
    /// value independent, so one symbolic factorization serves every call.
    /// `hessian_epsilon` regularizes `|g|^{p-2}` and `|u|^{p-2}`.
    pub fn hessian_triplets(&self, values: &[f64], hessian_epsilon: f64) -> Vec<Triplet<usize, usize, f64>> {
        let p = self.p;
        let eps2 = hessian_epsilon.max(self.epsilon).powi(2);
        let inv_h2 = 1.0 / (self.grid.h * self.grid.h);
        let a = &self.a;
        let grid = &self.grid;
        let mut out = Vec::with_capacity(grid.cells().len() * 10 + grid.free_count());
        for (c, &w) in grid.cells().iter().zip(&self.cell_weight) {
            let grads = self.corner_gradients(c, values);
            let mut local = [[0.0; 4]; 4];
            for (k, g) in grads.iter().enumerate() {
                let s = self.anorm2(*g) + eps2;
                let mut hf = [[0.0; 2]; 2];
                if s > 0.0 || p == 2.0 {
                    let base = p * s.powf(0.5 * p - 1.0);
                    let ag = [a[0][0] * g[0] + a[0][1] * g[1], a[1][0] * g[0] + a[1][1] * g[1]];
                    let rank1 = if p == 2.0 { 0.0 } else { p * (p - 2.0) * s.powf(0.5 * p - 2.0) };
                    for r in 0..2 {
                        for q in 0..2 {
                            hf[r][q] = base * a[r][q] + rank1 * ag[r] * ag[q];
                        }
                    }
                }
                let d = [GX[k], GY[k]];
                for m in 0..4 {
                    for n in 0..4 {
                        let mut v = 0.0;
                        for r in 0..2 {
                            for q in 0..2 {
                                v += d[r][m] * hf[r][q] * d[q][n];
                            }
                        }
                        local[m][n] += w * inv_h2 * v;
                    }
                }
            }
            for m in 0..4 {
                let Some(row) = grid.unknown_index(c[m]) else { continue };
                for n in 0..4 {
                    let Some(col) = grid.unknown_index(c[n]) else { continue };
                    if row >= col {
                        out.push(Triplet::new(row, col, local[m][n]));
                    }
                }
            }
        }
        for (row, &k) in grid.free_nodes().iter().enumerate() {
            let u = values[k];
            let v = self.node_potential[k] * p * (p - 1.0) * (u * u + eps2).powf(0.5 * p - 1.0);
            out.push(Triplet::new(row, row, v));
        }
        out
    }
}
