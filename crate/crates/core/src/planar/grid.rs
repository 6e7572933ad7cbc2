use std::sync::Arc;

use crate::anisotropy::AnisotropyMatrix;
use crate::error::{invalid, Error, Result};

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Strictly inside the annulus; an unknown of the minimizer.
    Free,
    /// Lattice neighbor of a free node outside the annulus; carries Dirichlet data.
    Boundary,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub i: i64,
    pub j: i64,
    pub x: [f64; 2],
    /// `|x|_{A⁻¹}`.
    pub rho: f64,
    pub kind: NodeKind,
}

/// Cartesian lattice `hℤ²` restricted to the ellipse annulus
/// `inner < |x|_{A⁻¹} < outer`, plus a one-node boundary band.
///
/// Every cell touching a free node has all four corners in the grid, so each
/// free node sees the full 9-point neighborhood.
#[derive(Debug, Clone)]
pub struct AnnularGrid2D {
    pub matrix: AnisotropyMatrix,
    pub inner: f64,
    pub outer: f64,
    pub h: f64,
    nodes: Vec<Node>,
    /// Corner indices `(0,0), (1,0), (0,1), (1,1)` of each active cell.
    cells: Vec<[usize; 4]>,
    /// Node index → unknown index (or `NONE`).
    unknown: Vec<usize>,
    free: Vec<usize>,
    lattice_min: [i64; 2],
    lattice_len: [usize; 2],
    lattice: Vec<usize>,
}

impl AnnularGrid2D {
    pub fn new(matrix: AnisotropyMatrix, inner: f64, outer: f64, h: f64) -> Result<Arc<Self>> {
        if matrix.dim() != 2 {
            return Err(Error::UnsupportedDimension(matrix.dim()));
        }
        if !(inner >= 0.0 && outer > inner && outer.is_finite()) {
            return Err(invalid("annulus radii must satisfy 0 <= inner < outer < inf"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid("mesh spacing must be positive"));
        }
        let a = matrix.entries();
        let half = [
            (outer * a[(0, 0)].sqrt() / h).ceil() as i64 + 2,
            (outer * a[(1, 1)].sqrt() / h).ceil() as i64 + 2,
        ];
        if (2 * half[0] + 1) * (2 * half[1] + 1) > 50_000_000 {
            return Err(invalid("grid too large; increase h"));
        }
        let lattice_min = [-half[0], -half[1]];
        let lattice_len = [(2 * half[0] + 1) as usize, (2 * half[1] + 1) as usize];
        let rho_at = |i: i64, j: i64| -> f64 {
            let x = [i as f64 * h, j as f64 * h];
            matrix.anorm_inv(&x).unwrap_or(0.0)
        };
        let is_free = |i: i64, j: i64| -> bool {
            let r = rho_at(i, j);
            r > inner && r < outer
        };

        let mut lattice = vec![NONE; lattice_len[0] * lattice_len[1]];
        let mut nodes = Vec::new();
        let flat = |i: i64, j: i64| -> usize {
            (i - lattice_min[0]) as usize + lattice_len[0] * (j - lattice_min[1]) as usize
        };
        for j in lattice_min[1]..=half[1] {
            for i in lattice_min[0]..=half[0] {
                let free_here = is_free(i, j);
                let banded = !free_here
                    && (-1..=1).any(|dj| (-1..=1).any(|di| (di, dj) != (0, 0) && is_free(i + di, j + dj)));
                if free_here || banded {
                    lattice[flat(i, j)] = nodes.len();
                    let x = [i as f64 * h, j as f64 * h];
                    nodes.push(Node {
                        i,
                        j,
                        x,
                        rho: rho_at(i, j),
                        kind: if free_here { NodeKind::Free } else { NodeKind::Boundary },
                    });
                }
            }
        }
        let free: Vec<usize> = (0..nodes.len()).filter(|&k| nodes[k].kind == NodeKind::Free).collect();
        if free.is_empty() {
            return Err(invalid("annulus contains no interior lattice nodes; decrease h"));
        }
        let mut unknown = vec![NONE; nodes.len()];
        for (u, &k) in free.iter().enumerate() {
            unknown[k] = u;
        }

        let mut cells = Vec::new();
        for j in lattice_min[1]..half[1] {
            for i in lattice_min[0]..half[0] {
                let c = [flat(i, j), flat(i + 1, j), flat(i, j + 1), flat(i + 1, j + 1)].map(|f| lattice[f]);
                if c.iter().all(|&k| k != NONE) && c.iter().any(|&k| unknown[k] != NONE) {
                    cells.push(c);
                }
            }
        }

        Ok(Arc::new(Self {
            matrix,
            inner,
            outer,
            h,
            nodes,
            cells,
            unknown,
            free,
            lattice_min,
            lattice_len,
            lattice,
        }))
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn cells(&self) -> &[[usize; 4]] {
        &self.cells
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free
    }

    pub fn free_count(&self) -> usize {
        self.free.len()
    }

    pub fn boundary_count(&self) -> usize {
        self.nodes.len() - self.free.len()
    }

    /// Unknown index of a node, if it is free.
    pub fn unknown_index(&self, node: usize) -> Option<usize> {
        match self.unknown[node] {
            NONE => None,
            u => Some(u),
        }
    }

    /// Node at lattice position `(i, j)`, if present.
    pub fn node_at(&self, i: i64, j: i64) -> Option<usize> {
        let di = i - self.lattice_min[0];
        let dj = j - self.lattice_min[1];
        if di < 0 || dj < 0 || di as usize >= self.lattice_len[0] || dj as usize >= self.lattice_len[1] {
            return None;
        }
        match self.lattice[di as usize + self.lattice_len[0] * dj as usize] {
            NONE => None,
            k => Some(k),
        }
    }

    /// Bilinear interpolation of nodal `values` at `x`; errors when a corner
    /// of the enclosing lattice cell is not a grid node.
    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> Result<f64> {
        let s = x[0] / self.h;
        let t = x[1] / self.h;
        let (i, j) = (s.floor() as i64, t.floor() as i64);
        let (fs, ft) = (s - i as f64, t - j as f64);
        let corner = |di: i64, dj: i64| -> Result<f64> {
            self.node_at(i + di, j + dj)
                .map(|k| values[k])
                .ok_or_else(|| Error::Domain(format!("point ({}, {}) lies outside the grid", x[0], x[1])))
        };
        let u00 = corner(0, 0)?;
        let u10 = corner(1, 0)?;
        let u01 = corner(0, 1)?;
        let u11 = corner(1, 1)?;
        Ok(u00 + fs * (u10 - u00) + ft * (u01 - u00) + fs * ft * (u11 - u10 - u01 + u00))
    }
}

/// Nodal values on an [`AnnularGrid2D`]. Boundary-band values are the
/// Dirichlet data and are never changed by the minimizer.
#[derive(Debug, Clone)]
pub struct DiscreteField2D {
    pub grid: Arc<AnnularGrid2D>,
    pub values: Vec<f64>,
}

impl DiscreteField2D {
    /// Evaluates `f` at every node; free values serve as the initial guess.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: Arc<AnnularGrid2D>, f: F) -> Result<Self> {
        let values: Vec<f64> = grid.nodes.iter().map(|n| f(&n.x)).collect();
        Self::from_values(grid, values)
    }

    /// Dirichlet data from `data` on the band, zero on free nodes.
    pub fn from_dirichlet<F: Fn(&[f64]) -> f64>(grid: Arc<AnnularGrid2D>, data: F) -> Result<Self> {
        let values: Vec<f64> = grid
            .nodes
            .iter()
            .map(|n| if n.kind == NodeKind::Boundary { data(&n.x) } else { 0.0 })
            .collect();
        Self::from_values(grid, values)
    }

    pub fn from_values(grid: Arc<AnnularGrid2D>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::DimensionMismatch { expected: grid.node_count(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("field contains non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    /// Largest absolute Dirichlet value, or 1 when the data vanish.
    pub fn data_scale(&self) -> f64 {
        let s = self
            .grid
            .nodes
            .iter()
            .zip(&self.values)
            .filter(|(n, _)| n.kind == NodeKind::Boundary)
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }

    pub fn free_values(&self) -> Vec<f64> {
        self.grid.free.iter().map(|&k| self.values[k]).collect()
    }

    pub fn set_free_values(&mut self, free: &[f64]) {
        for (&k, &v) in self.grid.free.iter().zip(free) {
            self.values[k] = v;
        }
    }

    /// Rows `(x, y, u)` in node order.
    pub fn series(&self) -> Vec<[f64; 3]> {
        self.grid.nodes.iter().zip(&self.values).map(|(n, &u)| [n.x[0], n.x[1], u]).collect()
    }

    pub fn max_abs_error<F: Fn(&[f64]) -> f64>(&self, exact: F) -> f64 {
        self.grid
            .nodes
            .iter()
            .zip(&self.values)
            .filter(|(n, _)| n.kind == NodeKind::Free)
            .fold(0.0f64, |m, (n, &u)| m.max((u - exact(&n.x)).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_nodes_have_full_neighborhoods() {
        let a = AnisotropyMatrix::diagonal(&[4.0, 1.0]).unwrap();
        let g = AnnularGrid2D::new(a, 0.5, 1.5, 1.0 / 16.0).unwrap();
        assert!(g.free_count() > 100);
        for &k in g.free_nodes() {
            let n = &g.nodes()[k];
            assert!(n.rho > 0.5 && n.rho < 1.5);
            for dj in -1..=1 {
                for di in -1..=1 {
                    assert!(g.node_at(n.i + di, n.j + dj).is_some());
                }
            }
        }
        for n in g.nodes().iter().filter(|n| n.kind == NodeKind::Boundary) {
            assert!(n.rho <= 0.5 || n.rho >= 1.5);
        }
    }

    #[test]
    fn interpolation_reproduces_bilinear_functions() {
        let g = AnnularGrid2D::new(AnisotropyMatrix::identity(2).unwrap(), 0.5, 1.5, 0.1).unwrap();
        let f = |x: &[f64]| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1];
        let field = DiscreteField2D::from_fn(g.clone(), f).unwrap();
        for x in [[0.93, 0.11], [-0.2, -0.77], [0.0, 1.01]] {
            assert!((g.interpolate(&field.values, &x).unwrap() - f(&x)).abs() < 1e-12);
        }
        assert!(g.interpolate(&field.values, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        let a = AnisotropyMatrix::identity(2).unwrap();
        assert!(AnnularGrid2D::new(a.clone(), 1.0, 0.5, 0.1).is_err());
        assert!(AnnularGrid2D::new(a.clone(), 0.5, 1.0, 0.0).is_err());
        assert!(AnnularGrid2D::new(a, 0.5, 0.52, 0.5).is_err());
        assert!(AnnularGrid2D::new(AnisotropyMatrix::identity(3).unwrap(), 0.5, 1.0, 0.1).is_err());
    }
}
