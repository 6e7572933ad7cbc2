//! Geometry of a constant symmetric positive-definite matrix `A`: the norms
//! `|x|_A` and `|x|_{A^-1}`, ellipsoids `E_A(r) = {|x|_{A^-1} < r}`, inversion
//! in `∂E_A(1)` and the generalized Kelvin transform.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::quad::GaussLegendre;

const SYMMETRY_RTOL: f64 = 1e-12;

/// A fixed symmetric positive-definite `d × d` matrix together with its
/// inverse, determinant, Cholesky factor and extreme eigenvalues.
#[derive(Debug, Clone)]
pub struct AnisotropyMatrix {
    entries: DMatrix<f64>,
    inverse: DMatrix<f64>,
    chol: DMatrix<f64>,
    chol_inv_t: DMatrix<f64>,
    det: f64,
    eig_min: f64,
    eig_max: f64,
}

/// Serializable description of a matrix, used by configs and reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatrixSpec {
    Identity { dim: usize },
    Diagonal { entries: Vec<f64> },
    Full { dim: usize, row_major: Vec<f64> },
}

impl MatrixSpec {
    pub fn build(&self) -> Result<AnisotropyMatrix> {
        match self {
            MatrixSpec::Identity { dim } => AnisotropyMatrix::identity(*dim),
            MatrixSpec::Diagonal { entries } => AnisotropyMatrix::diagonal(entries),
            MatrixSpec::Full { dim, row_major } => AnisotropyMatrix::from_row_major(*dim, row_major),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MatrixSpec::Identity { dim } | MatrixSpec::Full { dim, .. } => *dim,
            MatrixSpec::Diagonal { entries } => entries.len(),
        }
    }
}

impl AnisotropyMatrix {
    /// Validates symmetry and positive definiteness; never projects.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let d = entries.nrows();
        if d < 2 || entries.ncols() != d {
            return Err(invalid(format!(
                "anisotropy matrix must be square with d >= 2, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(invalid("anisotropy matrix has non-finite entries"));
        }
        let scale = entries.amax().max(f64::MIN_POSITIVE);
        for i in 0..d {
            for j in (i + 1)..d {
                if (entries[(i, j)] - entries[(j, i)]).abs() > SYMMETRY_RTOL * scale {
                    return Err(invalid(format!(
                        "anisotropy matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let chol = entries
            .clone()
            .cholesky()
            .ok_or_else(|| invalid("anisotropy matrix is not positive definite"))?;
        let l = chol.l();
        let det = l.diagonal().iter().product::<f64>().powi(2);
        let inverse = chol.inverse();
        let l_inv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numeric("Cholesky factor is singular".into()))?;
        let eig = SymmetricEigen::new(entries.clone()).eigenvalues;
        let eig_min = eig.min();
        let eig_max = eig.max();
        if eig_min <= 0.0 {
            return Err(invalid("anisotropy matrix has a nonpositive eigenvalue"));
        }
        Ok(Self {
            entries,
            inverse,
            chol_inv_t: l_inv.transpose(),
            chol: l,
            det,
            eig_min,
            eig_max,
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim))
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    pub fn from_row_major(dim: usize, values: &[f64]) -> Result<Self> {
        if values.len() != dim * dim {
            return Err(invalid(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                values.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, values))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    /// Lower Cholesky factor `L` with `A = L Lᵀ`.
    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// `|A|`.
    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn eig_min(&self) -> f64 {
        self.eig_min
    }

    pub fn eig_max(&self) -> f64 {
        self.eig_max
    }

    /// Ellipticity ratio `λ_max / λ_min`.
    pub fn ellipticity(&self) -> f64 {
        self.eig_max / self.eig_min
    }

    pub fn is_identity(&self) -> bool {
        self.entries == DMatrix::identity(self.dim(), self.dim())
    }

    pub fn spec(&self) -> MatrixSpec {
        let d = self.dim();
        if self.is_identity() {
            return MatrixSpec::Identity { dim: d };
        }
        let off_diagonal_zero =
            (0..d).all(|i| (0..d).all(|j| i == j || self.entries[(i, j)] == 0.0));
        if off_diagonal_zero {
            MatrixSpec::Diagonal {
                entries: self.entries.diagonal().iter().copied().collect(),
            }
        } else {
            let mut row_major = Vec::with_capacity(d * d);
            for i in 0..d {
                for j in 0..d {
                    row_major.push(self.entries[(i, j)]);
                }
            }
            MatrixSpec::Full { dim: d, row_major }
        }
    }

    fn apply(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
        let d = m.nrows();
        (0..d)
            .map(|i| (0..d).map(|j| m[(i, j)] * x[j]).sum())
            .collect()
    }

    /// `A x`.
    pub fn mul(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(Self::apply(&self.entries, x))
    }

    /// `A⁻¹ x`.
    pub fn mul_inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(Self::apply(&self.inverse, x))
    }

    /// `|x|_A = sqrt(A x · x)`.
    pub fn anorm(&self, x: &[f64]) -> Result<f64> {
        let ax = self.mul(x)?;
        Ok(dot(&ax, x).max(0.0).sqrt())
    }

    /// `|x|_{A⁻¹} = sqrt(A⁻¹ x · x)`.
    pub fn anorm_inv(&self, x: &[f64]) -> Result<f64> {
        let ax = self.mul_inverse(x)?;
        Ok(dot(&ax, x).max(0.0).sqrt())
    }

    /// Gradient of the quadratic form `x ↦ A x · x`, i.e. `2 A x`.
    pub fn quad_form_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.mul(x)?.into_iter().map(|v| 2.0 * v).collect())
    }

    /// Inverse point with respect to `∂E_A(1)`: `x / |x|²_{A⁻¹}`.
    pub fn invert_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n2 = {
            let ax = self.mul_inverse(x)?;
            dot(&ax, x)
        };
        if n2 == 0.0 || !n2.is_finite() {
            return Err(Error::Domain(
                "inversion is undefined at the origin".to_string(),
            ));
        }
        Ok(x.iter().map(|v| v / n2).collect())
    }

    /// Generalized Kelvin transform `K[u](x) = u(x / |x|²_{A⁻¹})`.
    pub fn kelvin_transform<F: Fn(&[f64]) -> f64>(&self, u: F, x: &[f64]) -> Result<f64> {
        let xt = self.invert_point(x)?;
        Ok(u(&xt))
    }

    /// Point `r L θ` on `∂E_A(r)` for a unit vector `θ`.
    pub fn boundary_point(&self, r: f64, theta: &[f64]) -> Vec<f64> {
        Self::apply(&self.chol, theta)
            .into_iter()
            .map(|v| r * v)
            .collect()
    }

    /// `L⁻ᵀ θ`, parallel to the outward normal of `∂E_A(r)` at `r L θ`.
    pub fn normal_direction(&self, theta: &[f64]) -> Vec<f64> {
        Self::apply(&self.chol_inv_t, theta)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Hypersurface area of the unit sphere in `ℝ^d`, `ω_d = 2π^{d/2} / Γ(d/2)`.
pub fn unit_sphere_area(d: usize) -> f64 {
    // Recurrence ω_{d+2} = 2π ω_d / d, with ω_1 = 2, ω_2 = 2π.
    let mut w = if d % 2 == 0 { 2.0 * PI } else { 2.0 };
    let mut k = if d % 2 == 0 { 2 } else { 1 };
    while k < d {
        w *= 2.0 * PI / k as f64;
        k += 2;
    }
    w
}

/// Measure used for surface integrals over `∂E_A(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceMeasure {
    /// True hypersurface measure of the ellipsoid boundary.
    Geometric,
    /// Push-forward of the round sphere measure under `θ ↦ r L θ`, scaled by
    /// `|A|^{1/2}`; its total mass is exactly `r^{d-1} |A|^{1/2} ω_d`.
    Affine,
}

/// The ellipsoid `E_A(r)`.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    pub matrix: AnisotropyMatrix,
    pub radius: f64,
}

impl Ellipsoid {
    pub fn new(matrix: AnisotropyMatrix, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("ellipsoid radius must be positive, got {radius}")));
        }
        Ok(Self { matrix, radius })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.matrix.anorm_inv(x)? < self.radius)
    }

    pub fn on_boundary(&self, x: &[f64], tol: f64) -> Result<bool> {
        Ok((self.matrix.anorm_inv(x)? - self.radius).abs() <= tol * self.radius)
    }

    /// Total mass of [`SurfaceMeasure::Affine`], `r^{d-1} |A|^{1/2} ω_d`.
    pub fn affine_area(&self) -> f64 {
        let d = self.dim();
        self.radius.powi(d as i32 - 1) * self.matrix.det().sqrt() * unit_sphere_area(d)
    }

    /// `∫_{∂E_A(r)} f(x, n) dS` with `n` the outward unit normal.
    ///
    /// `d = 2` uses the periodic trapezoid rule in the angle, `d = 3` a
    /// Gauss–Legendre (in `cos ϑ`) × trapezoid (in `φ`) product rule; both are
    /// refined by doubling until two levels agree to `rtol`.
    pub fn surface_quadrature<F>(&self, measure: SurfaceMeasure, mut f: F, rtol: f64) -> Result<f64>
    where
        F: FnMut(&[f64], &[f64]) -> f64,
    {
        let d = self.dim();
        if d > 3 {
            return Err(Error::UnsupportedDimension(d));
        }
        let mut previous: Option<f64> = None;
        let mut n = 16usize;
        let max_n = if d == 2 { 1 << 16 } else { 512 };
        while n <= max_n {
            let value = match d {
                2 => self.level_2d(measure, &mut f, n)?,
                _ => self.level_3d(measure, &mut f, n)?,
            };
            if let Some(prev) = previous {
                if (value - prev).abs() <= rtol * value.abs().max(prev.abs()) + 1e-300 {
                    return Ok(value);
                }
            }
            previous = Some(value);
            n *= 2;
        }
        Err(Error::Diverged(format!(
            "surface quadrature on ∂E_A({}) did not settle to rtol {rtol:e}",
            self.radius
        )))
    }

    fn weight(&self, measure: SurfaceMeasure, nd: &[f64]) -> f64 {
        let base = self.matrix.det().sqrt() * self.radius.powi(self.dim() as i32 - 1);
        match measure {
            SurfaceMeasure::Affine => base,
            SurfaceMeasure::Geometric => base * norm(nd),
        }
    }

    fn sample<F>(&self, measure: SurfaceMeasure, f: &mut F, theta: &[f64]) -> Result<f64>
    where
        F: FnMut(&[f64], &[f64]) -> f64,
    {
        let x = self.matrix.boundary_point(self.radius, theta);
        let nd = self.matrix.normal_direction(theta);
        let len = norm(&nd);
        let normal: Vec<f64> = nd.iter().map(|v| v / len).collect();
        let v = f(&x, &normal);
        if !v.is_finite() {
            return Err(Error::Numeric(format!("non-finite surface integrand at {x:?}")));
        }
        Ok(v * self.weight(measure, &nd))
    }

    fn level_2d<F>(&self, measure: SurfaceMeasure, f: &mut F, n: usize) -> Result<f64>
    where
        F: FnMut(&[f64], &[f64]) -> f64,
    {
        let h = 2.0 * PI / n as f64;
        let mut acc = 0.0;
        for k in 0..n {
            let phi = k as f64 * h;
            acc += self.sample(measure, f, &[phi.cos(), phi.sin()])?;
        }
        Ok(acc * h)
    }

    fn level_3d<F>(&self, measure: SurfaceMeasure, f: &mut F, n: usize) -> Result<f64>
    where
        F: FnMut(&[f64], &[f64]) -> f64,
    {
        let gl = GaussLegendre::new(n);
        let n_phi = 2 * n;
        let h = 2.0 * PI / n_phi as f64;
        let mut acc = 0.0;
        for (u, w) in gl.nodes.iter().zip(&gl.weights) {
            let s = (1.0 - u * u).max(0.0).sqrt();
            let mut ring = 0.0;
            for k in 0..n_phi {
                let phi = k as f64 * h;
                ring += self.sample(measure, f, &[s * phi.cos(), s * phi.sin(), *u])?;
            }
            acc += w * ring * h;
        }
        Ok(acc)
    }
}
