use serde::{Deserialize, Serialize};

use super::energy::EnergyModel;
use super::grid::{AnnularGrid2D, DiscreteField2D};
use crate::error::{invalid, Error, Result};
use crate::potential::Potential;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KelvinResidual {
    pub h: f64,
    pub p: f64,
    /// Exponent of the weight `|x|_{A⁻¹}^β` in the image operator.
    pub weight_exponent: f64,
    pub image_inner: f64,
    pub image_outer: f64,
    pub image_nodes: usize,
    /// `max |∂E/∂v_i| / (p h)` over free image nodes.
    pub residual: f64,
}

/// Kelvin image `v(y) = u(y / |y|²_{A⁻¹})` of a planar field, sampled by
/// bilinear interpolation on a grid with the same spacing over the image
/// annulus shrunk by the relative `margin` at both ends.
pub fn kelvin_image(u: &DiscreteField2D, margin: f64) -> Result<DiscreteField2D> {
    let grid = &u.grid;
    if grid.inner <= 0.0 {
        return Err(invalid("the Kelvin image of an annulus around the origin contains the origin"));
    }
    if !(0.0..0.5).contains(&margin) {
        return Err(invalid("margin must lie in [0, 0.5)"));
    }
    let inner = (1.0 + margin) / grid.outer;
    let outer = (1.0 - margin) / grid.inner;
    if inner >= outer {
        return Err(invalid("margin leaves an empty image annulus"));
    }
    let image = AnnularGrid2D::new(grid.matrix.clone(), inner, outer, grid.h)?;
    let mut values = Vec::with_capacity(image.node_count());
    for node in image.nodes() {
        let z = grid.matrix.invert_point(&node.x)?;
        values.push(grid.interpolate(&u.values, &z).map_err(|_| {
            Error::Domain("Kelvin image reaches outside the source grid; increase the margin".into())
        })?);
    }
    DiscreteField2D::from_values(image, values)
}

/// Discrete Euler–Lagrange residual of the Kelvin image of `u` for the image
/// operator: `-Δ_{2,A}` when `p = 2`, the `|x|^{2(p-2)}_{A⁻¹}`-weighted
/// `(p, A)`-Laplacian when `p > 2`. The residual is flux scaled (divided by
/// `p h` rather than `p h²`) so that bilinear interpolation error enters at
/// first order.
pub fn kelvin_residual(u: &DiscreteField2D, p: f64, margin: f64) -> Result<KelvinResidual> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(invalid("Kelvin check covers p = d and p > d only (d = 2)"));
    }
    let v = kelvin_image(u, margin)?;
    let beta = 2.0 * (p - 2.0);
    let model = EnergyModel::new(v.grid.clone(), p, &Potential::zero(2))?.with_weight_exponent(beta)?;
    let h = v.grid.h;
    let residual = model
        .free_gradient(&v.values)
        .iter()
        .fold(0.0f64, |m, g| m.max(g.abs()))
        / (p * h);
    Ok(KelvinResidual {
        h,
        p,
        weight_exponent: beta,
        image_inner: v.grid.inner,
        image_outer: v.grid.outer,
        image_nodes: v.grid.node_count(),
        residual,
    })
}

/// Observed orders `log₂(e_k / e_{k+1})` for residuals at halved spacings.
pub fn observed_orders(residuals: &[f64]) -> Vec<f64> {
    residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anisotropy::AnisotropyMatrix;

    #[test]
    fn constant_field_has_zero_residual() {
        let g = AnnularGrid2D::new(AnisotropyMatrix::diagonal(&[4.0, 1.0]).unwrap(), 0.6, 1.4, 1.0 / 16.0).unwrap();
        let u = DiscreteField2D::from_fn(g, |_| 1.7).unwrap();
        assert_eq!(kelvin_residual(&u, 2.0, 0.1).unwrap().residual, 0.0);
        assert_eq!(kelvin_residual(&u, 3.0, 0.1).unwrap().residual, 0.0);
    }

    #[test]
    fn log_image_residual_shrinks_with_h() {
        let a = AnisotropyMatrix::diagonal(&[4.0, 1.0]).unwrap();
        let mut res = Vec::new();
        for h in [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0] {
            let g = AnnularGrid2D::new(a.clone(), 0.6, 1.4, h).unwrap();
            let u = DiscreteField2D::from_fn(g, |x| -a.anorm_inv(x).unwrap().ln()).unwrap();
            res.push(kelvin_residual(&u, 2.0, 0.1).unwrap().residual);
        }
        let orders = observed_orders(&res);
        assert!(orders.iter().all(|o| *o > 0.9), "{res:?} {orders:?}");
    }

    #[test]
    fn disk_and_small_exponents_are_rejected() {
        let a = AnisotropyMatrix::identity(2).unwrap();
        let disk = AnnularGrid2D::new(a.clone(), 0.0, 1.0, 0.1).unwrap();
        let u = DiscreteField2D::from_fn(disk, |_| 1.0).unwrap();
        assert!(kelvin_residual(&u, 2.0, 0.1).is_err());
        let g = AnnularGrid2D::new(a, 0.5, 1.0, 0.1).unwrap();
        let u = DiscreteField2D::from_fn(g, |_| 1.0).unwrap();
        assert!(kelvin_residual(&u, 1.5, 0.1).is_err());
    }
}
