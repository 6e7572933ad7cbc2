use serde::{Deserialize, Serialize};

use super::grid::DiscreteField2D;
use crate::error::{invalid, Result};

/// Extremes of a positive field on one band `R/2 ≤ |x|_{A⁻¹} < 3R/2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarnackRung {
    pub radius: f64,
    pub inf: f64,
    pub sup: f64,
    pub ratio: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarnackReport {
    pub rungs: Vec<HarnackRung>,
    pub max_ratio: f64,
    pub min_ratio: f64,
    /// `max_ratio / min_ratio`: how far the per-rung constant moves with `R`.
    pub spread: f64,
}

/// Per-rung `sup/inf` over grid nodes in each band of `ladder`.
pub fn harnack_ratio(field: &DiscreteField2D, ladder: &[f64]) -> Result<HarnackReport> {
    if ladder.is_empty() || ladder.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(invalid("ladder radii must be positive"));
    }
    let mut rungs = Vec::with_capacity(ladder.len());
    for &radius in ladder {
        let (lo, hi) = (0.5 * radius, 1.5 * radius);
        let mut inf = f64::INFINITY;
        let mut sup = 0.0f64;
        let mut nodes = 0;
        for (node, &u) in field.grid.nodes().iter().zip(&field.values) {
            if node.rho >= lo && node.rho < hi {
                if u <= 0.0 {
                    return Err(invalid(format!(
                        "field is not positive at ({}, {})",
                        node.x[0], node.x[1]
                    )));
                }
                inf = inf.min(u);
                sup = sup.max(u);
                nodes += 1;
            }
        }
        if nodes == 0 {
            return Err(invalid(format!("no grid nodes in the band around R = {radius}")));
        }
        rungs.push(HarnackRung { radius, inf, sup, ratio: sup / inf, nodes });
    }
    let max_ratio = rungs.iter().fold(0.0f64, |m, r| m.max(r.ratio));
    let min_ratio = rungs.iter().fold(f64::INFINITY, |m, r| m.min(r.ratio));
    Ok(HarnackReport { rungs, max_ratio, min_ratio, spread: max_ratio / min_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anisotropy::AnisotropyMatrix;
    use crate::fundamental::FundamentalSolution;
    use crate::planar::grid::AnnularGrid2D;

    #[test]
    fn constant_field_has_unit_ratios() {
        let g = AnnularGrid2D::new(AnisotropyMatrix::identity(2).unwrap(), 0.1, 2.0, 1.0 / 32.0).unwrap();
        let f = DiscreteField2D::from_fn(g, |_| 3.0).unwrap();
        let rep = harnack_ratio(&f, &[1.0, 0.5, 0.25]).unwrap();
        assert!(rep.rungs.iter().all(|r| r.ratio == 1.0));
        assert_eq!(rep.spread, 1.0);
    }

    #[test]
    fn inverse_radius_profile_gives_ratio_three() {
        // p = 1.5 in the plane: the fundamental solution is a multiple of 1/r.
        let a = AnisotropyMatrix::identity(2).unwrap();
        let fs = FundamentalSolution::new(1.5, a.clone()).unwrap();
        let h = 1.0 / 128.0;
        let g = AnnularGrid2D::new(a, 0.1, 2.0, h).unwrap();
        let f = DiscreteField2D::from_fn(g, |x| fs.mu(x).unwrap()).unwrap();
        let rep = harnack_ratio(&f, &[1.0, 0.5]).unwrap();
        for r in &rep.rungs {
            assert!((r.ratio - 3.0).abs() < 4.0 * h / r.radius, "{r:?}");
        }
    }

    #[test]
    fn nonpositive_values_are_rejected() {
        let g = AnnularGrid2D::new(AnisotropyMatrix::identity(2).unwrap(), 0.1, 2.0, 0.1).unwrap();
        let f = DiscreteField2D::from_fn(g, |x| x[0]).unwrap();
        assert!(harnack_ratio(&f, &[1.0]).is_err());
    }
}
