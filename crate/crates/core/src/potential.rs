//! Potentials `V(x)` with structural tags, closed-form dilation
//! `V_R(x) = R^p V(Rx)` and homogeneity metadata.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::anisotropy::{norm, AnisotropyMatrix};
use crate::error::{invalid, Result};

pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Smooth bump on `[0, 1]`, equal to 1 at the midpoint and `C¹` at both ends.
pub fn bump_profile(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        16.0 * (s * (1.0 - s)).powi(2)
    }
}

#[derive(Clone)]
pub enum PotentialKind {
    Zero,
    Constant(f64),
    /// `coef · r^exponent`.
    PowerLaw { coef: f64, exponent: f64 },
    /// Piecewise-linear profile in `r`; evaluates to NaN outside the grid.
    RadialTable { grid: Vec<f64>, values: Vec<f64> },
    /// Sum of smooth bumps `amplitude · bump((r - a)/(b - a))` over the bands `(a, b)`.
    AnnulusBump { bands: Vec<(f64, f64)>, amplitude: f64 },
    /// `factor · f(scale · x)`; `scale` and `factor` accumulate dilations.
    Generic {
        f: ScalarField,
        radial: bool,
        scale: f64,
        factor: f64,
    },
}

impl fmt::Debug for PotentialKind {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(fm, "Zero"),
            Self::Constant(c) => write!(fm, "Constant({c})"),
            Self::PowerLaw { coef, exponent } => {
                write!(fm, "PowerLaw {{ coef: {coef}, exponent: {exponent} }}")
            }
            Self::RadialTable { grid, .. } => write!(fm, "RadialTable({} points)", grid.len()),
            Self::AnnulusBump { bands, amplitude } => {
                write!(fm, "AnnulusBump {{ bands: {bands:?}, amplitude: {amplitude} }}")
            }
            Self::Generic { radial, scale, factor, .. } => write!(
                fm,
                "Generic {{ radial: {radial}, scale: {scale}, factor: {factor} }}"
            ),
        }
    }
}

/// A scalar potential on `ℝ^d ∖ {0}`.
///
/// Radial kinds are profiles of a radius. [`Potential::eval`] uses the
/// Euclidean radius; [`Potential::eval_in`] uses `|x|_{A⁻¹}`.
#[derive(Debug, Clone)]
pub struct Potential {
    pub kind: PotentialKind,
    pub dim: usize,
    homogeneity: Option<f64>,
}

impl Potential {
    pub fn zero(dim: usize) -> Self {
        Self {
            kind: PotentialKind::Zero,
            dim,
            homogeneity: None,
        }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        if value == 0.0 {
            return Self::zero(dim);
        }
        Self {
            kind: PotentialKind::Constant(value),
            dim,
            homogeneity: Some(0.0),
        }
    }

    pub fn power_law(dim: usize, coef: f64, exponent: f64) -> Self {
        Self {
            kind: PotentialKind::PowerLaw { coef, exponent },
            dim,
            homogeneity: Some(exponent),
        }
    }

    /// Hardy potential `-λ r^{-p}`, so that `Q(u) = -Δ_p u - λ r^{-p} |u|^{p-2} u`.
    pub fn hardy(dim: usize, lambda: f64, p: f64) -> Self {
        Self::power_law(dim, -lambda, -p)
    }

    pub fn radial_table(dim: usize, grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(invalid(
                "radial table needs at least two points and matching lengths",
            ));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) || grid[0] < 0.0 {
            return Err(invalid("radial table grid must be nonnegative and strictly increasing"));
        }
        if values.iter().chain(&grid).any(|v| !v.is_finite()) {
            return Err(invalid("radial table contains non-finite entries"));
        }
        Ok(Self {
            kind: PotentialKind::RadialTable { grid, values },
            dim,
            homogeneity: None,
        })
    }

    pub fn annulus_bump(dim: usize, bands: Vec<(f64, f64)>, amplitude: f64) -> Result<Self> {
        if bands.iter().any(|&(a, b)| !(a >= 0.0 && b > a && b.is_finite())) {
            return Err(invalid("annulus bump bands must satisfy 0 <= a < b"));
        }
        Ok(Self {
            kind: PotentialKind::AnnulusBump { bands, amplitude },
            dim,
            homogeneity: None,
        })
    }

    pub fn generic<F>(dim: usize, f: F, radial: bool, homogeneity: Option<f64>) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            kind: PotentialKind::Generic {
                f: Arc::new(f),
                radial,
                scale: 1.0,
                factor: 1.0,
            },
            dim,
            homogeneity,
        }
    }

    /// Degree `s` with `V(tx) = t^s V(x)`, when known.
    pub fn homogeneity(&self) -> Option<f64> {
        self.homogeneity
    }

    pub fn is_radial(&self) -> bool {
        match &self.kind {
            PotentialKind::Generic { radial, .. } => *radial,
            _ => true,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, PotentialKind::Zero)
    }

    /// Exponent `s` with `|V| ≲ r^{-s}` near the origin (0 for bounded kinds).
    pub fn origin_singularity(&self) -> f64 {
        match &self.kind {
            PotentialKind::PowerLaw { coef, exponent } if *coef != 0.0 => (-exponent).max(0.0),
            _ => 0.0,
        }
    }

    /// Value of a radial kind at radius `r`. Generic radial potentials are
    /// sampled along the first coordinate axis.
    pub fn at_radius(&self, r: f64) -> f64 {
        match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Constant(c) => *c,
            PotentialKind::PowerLaw { coef, exponent } => {
                if *coef == 0.0 {
                    0.0
                } else {
                    coef * r.powf(*exponent)
                }
            }
            PotentialKind::RadialTable { grid, values } => interpolate(grid, values, r),
            PotentialKind::AnnulusBump { bands, amplitude } => {
                amplitude
                    * bands
                        .iter()
                        .map(|&(a, b)| bump_profile((r - a) / (b - a)))
                        .sum::<f64>()
            }
            PotentialKind::Generic { f, scale, factor, .. } => {
                let mut x = vec![0.0; self.dim];
                x[0] = scale * r;
                factor * f(&x)
            }
        }
    }

    /// `V(x)` with radial kinds evaluated at the Euclidean radius.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            PotentialKind::Generic { f, scale, factor, .. } => {
                let y: Vec<f64> = x.iter().map(|v| v * scale).collect();
                factor * f(&y)
            }
            _ => self.at_radius(norm(x)),
        }
    }

    /// `V(x)` with radial kinds evaluated at `|x|_{A⁻¹}`.
    pub fn eval_in(&self, matrix: &AnisotropyMatrix, x: &[f64]) -> f64 {
        match &self.kind {
            PotentialKind::Generic { .. } => self.eval(x),
            _ => match matrix.anorm_inv(x) {
                Ok(r) => self.at_radius(r),
                Err(_) => f64::NAN,
            },
        }
    }

    /// `V_R(x) = R^p V(R x)`.
    pub fn dilate(&self, r_factor: f64, p: f64) -> Result<Self> {
        if !(r_factor > 0.0 && r_factor.is_finite()) {
            return Err(invalid(format!("dilation factor must be positive, got {r_factor}")));
        }
        let amp = r_factor.powf(p);
        let kind = match &self.kind {
            PotentialKind::Zero => PotentialKind::Zero,
            PotentialKind::Constant(c) => PotentialKind::Constant(c * amp),
            PotentialKind::PowerLaw { coef, exponent } => {
                let total = p + exponent;
                let factor = if total == 0.0 { 1.0 } else { r_factor.powf(total) };
                PotentialKind::PowerLaw {
                    coef: coef * factor,
                    exponent: *exponent,
                }
            }
            PotentialKind::RadialTable { grid, values } => PotentialKind::RadialTable {
                grid: grid.iter().map(|g| g / r_factor).collect(),
                values: values.iter().map(|v| v * amp).collect(),
            },
            PotentialKind::AnnulusBump { bands, amplitude } => PotentialKind::AnnulusBump {
                bands: bands
                    .iter()
                    .map(|&(a, b)| (a / r_factor, b / r_factor))
                    .collect(),
                amplitude: amplitude * amp,
            },
            PotentialKind::Generic { f, radial, scale, factor } => PotentialKind::Generic {
                f: Arc::clone(f),
                radial: *radial,
                scale: scale * r_factor,
                factor: factor * amp,
            },
        };
        Ok(Self {
            kind,
            dim: self.dim,
            homogeneity: self.homogeneity,
        })
    }
}

fn interpolate(grid: &[f64], values: &[f64], r: f64) -> f64 {
    let n = grid.len();
    if !(r >= grid[0] && r <= grid[n - 1]) {
        return f64::NAN;
    }
    let i = grid.partition_point(|g| *g <= r).clamp(1, n - 1);
    let (g0, g1) = (grid[i - 1], grid[i]);
    let t = (r - g0) / (g1 - g0);
    values[i - 1] + t * (values[i] - values[i - 1])
}

/// Serializable potential description for configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero,
    Constant { value: f64 },
    /// `-λ r^{-p}`; `p` is taken from the scenario.
    Hardy { lambda: f64 },
    PowerLaw { coef: f64, exponent: f64 },
    RadialTable { grid: Vec<f64>, values: Vec<f64> },
    AnnulusBump { bands: Vec<(f64, f64)>, amplitude: f64 },
}

impl PotentialSpec {
    pub fn build(&self, dim: usize, p: f64) -> Result<Potential> {
        Ok(match self {
            Self::Zero => Potential::zero(dim),
            Self::Constant { value } => Potential::constant(dim, *value),
            Self::Hardy { lambda } => Potential::hardy(dim, *lambda, p),
            Self::PowerLaw { coef, exponent } => Potential::power_law(dim, *coef, *exponent),
            Self::RadialTable { grid, values } => {
                Potential::radial_table(dim, grid.clone(), values.clone())?
            }
            Self::AnnulusBump { bands, amplitude } => {
                Potential::annulus_bump(dim, bands.clone(), *amplitude)?
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hardy_is_a_dilation_fixed_point() {
        let v = Potential::hardy(3, 0.1, 2.0);
        for r in [0.5, 4.0, 1e-3, 123.0] {
            let w = v.dilate(r, 2.0).unwrap();
            for x in [[0.3, 0.1, -0.2], [2.0, 0.0, 1.0]] {
                assert_eq!(w.eval(&x), v.eval(&x));
            }
        }
        assert_eq!(v.homogeneity(), Some(-2.0));
    }

    #[test]
    fn bump_dilation_moves_support_and_scales_amplitude() {
        let p = 2.5;
        let v = Potential::annulus_bump(2, vec![(1.0, 2.0)], 1.0).unwrap();
        let w = v.dilate(4.0, p).unwrap();
        for x in [0.2, 0.26, 0.3, 0.375, 0.45, 0.55] {
            let expected = 4f64.powf(p) * v.at_radius(4.0 * x);
            assert!((w.at_radius(x) - expected).abs() <= 1e-12 * expected.abs().max(1.0));
        }
        assert_eq!(w.at_radius(0.2), 0.0);
        assert_eq!(w.at_radius(0.55), 0.0);
        assert!(w.at_radius(0.375) > 0.0);
    }

    #[test]
    fn constant_dilation() {
        let v = Potential::constant(2, 3.0);
        let w = v.dilate(2.0, 3.0).unwrap();
        assert_eq!(w.eval(&[0.1, 0.2]), 24.0);
    }

    #[test]
    fn table_interpolates_and_rejects_outside() {
        let v = Potential::radial_table(2, vec![1.0, 2.0, 4.0], vec![0.0, 1.0, 3.0]).unwrap();
        assert_eq!(v.at_radius(1.5), 0.5);
        assert_eq!(v.at_radius(3.0), 2.0);
        assert!(v.at_radius(0.5).is_nan());
        assert!(Potential::radial_table(2, vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn eval_in_uses_the_ellipse_radius() {
        let a = AnisotropyMatrix::diagonal(&[4.0, 1.0]).unwrap();
        let v = Potential::power_law(2, 1.0, -1.0);
        assert_eq!(v.eval_in(&a, &[2.0, 0.0]), 1.0);
        assert_eq!(v.eval(&[2.0, 0.0]), 0.5);
    }

    #[test]
    fn spec_round_trip() {
        let spec = PotentialSpec::AnnulusBump {
            bands: vec![(1.0, 2.0)],
            amplitude: 0.5,
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<PotentialSpec>(&text).unwrap(), spec);
    }

    proptest! {
        #[test]
        fn power_law_homogeneity(t in 0.01f64..100.0, x in -5.0f64..5.0, y in 0.1f64..5.0, p in 1.1f64..5.0) {
            let v = Potential::power_law(2, 0.7, -p);
            let lhs = v.eval(&[t * x, t * y]);
            let rhs = t.powf(-p) * v.eval(&[x, y]);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
        }

        #[test]
        fn dilation_semigroup(r1 in 0.05f64..20.0, r2 in 0.05f64..20.0, s in 0.05f64..3.0, p in 1.1f64..4.0) {
            let kinds = [
                Potential::power_law(2, 1.3, -0.5),
                Potential::constant(2, 2.0),
                Potential::annulus_bump(2, vec![(0.5, 1.5)], 2.0).unwrap(),
                Potential::generic(2, |x| (x[0] + 2.0 * x[1]).sin() + 2.0, false, None),
            ];
            for v in &kinds {
                let a = v.dilate(r1, p).unwrap().dilate(r2, p).unwrap();
                let b = v.dilate(r1 * r2, p).unwrap();
                let x = [s * 0.6, s * 0.8];
                let (va, vb) = (a.eval(&x), b.eval(&x));
                prop_assert!((va - vb).abs() <= 1e-12 * va.abs().max(vb.abs()).max(1e-300), "{v:?}: {va} vs {vb}");
            }
        }
    }
}
