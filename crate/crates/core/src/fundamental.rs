//! Fundamental solutions of `-Δ_{p,A}` for constant `A`, their flux
//! normalization, weighted capacities of annuli, the Hardy constant and the
//! indicial exponents of the radial Hardy equation.

use serde::{Deserialize, Serialize};

use crate::anisotropy::{dot, unit_sphere_area, AnisotropyMatrix, Ellipsoid, SurfaceMeasure};
use crate::error::{check_dim, invalid, Error, Result};
use crate::profile::RadialTestFunction;
use crate::quad::{integrate_pieces_cosine, AdaptiveOptions};

fn check_exponents(p: f64, d: usize) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(invalid(format!("p must lie in (1, ∞), got {p}")));
    }
    if d < 2 {
        return Err(invalid(format!("dimension must be at least 2, got {d}")));
    }
    Ok(())
}

/// `C_{p,d,A}`: `(p-1)/(d-p) (|A|^{1/2} ω_d)^{-1/(p-1)}` for `p ≠ d`,
/// `(|A|^{1/2} ω_d)^{-1/(d-1)}` for `p = d`.
pub fn fundamental_constant(p: f64, d: usize, matrix: &AnisotropyMatrix) -> Result<f64> {
    check_exponents(p, d)?;
    check_dim(d, matrix.dim())?;
    let area = matrix.det().sqrt() * unit_sphere_area(d);
    let df = d as f64;
    Ok(if p == df {
        area.powf(-1.0 / (df - 1.0))
    } else {
        (p - 1.0) / (df - p) * area.powf(-1.0 / (p - 1.0))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelForm {
    Power,
    Log,
}

/// `μ(x) = C |x - y|_{A⁻¹}^{(p-d)/(p-1)}`, or `-C log |x - y|_{A⁻¹}` when `p = d`.
#[derive(Debug, Clone)]
pub struct FundamentalSolution {
    pub p: f64,
    pub dim: usize,
    pub matrix: AnisotropyMatrix,
    pub constant: f64,
    pub pole: Vec<f64>,
    pub form: KernelForm,
}

impl FundamentalSolution {
    pub fn new(p: f64, matrix: AnisotropyMatrix) -> Result<Self> {
        let dim = matrix.dim();
        let constant = fundamental_constant(p, dim, &matrix)?;
        Ok(Self {
            p,
            dim,
            constant,
            pole: vec![0.0; dim],
            form: if p == dim as f64 { KernelForm::Log } else { KernelForm::Power },
            matrix,
        })
    }

    pub fn with_pole(mut self, pole: Vec<f64>) -> Result<Self> {
        check_dim(self.dim, pole.len())?;
        self.pole = pole;
        Ok(self)
    }

    /// `(p - d)/(p - 1)`, zero in the log case.
    pub fn exponent(&self) -> f64 {
        (self.p - self.dim as f64) / (self.p - 1.0)
    }

    fn offset(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        check_dim(self.dim, x.len())?;
        let z: Vec<f64> = x.iter().zip(&self.pole).map(|(a, b)| a - b).collect();
        let r = self.matrix.anorm_inv(&z)?;
        if r == 0.0 {
            return Err(Error::Domain("fundamental solution evaluated at its pole".into()));
        }
        Ok((z, r))
    }

    /// Radial profile `r ↦ μ` with `r = |x - y|_{A⁻¹}`.
    pub fn radial(&self, r: f64) -> f64 {
        match self.form {
            KernelForm::Log => -self.constant * r.ln(),
            KernelForm::Power => self.constant * r.powf(self.exponent()),
        }
    }

    /// First and second `r`-derivatives of the radial profile.
    pub fn radial_derivatives(&self, r: f64) -> (f64, f64) {
        match self.form {
            KernelForm::Log => (-self.constant / r, self.constant / (r * r)),
            KernelForm::Power => {
                let a = self.exponent();
                let c = self.constant;
                (c * a * r.powf(a - 1.0), c * a * (a - 1.0) * r.powf(a - 2.0))
            }
        }
    }

    pub fn mu(&self, x: &[f64]) -> Result<f64> {
        let (_, r) = self.offset(x)?;
        Ok(self.radial(r))
    }

    /// `η = |∇μ|_A^{p-2} A∇μ = k |x - y|_{A⁻¹}^{-d} (x - y)`.
    pub fn mu_gradient_flux(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (z, r) = self.offset(x)?;
        let k = self.flux_coefficient();
        let scale = k * r.powi(-(self.dim as i32));
        Ok(z.into_iter().map(|v| v * scale).collect())
    }

    /// The coefficient `k` of `η`; `C|C|^{p-2} c(p,d)` for `p ≠ d`, `-C^{d-1}` for `p = d`.
    pub fn flux_coefficient(&self) -> f64 {
        let c = self.constant;
        match self.form {
            KernelForm::Log => -c.powf(self.p - 1.0),
            KernelForm::Power => {
                let a = self.exponent();
                c * c.abs().powf(self.p - 2.0) * a.abs().powf(self.p - 2.0) * a
            }
        }
    }

    /// Outward flux of `η` through `∂E_A(r)` around the pole; equals -1.
    pub fn flux_integral(&self, r: f64, rtol: f64) -> Result<f64> {
        let ellipsoid = Ellipsoid::new(self.matrix.clone(), r)?;
        let k = self.flux_coefficient();
        let d = self.dim as i32;
        ellipsoid.surface_quadrature(
            SurfaceMeasure::Geometric,
            |x, n| k * r.powi(-d) * dot(x, n),
            rtol,
        )
    }
}

/// Normalization of the capacity constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityNormalization {
    /// Energy over `ℝ^d`, including the factor `ω_d`.
    #[default]
    Full,
    /// Energy per unit solid angle.
    PerSolidAngle,
}

/// Default Kelvin weight `β = 2(p - d)`.
pub fn kelvin_weight(p: f64, d: usize) -> f64 {
    2.0 * (p - d as f64)
}

/// Exponent `γ = (p - d - β)/(p - 1)` of the extremal profile
/// `ψ(ρ) = (ρ^γ - R^γ)/(r^γ - R^γ)`.
pub fn capacity_exponent(p: f64, d: usize, beta: f64) -> f64 {
    (p - d as f64 - beta) / (p - 1.0)
}

/// `cap_{p,β}` of `{r < |x| < R}` with weight `|x|^β`.
///
/// The extremal energy integrates in closed form:
/// `∫_r^R ρ^{d-1+β} |ψ′|^p dρ = |γ|^{p-1} |r^γ - R^γ|^{1-p}`, so
/// `C′ = ω_d |γ|^{p-1}`; for `γ = 0` the value is `ω_d log(R/r)^{1-p}`.
pub fn weighted_capacity(p: f64, d: usize, beta: f64, r: f64, big_r: f64, normalization: CapacityNormalization) -> Result<f64> {
    check_exponents(p, d)?;
    if !(r > 0.0 && big_r > r) {
        return Err(invalid(format!("capacity needs 0 < r < R, got r = {r}, R = {big_r}")));
    }
    let g = capacity_exponent(p, d, beta);
    let energy = if g == 0.0 {
        (big_r / r).ln().powf(1.0 - p)
    } else if big_r.is_infinite() {
        if g > 0.0 {
            0.0
        } else {
            g.abs().powf(p - 1.0) * r.powf(g * (1.0 - p))
        }
    } else {
        g.abs().powf(p - 1.0) * (r.powf(g) - big_r.powf(g)).abs().powf(1.0 - p)
    };
    Ok(match normalization {
        CapacityNormalization::Full => unit_sphere_area(d) * energy,
        CapacityNormalization::PerSolidAngle => energy,
    })
}

/// `C′` of the closed form.
pub fn capacity_constant(p: f64, d: usize, beta: f64) -> f64 {
    unit_sphere_area(d) * capacity_exponent(p, d, beta).abs().powf(p - 1.0)
}

/// Direct quadrature of `∫ |x|^β |∇ψ|^p dx` for the extremal profile, in
/// the variable `t = log ρ`.
pub fn extremal_energy_quadrature(p: f64, d: usize, beta: f64, r: f64, big_r: f64) -> Result<f64> {
    check_exponents(p, d)?;
    if !(r > 0.0 && big_r > r && big_r.is_finite()) {
        return Err(invalid("extremal energy needs 0 < r < R < ∞"));
    }
    let g = capacity_exponent(p, d, beta);
    let df = d as f64;
    // ρ ψ′(ρ) as a function of ρ.
    let slope = move |rho: f64| -> f64 {
        if g == 0.0 {
            -1.0 / (big_r / r).ln()
        } else {
            g * rho.powf(g) / (r.powf(g) - big_r.powf(g))
        }
    };
    let integrand = |t: f64| {
        let rho = t.exp();
        rho.powf(df + beta - p) * slope(rho).abs().powf(p)
    };
    let value = integrate_pieces_cosine(
        integrand,
        &[r.ln(), big_r.ln()],
        AdaptiveOptions::with_rtol(1e-12),
    )?;
    Ok(unit_sphere_area(d) * value)
}

/// `C_H = |(p - d)/p|^p`.
pub fn hardy_constant(p: f64, d: usize) -> f64 {
    ((p - d as f64) / p).abs().powf(p)
}

/// Real roots of the indicial equation for `-Δ_p u - λ|x|^{-p} |u|^{p-2}u = 0`.
///
/// Substituting `u = r^γ` gives `λ = k(γ) := -|γ|^{p-2} γ ((p-1)γ + d - p)`.
/// `k` increases on `(-∞, γ*]` and decreases on `[γ*, ∞)` with
/// `γ* = (p-d)/p` and `k(γ*) = C_H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicialData {
    pub p: f64,
    pub dim: usize,
    pub lambda: f64,
    /// Ascending.
    pub roots: Vec<f64>,
    pub hardy_constant: f64,
    pub has_real_roots: bool,
}

/// `k(γ)`.
pub fn indicial_map(p: f64, d: usize, gamma: f64) -> f64 {
    if gamma == 0.0 {
        return 0.0;
    }
    -gamma.abs().powf(p - 2.0) * gamma * ((p - 1.0) * gamma + d as f64 - p)
}

pub fn indicial_roots(p: f64, d: usize, lambda: f64) -> Result<IndicialData> {
    check_exponents(p, d)?;
    if !lambda.is_finite() {
        return Err(invalid("λ must be finite"));
    }
    let ch = hardy_constant(p, d);
    let peak = (p - d as f64) / p;
    let k = |g: f64| indicial_map(p, d, g);
    let mut roots = Vec::new();
    if lambda == k(peak) || (lambda - ch).abs() <= 1e-14 * ch.max(1.0) {
        roots.push(peak);
    } else if lambda < k(peak) {
        // Increasing branch: k(lo) < λ ≤ k(peak).
        let mut step = 1.0;
        let mut lo = peak - step;
        while k(lo) >= lambda {
            step *= 2.0;
            lo = peak - step;
        }
        roots.push(bisect(|g| k(g) - lambda, lo, peak));
        step = 1.0;
        let mut hi = peak + step;
        while k(hi) >= lambda {
            step *= 2.0;
            hi = peak + step;
        }
        roots.push(bisect(|g| lambda - k(g), peak, hi));
    }
    Ok(IndicialData {
        p,
        dim: d,
        lambda,
        has_real_roots: !roots.is_empty(),
        roots,
        hardy_constant: ch,
    })
}

/// Bisection for an increasing sign change `f(lo) < 0 ≤ f(hi)`, run to the
/// float resolution of the bracket.
fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (fl, fh) = (f(lo).abs(), f(hi).abs());
    if fl <= fh {
        lo
    } else {
        hi
    }
}

/// Both sides of `∫|∇φ|^p ≥ ((d-p)/p)^p ∫ |φ|^p / (1 + |x|^p)` for a radial `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl HardyCheck {
    pub fn holds(&self) -> bool {
        self.lhs >= self.rhs
    }

    pub fn margin(&self) -> f64 {
        self.lhs - self.rhs
    }
}

pub fn hardy_inequality_check(p: f64, d: usize, u: &RadialTestFunction) -> Result<HardyCheck> {
    check_exponents(p, d)?;
    if p >= d as f64 {
        return Err(invalid("the Hardy inequality check requires p < d"));
    }
    let w = unit_sphere_area(d);
    let jac = |r: f64| w * r.powi(d as i32 - 1);
    let opts = AdaptiveOptions::with_rtol(1e-11);
    let breaks = u.breakpoints();
    let lhs = integrate_pieces_cosine(|r| u.derivative(r).abs().powf(p) * jac(r), &breaks, opts)?;
    let coef = ((d as f64 - p) / p).powf(p);
    let rhs = coef
        * integrate_pieces_cosine(
            |r| u.value(r).abs().powf(p) / (1.0 + r.powf(p)) * jac(r),
            &breaks,
            opts,
        )?;
    if !(lhs.is_finite() && rhs.is_finite()) {
        return Err(Error::Numeric("non-finite Hardy integrals".into()));
    }
    Ok(HardyCheck { lhs, rhs })
}
