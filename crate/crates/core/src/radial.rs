//! Elliptically symmetric reduction. For `u(x) = f(r)` with `r = |x|_{A⁻¹}`
//! the operator becomes `|f′|^{p-2}[(p-1)f″ + (d-1)f′/r]`, independent of `A`.
//!
//! Dirichlet problems are solved in conservative form on a log grid
//! `t = log r` with unknowns `(u, g)`, `g = r^{d-1}|u′|^{p-2}u′`:
//!
//! ```text
//! du/dt = r · φ(g r^{1-d}),   φ(s) = sign(s)|s|^{1/(p-1)}
//! dg/dt = r^d V(r) ψ(u),      ψ(u) = sign(u)|u|^{p-1}
//! ```
//!
//! Each cell is advanced by the implicit trapezoid rule, so the discrete flux
//! balance `g_{i+1} - g_i = ∫ r^{d-1} V ψ(u) dr` holds exactly for the
//! trapezoid quadrature of the right-hand side. The inner flux `g(ρ)` is found
//! by shooting with bisection.

use serde::{Deserialize, Serialize};

use crate::anisotropy::AnisotropyMatrix;
use crate::error::{invalid, Error, Result};
use crate::fundamental::FundamentalSolution;
use crate::morrey::SingularPoint;
use crate::potential::Potential;

/// `sign(s)|s|^{1/(p-1)}`, the inverse of `ψ`.
pub fn phi(s: f64, p: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s.signum() * s.abs().powf(1.0 / (p - 1.0))
    }
}

/// `sign(u)|u|^{p-1} = |u|^{p-2}u`, continuous at 0.
pub fn psi(u: f64, p: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u.signum() * u.abs().powf(p - 1.0)
    }
}

/// `|f′|^{p-2}[(p-1)f″ + (d-1)f′/r]` from the first two derivatives at `r`.
///
/// At a critical point with `p < 2` the prefactor is unbounded; the value is
/// reported as a domain error unless `f″ = 0` there as well.
pub fn radial_operator_apply(p: f64, d: usize, r: f64, d1: f64, d2: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(invalid(format!("radius must be positive, got {r}")));
    }
    let bracket = (p - 1.0) * d2 + (d as f64 - 1.0) / r * d1;
    if d1 == 0.0 {
        if p < 2.0 && bracket != 0.0 {
            return Err(Error::Domain(format!(
                "degenerate point f′ = 0 at r = {r} with p = {p} < 2"
            )));
        }
        return Ok(if p == 2.0 { bracket } else { 0.0 });
    }
    Ok(d1.abs().powf(p - 2.0) * bracket)
}

/// Dirichlet problem on the ellipsoidal annulus `ρ < |x|_{A⁻¹} < R`.
#[derive(Debug, Clone)]
pub struct RadialProblem {
    pub p: f64,
    pub dim: usize,
    pub matrix: AnisotropyMatrix,
    pub potential: Potential,
    pub inner: f64,
    pub outer: f64,
    pub bc_inner: f64,
    pub bc_outer: f64,
}

impl RadialProblem {
    pub fn new(p: f64, matrix: AnisotropyMatrix, potential: Potential, inner: f64, outer: f64, bc_inner: f64, bc_outer: f64) -> Result<Self> {
        let problem = Self {
            p,
            dim: matrix.dim(),
            matrix,
            potential,
            inner,
            outer,
            bc_inner,
            bc_outer,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(invalid(format!("p must lie in (1, ∞), got {}", self.p)));
        }
        if !(self.inner > 0.0 && self.outer > self.inner && self.outer.is_finite()) {
            return Err(invalid(format!(
                "need 0 < ρ < R, got [{}, {}]",
                self.inner, self.outer
            )));
        }
        if !(self.bc_inner.is_finite() && self.bc_outer.is_finite()) {
            return Err(invalid("boundary data must be finite"));
        }
        if !self.potential.is_radial() {
            return Err(invalid("the radial solver needs a radial potential"));
        }
        crate::error::check_dim(self.dim, self.potential.dim)
    }

    /// The problem for `u_R(x) = u(Rx)`: potential `V_R`, radii divided by `R`.
    pub fn dilated(&self, r: f64) -> Result<Self> {
        Ok(Self {
            potential: self.potential.dilate(r, self.p)?,
            inner: self.inner / r,
            outer: self.outer / r,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub cells: usize,
    /// Relative tolerance on the outer boundary value.
    pub bc_tol: f64,
    pub max_bisections: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            cells: 2048,
            bc_tol: 1e-13,
            max_bisections: 300,
        }
    }
}

/// Grid function of `r` with values `u` and flux `g = r^{d-1}|u′|^{p-2}u′`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialSolution {
    pub p: f64,
    pub dim: usize,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub flux: Vec<f64>,
    /// `r^d V(r)` at the nodes, kept for the conservation check.
    source_weight: Vec<f64>,
}

impl RadialSolution {
    /// `u′(r_i)`.
    pub fn derivative(&self, i: usize) -> f64 {
        let r = self.grid[i];
        phi(self.flux[i] * r.powi(1 - self.dim as i32), self.p)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    /// Cubic Hermite interpolation in `t = log r`; NaN outside the grid.
    pub fn eval(&self, r: f64) -> f64 {
        let (lo, hi) = self.range();
        let slack = 1e-12;
        if !(r >= lo * (1.0 - slack) && r <= hi * (1.0 + slack)) {
            return f64::NAN;
        }
        let r = r.clamp(lo, hi);
        let n = self.grid.len();
        let i = self.grid.partition_point(|g| *g <= r).clamp(1, n - 1) - 1;
        let (r0, r1) = (self.grid[i], self.grid[i + 1]);
        let (t0, t1) = (r0.ln(), r1.ln());
        let h = t1 - t0;
        let s = (r.ln() - t0) / h;
        let (u0, u1) = (self.values[i], self.values[i + 1]);
        let m0 = r0 * self.derivative(i) * h;
        let m1 = r1 * self.derivative(i + 1) * h;
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * u0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * u1
            + (s3 - s2) * m1
    }

    /// Largest per-cell defect of `g_{i+1} - g_i = ∫ r^{d-1} V ψ(u) dr`
    /// (trapezoid in `t`).
    pub fn conservation_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.grid.len() - 1 {
            let h = self.grid[i + 1].ln() - self.grid[i].ln();
            let src = 0.5
                * h
                * (self.source_weight[i] * psi(self.values[i], self.p)
                    + self.source_weight[i + 1] * psi(self.values[i + 1], self.p));
            let defect = self.flux[i + 1] - self.flux[i] - src;
            let scale = self.flux[i].abs().max(self.flux[i + 1].abs()).max(1e-300);
            worst = worst.max(defect.abs() / scale.max(src.abs()));
        }
        worst
    }

    /// `(r, u, flux)` rows.
    pub fn series(&self) -> Vec<[f64; 3]> {
        (0..self.grid.len())
            .map(|i| [self.grid[i], self.values[i], self.flux[i]])
            .collect()
    }
}

struct Marcher<'a> {
    p: f64,
    dim: usize,
    t: &'a [f64],
    r: Vec<f64>,
    /// `r^d V(r)`.
    w: Vec<f64>,
    /// `r^{1-d}`.
    inv: Vec<f64>,
}

const BLOWUP: f64 = 1e250;

impl<'a> Marcher<'a> {
    fn new(p: f64, dim: usize, t: &'a [f64], v: &dyn Fn(f64) -> f64, scale: f64) -> Result<Self> {
        let r: Vec<f64> = t.iter().map(|t| t.exp()).collect();
        let mut w = Vec::with_capacity(r.len());
        for &ri in &r {
            let vi = v(ri);
            if !vi.is_finite() {
                return Err(invalid(format!("potential is not finite at r = {ri:e}")));
            }
            w.push(scale * ri.powi(dim as i32) * vi);
        }
        let inv = r.iter().map(|ri| ri.powi(1 - dim as i32)).collect();
        Ok(Self { p, dim, t, r, w, inv })
    }

    fn f(&self, i: usize, g: f64) -> f64 {
        self.r[i] * phi(g * self.inv[i], self.p)
    }

    fn g(&self, i: usize, u: f64) -> f64 {
        self.w[i] * psi(u, self.p)
    }

    /// One implicit trapezoid step from node `i` to `i + 1`.
    fn step(&self, i: usize, u0: f64, g0: f64) -> (f64, f64) {
        let h = self.t[i + 1] - self.t[i];
        let f0 = self.f(i, g0);
        let g_src0 = self.g(i, u0);
        let j = i + 1;
        let flux_at = |u: f64| g0 + 0.5 * h * (g_src0 + self.g(j, u));
        if self.w[i] == 0.0 && self.w[j] == 0.0 {
            return (u0 + 0.5 * h * (f0 + self.f(j, g0)), g0);
        }
        let map = |u: f64| u0 + 0.5 * h * (f0 + self.f(j, flux_at(u)));
        let mut u = u0 + h * f0;
        for _ in 0..200 {
            let next = map(u);
            if !next.is_finite() {
                break;
            }
            if (next - u).abs() <= 1e-15 * (1.0 + next.abs()) {
                return (next, flux_at(next));
            }
            u = next;
        }
        // Scalar fallback: bracket a root of H(u) = u - map(u) around the predictor.
        let hres = |u: f64| u - map(u);
        let c = u0 + h * f0;
        let mut width = 1e-8 * (1.0 + c.abs());
        let (mut lo, mut hi) = (c - width, c + width);
        for _ in 0..200 {
            if hres(lo) * hres(hi) <= 0.0 {
                break;
            }
            width *= 2.0;
            lo = c - width;
            hi = c + width;
        }
        let mut flo = hres(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = hres(mid);
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if (fm < 0.0) == (flo < 0.0) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        let u = 0.5 * (lo + hi);
        (u, flux_at(u))
    }

    /// March from node 0; values past a blow-up are filled with `±∞`.
    fn run(&self, u0: f64, g0: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.t.len();
        let mut u = Vec::with_capacity(n);
        let mut g = Vec::with_capacity(n);
        u.push(u0);
        g.push(g0);
        for i in 0..n - 1 {
            let (ui, gi) = (u[i], g[i]);
            if !ui.is_finite() || ui.abs() > BLOWUP {
                let s = if ui.is_nan() { f64::NAN } else { ui.signum() * f64::INFINITY };
                u.push(s);
                g.push(s);
                continue;
            }
            let (un, gn) = self.step(i, ui, gi);
            u.push(un);
            g.push(gn);
        }
        (u, g)
    }

    fn end_value(&self, u0: f64, g0: f64) -> f64 {
        let (u, _) = self.run(u0, g0);
        u[u.len() - 1]
    }

    fn solution(&self, u0: f64, g0: f64) -> RadialSolution {
        let (values, flux) = self.run(u0, g0);
        RadialSolution {
            p: self.p,
            dim: self.dim,
            grid: self.r.clone(),
            values,
            flux,
            source_weight: self.w.clone(),
        }
    }
}

fn log_grid(a: f64, b: f64, cells: usize) -> Vec<f64> {
    let (ta, tb) = (a.ln(), b.ln());
    (0..=cells)
        .map(|i| {
            if i == cells {
                tb
            } else {
                ta + (tb - ta) * i as f64 / cells as f64
            }
        })
        .collect()
}

/// Flux guess from the potential-free problem.
fn zero_potential_guess(p: f64, dim: usize, t: &[f64], du: f64) -> f64 {
    let a = (p - dim as f64) / (p - 1.0);
    let mut s = 0.0;
    for w in t.windows(2) {
        s += 0.5 * (w[1] - w[0]) * ((a * w[0]).exp() + (a * w[1]).exp());
    }
    psi(du / s, p)
}

/// Bisection on the inner flux for `u(R) = target`.
fn shoot(m: &Marcher, u0: f64, target: f64, guess: f64, spec: &SolverSpec) -> Result<f64> {
    let scale = u0.abs().max(target.abs()).max(1e-300);
    let tol = spec.bc_tol * scale;
    let res = |g: f64| m.end_value(u0, g) - target;
    let r0 = res(guess);
    if r0 == 0.0 {
        return Ok(guess);
    }
    let mut width = if guess == 0.0 { 1e-6 * scale.max(1e-12) } else { 1e-3 * guess.abs() };
    let (mut lo, mut hi);
    let mut found = None;
    for _ in 0..400 {
        lo = guess - width;
        hi = guess + width;
        let (rl, rh) = (res(lo), res(hi));
        if rl.is_nan() || rh.is_nan() {
            break;
        }
        if (rl <= 0.0 && rh >= 0.0) || (rl >= 0.0 && rh <= 0.0) {
            found = Some((lo, hi, rl));
            break;
        }
        width *= 2.0;
        if !width.is_finite() {
            break;
        }
    }
    let (mut lo, mut hi, mut rl) = found.ok_or_else(|| {
        Error::NoSolution(format!(
            "could not bracket the inner flux (u(ρ) = {u0}, u(R) = {target})"
        ))
    })?;
    let mut best = (f64::INFINITY, guess);
    for _ in 0..spec.max_bisections {
        let mid = 0.5 * (lo + hi);
        let rm = res(mid);
        if rm.abs() < best.0 {
            best = (rm.abs(), mid);
        }
        if rm.abs() <= tol || mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        if (rm < 0.0) == (rl < 0.0) {
            lo = mid;
            rl = rm;
        } else {
            hi = mid;
        }
    }
    if best.0 > 1e-10 * scale {
        return Err(Error::NoSolution(format!(
            "shooting residual {:.3e} above tolerance",
            best.0
        )));
    }
    Ok(best.1)
}

/// Solves the Dirichlet problem by shooting on the inner flux.
///
/// If no bracket is found for the full potential, the potential is switched
/// on gradually (`s V`, `s = 1/8, 2/8, …, 1`), each stage starting from the
/// previous flux.
pub fn solve_radial_dirichlet(problem: &RadialProblem, spec: &SolverSpec) -> Result<RadialSolution> {
    problem.validate()?;
    if spec.cells < 2 {
        return Err(invalid("at least two cells are needed"));
    }
    let t = log_grid(problem.inner, problem.outer, spec.cells);
    let v = |r: f64| problem.potential.at_radius(r);
    let (p, dim) = (problem.p, problem.dim);
    let guess = zero_potential_guess(p, dim, &t, problem.bc_outer - problem.bc_inner);
    let full = Marcher::new(p, dim, &t, &v, 1.0)?;
    match shoot(&full, problem.bc_inner, problem.bc_outer, guess, spec) {
        Ok(g0) => Ok(full.solution(problem.bc_inner, g0)),
        Err(Error::NoSolution(_)) if !problem.potential.is_zero() => {
            let mut g0 = guess;
            for k in 1..=8 {
                let m = Marcher::new(p, dim, &t, &v, k as f64 / 8.0)?;
                g0 = shoot(&m, problem.bc_inner, problem.bc_outer, g0, spec)?;
            }
            Ok(full.solution(problem.bc_inner, g0))
        }
        Err(e) => Err(e),
    }
}

/// Initial value problem from `u = c r^γ` at `r_start` to `r_end` (either side).
pub fn shoot_from_asymptotics(p: f64, dim: usize, potential: &Potential, gamma: f64, c: f64, r_start: f64, r_end: f64, cells: usize) -> Result<RadialSolution> {
    if !(r_start > 0.0 && r_end > 0.0 && r_start != r_end) {
        return Err(invalid("need distinct positive start and end radii"));
    }
    let u0 = c * r_start.powf(gamma);
    let du = c * gamma * r_start.powf(gamma - 1.0);
    let g0 = r_start.powi(dim as i32 - 1) * psi(du, p);
    let t = log_grid(r_start, r_end, cells);
    let v = |r: f64| potential.at_radius(r);
    let m = Marcher::new(p, dim, &t, &v, 1.0)?;
    let mut sol = m.solution(u0, g0);
    if r_end < r_start {
        sol.grid.reverse();
        sol.values.reverse();
        sol.flux.reverse();
        sol.source_weight.reverse();
    }
    if sol.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("initial value problem blew up".into()));
    }
    Ok(sol)
}

/// A positive function of `r` sampled by the diagnostics.
pub trait RadialFunction {
    fn eval_at(&self, r: f64) -> f64;
}

impl RadialFunction for RadialSolution {
    fn eval_at(&self, r: f64) -> f64 {
        self.eval(r)
    }
}

impl<F: Fn(f64) -> f64> RadialFunction for F {
    fn eval_at(&self, r: f64) -> f64 {
        self(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    Finite,
    Infinite,
    Zero,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedLimit {
    pub kind: LimitKind,
    /// Last rung value for finite limits.
    pub value: Option<f64>,
    /// Log-log slope over the fitted rungs.
    pub slope: f64,
    /// Largest relative deviation from the last rung over the fitted rungs.
    pub cauchy_spread: f64,
}

/// Tolerances for limit fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    /// Number of trailing rungs used.
    pub last: usize,
    /// `|slope|` above this marks a power-law limit `0` or `∞`.
    pub slope_tol: f64,
    /// Relative Cauchy tolerance for a finite limit.
    pub cauchy_tol: f64,
    /// Relative tolerance for `m = M` in the regularity verdict.
    pub rtol: f64,
}

impl Default for FitSpec {
    fn default() -> Self {
        Self {
            last: 4,
            slope_tol: 0.05,
            cauchy_tol: 1e-3,
            rtol: 1e-3,
        }
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Fits the limit of a positive sequence sampled on `radii` toward `zeta`.
pub fn fit_limit(radii: &[f64], seq: &[f64], zeta: SingularPoint, spec: &FitSpec) -> FittedLimit {
    let k = spec.last.clamp(2, seq.len());
    let xs = &radii[radii.len() - k..];
    let ys = &seq[seq.len() - k..];
    let slope = log_log_slope(xs, ys);
    let last = ys[k - 1];
    let cauchy_spread = ys
        .iter()
        .map(|y| (y - last).abs() / last.abs().max(1e-300))
        .fold(0.0, f64::max);
    let toward_zero = matches!(zeta, SingularPoint::Origin);
    let (kind, value) = if slope.abs() > spec.slope_tol {
        let grows = (slope < 0.0) == toward_zero;
        (if grows { LimitKind::Infinite } else { LimitKind::Zero }, None)
    } else if cauchy_spread <= spec.cauchy_tol {
        (LimitKind::Finite, Some(last))
    } else {
        (LimitKind::Undetermined, None)
    };
    FittedLimit {
        kind,
        value,
        slope,
        cauchy_spread,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioDiagnostics {
    pub zeta: SingularPoint,
    pub radii: Vec<f64>,
    pub m_seq: Vec<f64>,
    pub big_m_seq: Vec<f64>,
    pub limit_m: FittedLimit,
    pub limit_big_m: FittedLimit,
    pub regular: bool,
}

/// Builds ratio diagnostics from precomputed `m_r ≤ M_r` sequences.
pub fn ratio_diagnostics(radii: Vec<f64>, m_seq: Vec<f64>, big_m_seq: Vec<f64>, zeta: SingularPoint, spec: &FitSpec) -> Result<RatioDiagnostics> {
    if radii.len() < 2 || radii.len() != m_seq.len() || radii.len() != big_m_seq.len() {
        return Err(invalid("ratio diagnostics need matching sequences of length ≥ 2"));
    }
    if m_seq.iter().chain(&big_m_seq).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(invalid("ratios must be positive and finite on the ladder"));
    }
    let limit_m = fit_limit(&radii, &m_seq, zeta, spec);
    let limit_big_m = fit_limit(&radii, &big_m_seq, zeta, spec);
    let regular = match (limit_m.kind, limit_big_m.kind) {
        (LimitKind::Infinite, LimitKind::Infinite) | (LimitKind::Zero, LimitKind::Zero) => true,
        (LimitKind::Finite, LimitKind::Finite) => {
            let (m, bm) = (limit_m.value.unwrap_or(0.0), limit_big_m.value.unwrap_or(0.0));
            (bm - m) / m.max(1e-300) <= spec.rtol
        }
        _ => false,
    };
    Ok(RatioDiagnostics {
        zeta,
        radii,
        m_seq,
        big_m_seq,
        limit_m,
        limit_big_m,
        regular,
    })
}

/// `u/v` along a ladder toward `ζ`. For radial inputs `m_r = M_r`.
pub fn ratio_limit(u: &dyn RadialFunction, v: &dyn RadialFunction, ladder: &[f64], zeta: SingularPoint, spec: &FitSpec) -> Result<RatioDiagnostics> {
    let mut ratios = Vec::with_capacity(ladder.len());
    for &r in ladder {
        let (a, b) = (u.eval_at(r), v.eval_at(r));
        if !(a > 0.0 && b > 0.0) {
            return Err(invalid(format!(
                "nonpositive or undefined sample at r = {r:e}: u = {a}, v = {b}"
            )));
        }
        ratios.push(a / b);
    }
    ratio_diagnostics(ladder.to_vec(), ratios.clone(), ratios, zeta, spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Nonincreasing,
    Nondecreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Monotonicity {
    pub monotone: bool,
    pub first_violation: Option<usize>,
}

/// Whether `seq` (ordered toward `ζ`) is monotone after a burn-in prefix of
/// `burn_in` (fraction of the length, default 0.25).
pub fn monotonicity_check(seq: &[f64], trend: Trend, burn_in: f64) -> Result<Monotonicity> {
    if seq.len() < 4 {
        return Err(invalid("monotonicity check needs at least 4 entries"));
    }
    let start = ((burn_in.clamp(0.0, 1.0)) * seq.len() as f64).floor() as usize;
    for i in start.max(1)..seq.len() {
        let (a, b) = (seq[i - 1], seq[i]);
        let slack = 1e-12 * a.abs().max(b.abs());
        let bad = match trend {
            Trend::Nonincreasing => b > a + slack,
            Trend::Nondecreasing => b < a - slack,
        };
        if bad {
            return Ok(Monotonicity {
                monotone: false,
                first_violation: Some(i),
            });
        }
    }
    Ok(Monotonicity {
        monotone: true,
        first_violation: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityRung {
    pub k: f64,
    pub values: Vec<f64>,
    pub closed_form: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub p: f64,
    pub dim: usize,
    pub probe_radii: Vec<f64>,
    pub rungs: Vec<CriticalityRung>,
    /// `1` for `p ≥ d`, `μ(r*)/μ(1)` otherwise.
    pub limits: Vec<f64>,
    pub critical: bool,
    /// Values approach the limit monotonically in `k`.
    pub monotone: bool,
    /// Largest gap between the solver and the closed form.
    pub closed_form_error: f64,
}

/// `w_k` on `[1, k]` with `w(1) = 1`, `w(k) = 0`, in closed form.
pub fn criticality_closed_form(p: f64, d: usize, k: f64, r: f64) -> f64 {
    if p == d as f64 {
        1.0 - r.ln() / k.ln()
    } else {
        let a = (p - d as f64) / (p - 1.0);
        (r.powf(a) - k.powf(a)) / (1.0 - k.powf(a))
    }
}

/// Solves `w_k` for each `k` and reports `w_k(r*)` against the limit.
pub fn criticality_probe(p: f64, matrix: &AnisotropyMatrix, k_ladder: &[f64], probe_radii: &[f64], spec: &SolverSpec) -> Result<CriticalityReport> {
    if k_ladder.len() < 4 || k_ladder.windows(2).any(|w| w[1] <= w[0]) || k_ladder[0] <= 1.0 {
        return Err(invalid("k ladder must be increasing, > 1, with at least 4 values"));
    }
    let d = matrix.dim();
    let fs = FundamentalSolution::new(p, matrix.clone())?;
    let critical = p >= d as f64;
    let limits: Vec<f64> = probe_radii
        .iter()
        .map(|&r| if critical { 1.0 } else { fs.radial(r) / fs.radial(1.0) })
        .collect();
    let mut rungs = Vec::new();
    let mut err: f64 = 0.0;
    for &k in k_ladder {
        let prob = RadialProblem::new(p, matrix.clone(), Potential::zero(d), 1.0, k, 1.0, 0.0)?;
        let sol = solve_radial_dirichlet(&prob, spec)?;
        let values: Vec<f64> = probe_radii.iter().map(|&r| sol.eval(r)).collect();
        let closed: Vec<f64> = probe_radii
            .iter()
            .map(|&r| criticality_closed_form(p, d, k, r))
            .collect();
        for (v, c) in values.iter().zip(&closed) {
            if v.is_finite() {
                err = err.max((v - c).abs());
            }
        }
        rungs.push(CriticalityRung {
            k,
            values,
            closed_form: closed,
        });
    }
    let monotone = (0..probe_radii.len()).all(|j| {
        let gaps: Vec<f64> = rungs
            .iter()
            .filter(|r| r.values[j].is_finite())
            .map(|r| (limits[j] - r.values[j]).abs())
            .collect();
        gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12)
    });
    Ok(CriticalityReport {
        p,
        dim: d,
        probe_radii: probe_radii.to_vec(),
        rungs,
        limits,
        critical,
        monotone,
        closed_form_error: err,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularityClass {
    /// `u/μ` tends to a positive constant.
    Fundamental,
    /// `u/μ → 0`: removable, or a bounded limit.
    Removable,
    /// `u/μ → ∞`.
    Stronger,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    pub zeta: SingularPoint,
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    pub limit: FittedLimit,
    pub constant: Option<f64>,
    pub class: SingularityClass,
}

/// Fits `M = lim u/μ` at `0` (for `p ≤ d`) or `lim u/(-μ)` at `∞` (for `p ≥ d`).
pub fn asymptotics_probe(u: &dyn RadialFunction, fs: &FundamentalSolution, ladder: &[f64], zeta: SingularPoint, spec: &FitSpec) -> Result<AsymptoticsReport> {
    if ladder.len() < 3 {
        return Err(invalid("ladder too short for a fit"));
    }
    let sign = match zeta {
        SingularPoint::Origin => 1.0,
        SingularPoint::Infinity => -1.0,
    };
    let mut ratios = Vec::with_capacity(ladder.len());
    for &r in ladder {
        let m = sign * fs.radial(r);
        if !(m > 0.0) {
            return Err(invalid(format!(
                "the comparison kernel is not positive at r = {r:e}; check p against d and ζ"
            )));
        }
        let value = u.eval_at(r);
        if !(value > 0.0) {
            return Err(invalid(format!("u is not positive at r = {r:e}")));
        }
        ratios.push(value / m);
    }
    let limit = fit_limit(ladder, &ratios, zeta, spec);
    let class = match limit.kind {
        LimitKind::Finite => SingularityClass::Fundamental,
        LimitKind::Zero => SingularityClass::Removable,
        LimitKind::Infinite => SingularityClass::Stronger,
        LimitKind::Undetermined => SingularityClass::Undetermined,
    };
    Ok(AsymptoticsReport {
        zeta,
        radii: ladder.to_vec(),
        ratios,
        constant: limit.value,
        limit,
        class,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonOutcome {
    pub ordered: bool,
    /// `max(u₁ - u₂)` over the grid.
    pub max_violation: f64,
}

/// Solves both problems and checks `u₁ ≤ u₂ + 1e-9` on the common grid.
pub fn weak_comparison_probe(first: &RadialProblem, second: &RadialProblem, spec: &SolverSpec) -> Result<ComparisonOutcome> {
    if first.inner != second.inner || first.outer != second.outer || first.p != second.p || first.dim != second.dim {
        return Err(invalid("comparison problems must share p, d and the annulus"));
    }
    let a = solve_radial_dirichlet(first, spec)?;
    let b = solve_radial_dirichlet(second, spec)?;
    let max_violation = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| x - y)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ComparisonOutcome {
        ordered: max_violation <= 1e-9,
        max_violation,
    })
}
