//! Local Morrey norms on centered balls and annuli, the special spaces
//! `M^q(p; ω)`, Fuchsian classification on dyadic annuli, and the
//! Morrey–Adams diagnostic.
//!
//! The supremum over balls `B_r(y)` is estimated on a nested lattice: center
//! radii `t_i` on a uniform grid over `[0, outer]` times a direction set, and
//! radii `r_j = diam · 2^{-j/2^m}`. Each refinement level refines all three
//! factors, so the sampled family only grows and the estimate is a
//! nondecreasing lower bound. The lattice scales with the window, which makes
//! the estimate exactly covariant under dilation of window and integrand.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::anisotropy::{norm, unit_sphere_area};
use crate::error::{invalid, Error, Result};
use crate::potential::Potential;
use crate::profile::RadialTestFunction;
use crate::quad::{integrate_graded, integrate_pieces_cosine, AdaptiveOptions, GaussLegendre};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `p < d`
    Subdim,
    /// `p = d`
    Critical,
    /// `p > d`
    Superdim,
}

/// Exponents `(p, q, d)` and the derived `q′`, `d′`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorreyContext {
    pub p: f64,
    pub q: f64,
    pub dim: usize,
    pub regime: Regime,
}

impl MorreyContext {
    /// Validates the exponent ranges; in the superdimensional regime `q` is
    /// replaced by 1 (the space is `L¹`).
    pub fn new(p: f64, q: f64, dim: usize) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(invalid(format!("p must lie in (1, ∞), got {p}")));
        }
        if dim < 2 {
            return Err(invalid(format!("dimension must be at least 2, got {dim}")));
        }
        if !(q >= 1.0) {
            return Err(invalid(format!("q must lie in [1, ∞], got {q}")));
        }
        let d = dim as f64;
        let regime = if p < d {
            Regime::Subdim
        } else if p == d {
            Regime::Critical
        } else {
            Regime::Superdim
        };
        let q = match regime {
            Regime::Subdim if q <= d / p => {
                return Err(invalid(format!("p < d requires q > d/p = {}, got {q}", d / p)))
            }
            Regime::Critical if q <= d => {
                return Err(invalid(format!("p = d requires q > d = {d}, got {q}")))
            }
            Regime::Superdim => 1.0,
            _ => q,
        };
        Ok(Self { p, q, dim, regime })
    }

    /// `q′ = q/(q-1)`, infinite for `q = 1`.
    pub fn q_conj(&self) -> f64 {
        if self.q == 1.0 {
            f64::INFINITY
        } else if self.q.is_infinite() {
            1.0
        } else {
            self.q / (self.q - 1.0)
        }
    }

    /// `d′ = d/(d-1)`.
    pub fn d_conj(&self) -> f64 {
        let d = self.dim as f64;
        d / (d - 1.0)
    }

    /// Exponent `d/q′` of the radius weight `r^{-d/q′}`.
    pub fn radius_exponent(&self) -> f64 {
        let qc = self.q_conj();
        if qc.is_infinite() {
            0.0
        } else {
            self.dim as f64 / qc
        }
    }

    /// Log weight `φ_q(r) = log^{q/d′}(diam/r)` of the critical space; `None`
    /// for `r ≥ diam`.
    pub fn critical_weight(&self, r: f64, diam: f64) -> Option<f64> {
        if r >= diam {
            None
        } else {
            Some((diam / r).ln().powf(self.q / self.d_conj()))
        }
    }

    /// Exponent of the radial weight in the Fuchsian norm, `p - d/q`.
    pub fn fuchsian_weight(&self) -> f64 {
        self.p - self.dim as f64 / self.q
    }
}

/// A bounded window centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Window {
    Ball { radius: f64 },
    Annulus { inner: f64, outer: f64 },
}

impl Window {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Window::Ball { radius } => radius > 0.0 && radius.is_finite(),
            Window::Annulus { inner, outer } => {
                inner >= 0.0 && outer > inner && outer.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("window {self:?} is empty or unbounded")))
        }
    }

    pub fn radii(&self) -> (f64, f64) {
        match *self {
            Window::Ball { radius } => (0.0, radius),
            Window::Annulus { inner, outer } => (inner, outer),
        }
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radii().1
    }

    pub fn volume(&self, dim: usize) -> f64 {
        let (a, b) = self.radii();
        let d = dim as i32;
        unit_sphere_area(dim) / dim as f64 * (b.powi(d) - a.powi(d))
    }

    pub fn contains_origin(&self) -> bool {
        self.radii().0 == 0.0
    }
}

/// Euclidean annulus `{inner·R ≤ |x| < outer·R}`; defaults give `𝒜_R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub radius: f64,
    pub inner_factor: f64,
    pub outer_factor: f64,
}

impl Annulus {
    pub fn new(radius: f64) -> Self {
        Self {
            radius,
            inner_factor: 0.5,
            outer_factor: 1.5,
        }
    }

    pub fn with_factors(radius: f64, inner_factor: f64, outer_factor: f64) -> Result<Self> {
        if !(0.0 < inner_factor && inner_factor < 1.0 && outer_factor > 1.0 && radius > 0.0) {
            return Err(invalid(
                "annulus needs R > 0 and inner_factor < 1 < outer_factor",
            ));
        }
        Ok(Self {
            radius,
            inner_factor,
            outer_factor,
        })
    }

    pub fn window(&self) -> Window {
        Window::Annulus {
            inner: self.inner_factor * self.radius,
            outer: self.outer_factor * self.radius,
        }
    }
}

/// Lattice of centers and radii at the coarsest level, plus refinement control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Number of center radii on `[0, outer]` at level 0.
    pub centers: usize,
    /// Number of directions at level 0 (ignored for radial integrands).
    pub directions: usize,
    /// Radii per octave at level 0 is `2^octave_steps`.
    pub octave_steps: u32,
    /// Number of octaves below the diameter.
    pub octaves: u32,
    /// Maximum number of refinements after level 0.
    pub max_refinements: u32,
    /// Stop once two successive levels agree to this relative tolerance.
    pub agreement: f64,
    /// Relative tolerance of each ball integral.
    pub rtol: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            centers: 9,
            directions: 8,
            octave_steps: 1,
            octaves: 10,
            max_refinements: 3,
            agreement: 0.01,
            rtol: 1e-7,
        }
    }
}

impl GridSpec {
    fn level(&self, k: u32) -> Level {
        Level {
            centers: (self.centers.max(2) - 1) * (1 << k) + 1,
            directions: self.directions.max(1) << k,
            sub: self.octave_steps + k,
            octaves: self.octaves,
        }
    }
}

struct Level {
    centers: usize,
    directions: usize,
    sub: u32,
    octaves: u32,
}

/// Result of a Morrey-norm estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorreyEstimate {
    pub value: f64,
    /// Center and radius attaining the sampled supremum.
    pub center: Vec<f64>,
    pub radius: f64,
    /// Estimates at each refinement level.
    pub levels: Vec<f64>,
    /// Whether the last two levels agreed to the requested tolerance.
    pub converged: bool,
}

/// Integrand `x ↦ |x|^w |V(x)|`.
struct Density<'a> {
    v: &'a Potential,
    w: f64,
}

impl Density<'_> {
    fn radial(&self, rho: f64) -> f64 {
        let v = self.v.at_radius(rho).abs();
        if self.w == 0.0 || v == 0.0 {
            v
        } else {
            rho.powf(self.w) * v
        }
    }

    fn at(&self, x: &[f64]) -> f64 {
        let v = self.v.eval(x).abs();
        if self.w == 0.0 || v == 0.0 {
            v
        } else {
            norm(x).powf(self.w) * v
        }
    }

    fn singularity(&self) -> f64 {
        if self.v.is_zero() {
            0.0
        } else {
            (self.v.origin_singularity() - self.w).max(0.0)
        }
    }
}

/// Direction set for non-radial integrands: equally spaced angles for
/// `d = 2`, a nested polar × azimuth grid for `d = 3`.
fn directions(dim: usize, n: usize) -> Vec<Vec<f64>> {
    match dim {
        2 => (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let n_polar = n.max(2);
            let mut out = vec![vec![0.0, 0.0, 1.0]];
            for j in 1..n_polar {
                let th = PI * j as f64 / n_polar as f64;
                for k in 0..2 * n_polar {
                    let ph = PI * k as f64 / n_polar as f64;
                    out.push(vec![th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]);
                }
            }
            out.push(vec![0.0, 0.0, -1.0]);
            out
        }
    }
}

/// Measure of `S_ρ ∩ B_r(y)` as a function of `ρ` with `t = |y|`.
fn sphere_cap_measure(dim: usize, rho: f64, t: f64, r: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let full = unit_sphere_area(dim) * rho.powi(dim as i32 - 1);
    if t == 0.0 {
        return if rho < r { full } else { 0.0 };
    }
    if rho + t <= r {
        return full;
    }
    if (rho - t).abs() >= r {
        return 0.0;
    }
    let c = ((rho * rho + t * t - r * r) / (2.0 * rho * t)).clamp(-1.0, 1.0);
    match dim {
        2 => 2.0 * c.acos() * rho,
        _ => 2.0 * PI * rho * rho * (1.0 - c),
    }
}

/// Cap half-angle of `S_ρ ∩ B_r(y)` around the direction of `y`.
fn cap_angle(rho: f64, t: f64, r: f64) -> f64 {
    if t == 0.0 || rho + t <= r {
        return PI;
    }
    let c = ((rho * rho + t * t - r * r) / (2.0 * rho * t)).clamp(-1.0, 1.0);
    c.acos()
}

/// Orthonormal frame whose last vector is `e`.
fn frame(e: &[f64]) -> [[f64; 3]; 3] {
    let e3 = [e[0], e[1], e[2]];
    let helper = if e3[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let dot = helper[0] * e3[0] + helper[1] * e3[1] + helper[2] * e3[2];
    let mut e1 = [
        helper[0] - dot * e3[0],
        helper[1] - dot * e3[1],
        helper[2] - dot * e3[2],
    ];
    let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1.iter_mut().for_each(|v| *v /= n1);
    let e2 = [
        e3[1] * e1[2] - e3[2] * e1[1],
        e3[2] * e1[0] - e3[0] * e1[2],
        e3[0] * e1[1] - e3[1] * e1[0],
    ];
    [e1, e2, e3]
}

/// `∫_{S_ρ ∩ B_r(y)} g dS` for a non-radial `g`, by a fixed product rule on the cap.
fn cap_integral(density: &Density, dim: usize, rho: f64, dir: &[f64], t: f64, r: f64, gl: &GaussLegendre) -> f64 {
    let theta = cap_angle(rho, t, r);
    if theta <= 0.0 {
        return 0.0;
    }
    match dim {
        2 => {
            let phi0 = dir[1].atan2(dir[0]);
            let mut acc = 0.0;
            for (s, w) in gl.mapped(-theta, theta) {
                let a = phi0 + s;
                acc += w * density.at(&[rho * a.cos(), rho * a.sin()]);
            }
            acc * rho
        }
        _ => {
            let [e1, e2, e3] = frame(dir);
            let n_az = 2 * gl.len();
            let h = 2.0 * PI / n_az as f64;
            let mut acc = 0.0;
            for (psi, w) in gl.mapped(0.0, theta) {
                let (sp, cp) = psi.sin_cos();
                let mut ring = 0.0;
                for k in 0..n_az {
                    let (sc, cc) = (k as f64 * h).sin_cos();
                    let x: Vec<f64> = (0..3)
                        .map(|i| rho * (sp * cc * e1[i] + sp * sc * e2[i] + cp * e3[i]))
                        .collect();
                    ring += density.at(&x);
                }
                acc += w * sp * ring * h;
            }
            acc * rho * rho
        }
    }
}

/// `∫_{ω ∩ B_r(y)} g dx` with `y = t·dir`.
fn ball_integral(density: &Density, dim: usize, window: &Window, dir: Option<&[f64]>, t: f64, r: f64, rtol: f64) -> Result<f64> {
    let (a, b) = window.radii();
    let lo = a.max(t - r).max(0.0);
    let hi = b.min(t + r);
    if hi <= lo {
        return Ok(0.0);
    }
    let mut breaks = vec![lo, hi];
    for c in [(t - r).abs(), t + r] {
        if c > lo && c < hi {
            breaks.push(c);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let opts = AdaptiveOptions {
        rtol,
        atol: 0.0,
        max_intervals: 4000,
        order: 10,
    };
    let gl = GaussLegendre::new(16);
    let mut f = |rho: f64| -> f64 {
        match dir {
            None => density.radial(rho) * sphere_cap_measure(dim, rho, t, r),
            Some(e) => cap_integral(density, dim, rho, e, t, r, &gl),
        }
    };
    let s = density.singularity();
    if lo == 0.0 && s > 0.0 {
        if s >= dim as f64 {
            return Err(Error::Diverged(format!(
                "integrand ~ |x|^-{s} is not integrable at the origin in dimension {dim}"
            )));
        }
        // Graded piece at the origin, cosine pieces elsewhere.
        let first = 0.5 * breaks[1];
        let exponent = dim as f64 - 1.0 - s;
        let grading = 3.0 / (exponent + 1.0);
        let head = integrate_graded(&mut f, 0.0, first, grading, opts)?;
        breaks[0] = first;
        let tail = integrate_pieces_cosine(&mut f, &breaks, opts)?;
        return Ok(head + tail);
    }
    integrate_pieces_cosine(&mut f, &breaks, opts)
}

#[derive(Clone, Copy)]
enum Weighting {
    Power(f64),
    Log { ctx: MorreyContext, diam: f64 },
}

fn sup_over_level(density: &Density, dim: usize, window: &Window, weighting: Weighting, level: &Level, rtol: f64) -> Result<(f64, Vec<f64>, f64)> {
    let (_, outer) = window.radii();
    let diam = window.diameter();
    let radial = density.v.is_radial();
    let dirs = if radial {
        let mut e = vec![0.0; dim];
        e[0] = 1.0;
        vec![e]
    } else {
        directions(dim, level.directions)
    };
    let n_r = (level.octaves as usize) << level.sub;
    let per_octave = (1u64 << level.sub) as f64;
    let mut best = (0.0, vec![0.0; dim], diam);
    for i in 0..level.centers {
        let t = outer * i as f64 / (level.centers - 1) as f64;
        for dir in &dirs {
            // Only one direction is needed for the center at the origin.
            if t == 0.0 && !std::ptr::eq(dir, &dirs[0]) {
                continue;
            }
            for j in 0..=n_r {
                let r = diam * 2f64.powf(-(j as f64) / per_octave);
                let weight = match weighting {
                    Weighting::Power(e) => r.powf(-e),
                    Weighting::Log { ctx, diam } => match ctx.critical_weight(r, diam) {
                        Some(w) => w,
                        None => continue,
                    },
                };
                let integral = ball_integral(
                    density,
                    dim,
                    window,
                    if radial { None } else { Some(dir) },
                    t,
                    r,
                    rtol,
                )?;
                let v = weight * integral;
                if v > best.0 {
                    best = (v, dir.iter().map(|e| e * t).collect(), r);
                }
            }
        }
    }
    Ok(best)
}

fn refine(density: &Density, dim: usize, window: &Window, weighting: Weighting, grid: &GridSpec) -> Result<MorreyEstimate> {
    window.validate()?;
    if dim > 3 {
        return Err(Error::UnsupportedDimension(dim));
    }
    let mut levels = Vec::new();
    let mut best = (0.0, vec![0.0; dim], window.diameter());
    let mut converged = false;
    for k in 0..=grid.max_refinements {
        let level = grid.level(k);
        let cur = sup_over_level(density, dim, window, weighting, &level, grid.rtol)?;
        if cur.0 >= best.0 {
            best = cur;
        }
        if let Some(&prev) = levels.last() {
            if best.0 - prev <= grid.agreement * best.0 {
                levels.push(best.0);
                converged = true;
                break;
            }
        }
        levels.push(best.0);
    }
    Ok(MorreyEstimate {
        value: best.0,
        center: best.1,
        radius: best.2,
        levels,
        converged,
    })
}

fn sampled_sup(density: &Density, dim: usize, window: &Window, grid: &GridSpec) -> Result<MorreyEstimate> {
    window.validate()?;
    let (a, b) = window.radii();
    if a == 0.0 && density.singularity() > 0.0 {
        return Err(Error::Diverged("essential supremum is infinite at the origin".into()));
    }
    let level = grid.level(grid.max_refinements);
    let n = 8 * level.centers;
    let dirs = if density.v.is_radial() {
        let mut e = vec![0.0; dim];
        e[0] = 1.0;
        vec![e]
    } else {
        directions(dim, level.directions)
    };
    let mut best = (0.0, vec![0.0; dim]);
    for i in 0..=n {
        let rho = a + (b - a) * i as f64 / n as f64;
        let rho = if rho == 0.0 { 1e-300 } else { rho };
        for dir in &dirs {
            let x: Vec<f64> = dir.iter().map(|e| e * rho).collect();
            let v = density.at(&x);
            if !v.is_finite() {
                return Err(Error::Numeric(format!("non-finite sample at {x:?}")));
            }
            if v > best.0 {
                best = (v, x);
            }
        }
    }
    Ok(MorreyEstimate {
        value: best.0,
        center: best.1,
        radius: 0.0,
        levels: vec![best.0],
        converged: true,
    })
}

/// `sup_{y,r} r^{-d/q′} ∫_{ω ∩ B_r(y)} |f| dx` over the sampled family.
pub fn morrey_norm(ctx: &MorreyContext, f: &Potential, window: &Window, grid: &GridSpec) -> Result<MorreyEstimate> {
    weighted_morrey_norm(ctx, f, 0.0, window, grid)
}

fn weighted_morrey_norm(ctx: &MorreyContext, f: &Potential, w: f64, window: &Window, grid: &GridSpec) -> Result<MorreyEstimate> {
    check_dims(ctx, f)?;
    let density = Density { v: f, w };
    if ctx.q.is_infinite() {
        return sampled_sup(&density, ctx.dim, window, grid);
    }
    refine(&density, ctx.dim, window, Weighting::Power(ctx.radius_exponent()), grid)
}

/// `sup_{y, r<diam} φ_q(r) ∫_{ω ∩ B_r(y)} |f| dx` for `p = d`.
pub fn morrey_norm_critical(ctx: &MorreyContext, f: &Potential, window: &Window, grid: &GridSpec) -> Result<MorreyEstimate> {
    if ctx.regime != Regime::Critical {
        return Err(invalid("the log-weighted norm requires p = d"));
    }
    check_dims(ctx, f)?;
    let density = Density { v: f, w: 0.0 };
    let weighting = Weighting::Log {
        ctx: *ctx,
        diam: window.diameter(),
    };
    refine(&density, ctx.dim, window, weighting, grid)
}

/// Norm of the special space `M^q(p; ω)`: Morrey for `p < d`, log-weighted
/// for `p = d`, `L¹` for `p > d`.
pub fn special_morrey_norm(ctx: &MorreyContext, f: &Potential, window: &Window, grid: &GridSpec) -> Result<MorreyEstimate> {
    match ctx.regime {
        Regime::Critical => morrey_norm_critical(ctx, f, window, grid),
        _ => morrey_norm(ctx, f, window, grid),
    }
}

/// `‖|x|^{p-d/q} V‖_{M^q(p; 𝒜_R)}` for `p ≠ d` and `‖V‖_{M^q(d; 𝒜_R)}` for `p = d`.
pub fn weighted_fuchsian_norm(ctx: &MorreyContext, v: &Potential, annulus: &Annulus, grid: &GridSpec) -> Result<MorreyEstimate> {
    let window = annulus.window();
    match ctx.regime {
        Regime::Critical => morrey_norm_critical(ctx, v, &window, grid),
        _ => weighted_morrey_norm(ctx, v, ctx.fuchsian_weight(), &window, grid),
    }
}

fn check_dims(ctx: &MorreyContext, f: &Potential) -> Result<()> {
    crate::error::check_dim(ctx.dim, f.dim)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularPoint {
    Origin,
    Infinity,
}

/// Geometric ladder `start · factor^k`, `k = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ladder {
    pub start: f64,
    pub factor: f64,
    pub count: usize,
}

impl Ladder {
    pub fn dyadic_toward(zeta: SingularPoint, count: usize) -> Self {
        Self {
            start: 1.0,
            factor: match zeta {
                SingularPoint::Origin => 0.5,
                SingularPoint::Infinity => 2.0,
            },
            count,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count)
            .map(|k| self.start * self.factor.powi(k as i32))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start > 0.0 && self.factor > 0.0 && self.factor != 1.0 && self.start.is_finite()) {
            return Err(invalid(format!("invalid ladder {self:?}")));
        }
        Ok(())
    }

    pub fn tends_to(&self) -> SingularPoint {
        if self.factor < 1.0 {
            SingularPoint::Origin
        } else {
            SingularPoint::Infinity
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuchsianReport {
    pub zeta: SingularPoint,
    pub radii: Vec<f64>,
    /// Weighted norms per annulus; non-finite where the norm diverged.
    pub norms: Vec<f64>,
    pub bound: f64,
    pub spread: f64,
    pub stability_factor: f64,
    pub is_fuchsian: bool,
    pub regime: Regime,
    pub divergent_radius: Option<f64>,
}

pub const DEFAULT_STABILITY_FACTOR: f64 = 10.0;

/// Evaluates [`weighted_fuchsian_norm`] on `𝒜_R` along a ladder toward `ζ`.
///
/// The potential is declared Fuchsian when every norm is finite and
/// `max/min ≤ stability_factor`; the paper's constant is only existential.
pub fn fuchsian_check(ctx: &MorreyContext, v: &Potential, zeta: SingularPoint, ladder: &Ladder, stability_factor: f64, grid: &GridSpec) -> Result<FuchsianReport> {
    ladder.validate()?;
    if ladder.count < 4 {
        return Err(invalid("a Fuchsian ladder needs at least 4 radii"));
    }
    if ladder.tends_to() != zeta {
        return Err(invalid(format!("ladder {ladder:?} does not tend to {zeta:?}")));
    }
    let radii = ladder.values();
    let mut norms = Vec::with_capacity(radii.len());
    let mut divergent_radius = None;
    for &r in &radii {
        match weighted_fuchsian_norm(ctx, v, &Annulus::new(r), grid) {
            Ok(e) => norms.push(e.value),
            Err(Error::Diverged(_)) | Err(Error::Numeric(_)) => {
                norms.push(f64::INFINITY);
                divergent_radius.get_or_insert(r);
            }
            Err(e) => return Err(e),
        }
    }
    let bound = norms.iter().copied().fold(0.0, f64::max);
    let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = if bound == 0.0 { 1.0 } else { bound / min };
    let is_fuchsian = divergent_radius.is_none() && bound.is_finite() && spread <= stability_factor;
    Ok(FuchsianReport {
        zeta,
        radii,
        norms,
        bound,
        spread,
        stability_factor,
        is_fuchsian,
        regime: ctx.regime,
        divergent_radius,
    })
}

/// `R^p V(R x)`.
pub fn dilate_potential(v: &Potential, r: f64, p: f64) -> Result<Potential> {
    v.dilate(r, p)
}

/// `‖V_{R_n}‖_{M^q(p; ω)}` on a fixed window for each `R_n`; diverged
/// entries are reported as `+∞`.
pub fn dilation_norm_sequence(ctx: &MorreyContext, v: &Potential, r_seq: &[f64], window: &Window, grid: &GridSpec) -> Result<Vec<f64>> {
    let increasing = r_seq.windows(2).all(|w| w[1] > w[0]);
    let decreasing = r_seq.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(invalid("dilation radii must be strictly monotone"));
    }
    r_seq
        .iter()
        .map(|&r| {
            let vr = v.dilate(r, ctx.p)?;
            match special_morrey_norm(ctx, &vr, window, grid) {
                Ok(e) => Ok(e.value),
                Err(Error::Diverged(_)) => Ok(f64::INFINITY),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Integrals entering the Morrey–Adams diagnostic for a radial test function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorreyAdamsSample {
    pub potential_term: f64,
    pub gradient_term: f64,
    pub mass_term: f64,
    pub delta: f64,
    /// `(∫|V||u|^p - δ‖∇u‖_p^p) / ‖u‖_p^p`.
    pub c_needed: f64,
}

/// Smallest constant `C` with `∫|V||u|^p ≤ δ‖∇u‖_p^p + C‖u‖_p^p` for this `u`.
pub fn morrey_adams_min_constant(ctx: &MorreyContext, v: &Potential, u: &RadialTestFunction, delta: f64) -> Result<MorreyAdamsSample> {
    if !(delta > 0.0) {
        return Err(invalid(format!("delta must be positive, got {delta}")));
    }
    check_dims(ctx, v)?;
    let p = ctx.p;
    let dim = ctx.dim;
    let w = unit_sphere_area(dim);
    let mean_v = spherical_abs_mean(v, dim);
    let (a, b) = u.support;
    let opts = AdaptiveOptions {
        rtol: 1e-10,
        atol: 0.0,
        max_intervals: 4000,
        order: 10,
    };
    let breaks = u.breakpoints();
    let jac = |r: f64| w * r.powi(dim as i32 - 1);
    let mass = integrate_pieces_cosine(|r| u.value(r).abs().powf(p) * jac(r), &breaks, opts)?;
    if mass == 0.0 {
        return Err(invalid("test function has zero L^p norm"));
    }
    let grad = integrate_pieces_cosine(|r| u.derivative(r).abs().powf(p) * jac(r), &breaks, opts)?;
    let s = if v.is_zero() { 0.0 } else { v.origin_singularity() };
    let pot_integrand = |r: f64| {
        let uv = u.value(r).abs().powf(p);
        if uv == 0.0 {
            0.0
        } else {
            mean_v(r) * uv * jac(r)
        }
    };
    let pot = if a == 0.0 && s > 0.0 {
        if s >= dim as f64 {
            return Err(Error::Diverged("potential is not locally integrable at 0".into()));
        }
        let mid = 0.5 * b;
        integrate_graded(pot_integrand, 0.0, mid, 3.0 / (dim as f64 - s), opts)?
            + integrate_pieces_cosine(pot_integrand, &[mid, b], opts)?
    } else {
        integrate_pieces_cosine(pot_integrand, &breaks, opts)?
    };
    Ok(MorreyAdamsSample {
        potential_term: pot,
        gradient_term: grad,
        mass_term: mass,
        delta,
        c_needed: (pot - delta * grad) / mass,
    })
}

/// `ρ ↦` mean of `|V|` over `S_ρ`.
fn spherical_abs_mean(v: &Potential, dim: usize) -> impl Fn(f64) -> f64 + '_ {
    let gl = GaussLegendre::new(24);
    move |rho: f64| {
        if v.is_radial() {
            return v.at_radius(rho).abs();
        }
        let density = Density { v, w: 0.0 };
        let mut e = vec![0.0; dim];
        e[0] = 1.0;
        let total = cap_integral(&density, dim, rho, &e, 0.0, f64::INFINITY, &gl);
        total / (unit_sphere_area(dim) * rho.powi(dim as i32 - 1))
    }
}
