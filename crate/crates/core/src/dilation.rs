//! Limiting dilations of operator data `(A_R, V_R) = (A(R·), R^p V(R·))`,
//! weak-Fuchsian detection by norm traces, and scaling checks for the radial
//! solver.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::anisotropy::AnisotropyMatrix;
use crate::error::{invalid, Result};
use crate::morrey::{dilation_norm_sequence, special_morrey_norm, GridSpec, MorreyContext, Regime, SingularPoint, Window};
use crate::potential::Potential;
use crate::radial::{solve_radial_dirichlet, RadialProblem, SolverSpec};

pub type MatrixField = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Coefficient matrix: constant, or a field `x ↦ A(scale · x)` used only
/// for pointwise dilation.
#[derive(Clone)]
pub enum MatrixData {
    Constant(AnisotropyMatrix),
    Field { f: MatrixField, scale: f64 },
}

impl std::fmt::Debug for MatrixData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Constant(a) => write!(f, "Constant({:?})", a.entries()),
            Self::Field { scale, .. } => write!(f, "Field {{ scale: {scale} }}"),
        }
    }
}

impl MatrixData {
    pub fn at(&self, x: &[f64]) -> DMatrix<f64> {
        match self {
            Self::Constant(a) => a.entries().clone(),
            Self::Field { f, scale } => {
                let y: Vec<f64> = x.iter().map(|v| v * scale).collect();
                f(&y)
            }
        }
    }
}

/// `Q(u) = -Δ_{p,A} u + V|u|^{p-2}u` near an isolated singular point.
#[derive(Debug, Clone)]
pub struct OperatorData {
    pub p: f64,
    pub dim: usize,
    pub matrix: MatrixData,
    pub potential: Potential,
    pub singular_point: SingularPoint,
}

impl OperatorData {
    pub fn new(p: f64, matrix: AnisotropyMatrix, potential: Potential, singular_point: SingularPoint) -> Result<Self> {
        crate::error::check_dim(matrix.dim(), potential.dim)?;
        Ok(Self {
            p,
            dim: matrix.dim(),
            matrix: MatrixData::Constant(matrix),
            potential,
            singular_point,
        })
    }
}

/// `(A_R, V_R)`.
pub fn dilate_operator(data: &OperatorData, r: f64) -> Result<OperatorData> {
    let matrix = match &data.matrix {
        MatrixData::Constant(a) => MatrixData::Constant(a.clone()),
        MatrixData::Field { f, scale } => MatrixData::Field {
            f: Arc::clone(f),
            scale: scale * r,
        },
    };
    Ok(OperatorData {
        matrix,
        potential: data.potential.dilate(r, data.p)?,
        ..data.clone()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitClass {
    Vanishing,
    FixedPoint,
    BoundedNonvanishing,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceThresholds {
    /// Trailing entries below this fraction of the first count as vanishing.
    pub vanishing: f64,
    /// Relative spread below which the trace is a fixed point.
    pub fixed_point: f64,
}

impl Default for TraceThresholds {
    fn default() -> Self {
        Self {
            vanishing: 1e-3,
            fixed_point: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationTrace {
    pub stage: usize,
    pub r_seq: Vec<f64>,
    pub dilated_norms: Vec<f64>,
    pub classification: LimitClass,
    pub thresholds: TraceThresholds,
}

/// Classifies a norm trace.
pub fn classify_trace(norms: &[f64], thresholds: &TraceThresholds) -> LimitClass {
    if norms.iter().any(|v| !v.is_finite()) {
        return LimitClass::Unbounded;
    }
    let n = norms.len();
    let first = norms[0];
    let max = norms.iter().copied().fold(0.0, f64::max);
    let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        return LimitClass::Vanishing;
    }
    if max - min <= thresholds.fixed_point * min {
        return LimitClass::FixedPoint;
    }
    if n >= 3 {
        let tail = &norms[n - 3..];
        let decreasing = tail.windows(2).all(|w| w[1] < w[0]);
        if decreasing && tail.iter().all(|v| *v < thresholds.vanishing * first) {
            return LimitClass::Vanishing;
        }
        let increasing = tail.windows(2).all(|w| w[1] > w[0]);
        if increasing && first > 0.0 && norms[n - 1] * thresholds.vanishing > first {
            return LimitClass::Unbounded;
        }
        if increasing && first == 0.0 {
            return LimitClass::Unbounded;
        }
    }
    LimitClass::BoundedNonvanishing
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakFuchsianReport {
    pub traces: Vec<DilationTrace>,
    pub weak_fuchsian: bool,
}

/// Applies the dilation ladders in sequence and classifies each norm trace.
///
/// The potential passed to the next stage is the identified limit: unchanged
/// for a fixed point, zero for a vanishing trace, and the last dilate for a
/// bounded trace without identified limit. The verdict is true iff the last
/// stage vanishes.
pub fn weak_fuchsian_probe(ctx: &MorreyContext, data: &OperatorData, ladders: &[Vec<f64>], window: &Window, thresholds: &TraceThresholds, grid: &GridSpec) -> Result<WeakFuchsianReport> {
    if ladders.is_empty() {
        return Err(invalid("at least one ladder is required"));
    }
    let mut v = data.potential.clone();
    let mut traces = Vec::new();
    for (stage, ladder) in ladders.iter().enumerate() {
        if ladder.len() < 3 || ladder.iter().any(|r| !(*r > 0.0)) {
            return Err(invalid("each ladder needs at least 3 positive radii"));
        }
        let toward_zero = ladder.windows(2).all(|w| w[1] < w[0]);
        let toward_inf = ladder.windows(2).all(|w| w[1] > w[0]);
        if !(toward_zero || toward_inf) {
            return Err(invalid(format!("ladder {stage} is not monotone")));
        }
        let norms = dilation_norm_sequence(ctx, &v, ladder, window, grid)?;
        let classification = classify_trace(&norms, thresholds);
        traces.push(DilationTrace {
            stage,
            r_seq: ladder.clone(),
            dilated_norms: norms,
            classification,
            thresholds: *thresholds,
        });
        v = match classification {
            LimitClass::FixedPoint => v,
            LimitClass::Vanishing => Potential::zero(v.dim),
            LimitClass::BoundedNonvanishing => v.dilate(ladder[ladder.len() - 1], ctx.p)?,
            LimitClass::Unbounded => {
                return Ok(WeakFuchsianReport {
                    traces,
                    weak_fuchsian: false,
                })
            }
        };
    }
    let weak_fuchsian = traces
        .last()
        .map(|t| t.classification == LimitClass::Vanishing)
        .unwrap_or(false);
    Ok(WeakFuchsianReport {
        traces,
        weak_fuchsian,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormIdentity {
    /// `‖V_R‖` on the unit window.
    pub dilated: f64,
    /// `R^{p-d/q}‖V‖` on the `R`-scaled window (no factor for `p = d`).
    pub scaled: f64,
}

impl NormIdentity {
    pub fn relative_gap(&self) -> f64 {
        (self.dilated - self.scaled).abs() / self.dilated.abs().max(self.scaled.abs()).max(1e-300)
    }
}

/// Both sides of `‖V_R‖_{ω} = R^{p-d/q}‖V‖_{Rω}`.
pub fn norm_identity(ctx: &MorreyContext, v: &Potential, r: f64, window: &Window, grid: &GridSpec) -> Result<NormIdentity> {
    let vr = v.dilate(r, ctx.p)?;
    let dilated = special_morrey_norm(ctx, &vr, window, grid)?.value;
    let scaled_window = match *window {
        Window::Ball { radius } => Window::Ball { radius: radius * r },
        Window::Annulus { inner, outer } => Window::Annulus {
            inner: inner * r,
            outer: outer * r,
        },
    };
    let factor = match ctx.regime {
        Regime::Critical => 1.0,
        _ => r.powf(ctx.p - ctx.dim as f64 / ctx.q),
    };
    let scaled = factor * special_morrey_norm(ctx, v, &scaled_window, grid)?.value;
    Ok(NormIdentity { dilated, scaled })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationCheck {
    pub scale: f64,
    pub sup_discrepancy: f64,
}

/// Solves on `[ρ, R_out]`, then solves the dilated problem on
/// `[ρ/R, R_out/R]` with `V_R` and the same boundary values, and compares
/// `u(R s)` with the dilated solution at the nodes.
pub fn solution_dilation_check(problem: &RadialProblem, r: f64, spec: &SolverSpec) -> Result<DilationCheck> {
    let base = solve_radial_dirichlet(problem, spec)?;
    let scaled = solve_radial_dirichlet(&problem.dilated(r)?, spec)?;
    let mut sup: f64 = 0.0;
    for (i, s) in scaled.grid.iter().enumerate() {
        let node = base.values[i];
        let grid_gap = (base.grid[i] - r * s).abs() / base.grid[i];
        let reference = if grid_gap < 1e-12 { node } else { base.eval(r * s) };
        sup = sup.max((scaled.values[i] - reference).abs());
    }
    Ok(DilationCheck {
        scale: r,
        sup_discrepancy: sup,
    })
}
