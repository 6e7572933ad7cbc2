use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::config::{BoundaryData, DomainSpec, Scenario, ScenarioConfig};
use super::report::{Check, Provenance, Report, Series};
use crate::anisotropy::AnisotropyMatrix;
use crate::dilation::{dilate_operator, weak_fuchsian_probe, OperatorData, TraceThresholds};
use crate::error::{invalid, Result};
use crate::fundamental::{
    extremal_energy_quadrature, hardy_constant, hardy_inequality_check, weighted_capacity, CapacityNormalization,
    FundamentalSolution,
};
use crate::morrey::{fuchsian_check, morrey_norm, GridSpec, Ladder, MorreyContext, SingularPoint, Window};
use crate::planar::{
    harnack_ratio, kelvin_residual, minimize_dirichlet, observed_orders, AnnularGrid2D, DiscreteField2D,
    MinimizerSpec, PlanarProblem,
};
use crate::potential::{Potential, PotentialSpec};
use crate::profile::RadialTestFunction;
use crate::radial::{
    criticality_probe, ratio_limit, solve_radial_dirichlet, FitSpec, RadialProblem, RadialSolution, SolverSpec,
};

const KELVIN_MARGIN: f64 = 0.1;

struct Parts {
    results: serde_json::Value,
    checks: Vec<Check>,
    provenance: Vec<Provenance>,
    series: Vec<Series>,
}

impl Parts {
    fn new(results: serde_json::Value) -> Self {
        Self {
            results,
            checks: Vec::new(),
            provenance: Vec::new(),
            series: Vec::new(),
        }
    }
}

/// Executes the configured scenario.
pub fn run(cfg: &ScenarioConfig) -> Result<Report> {
    cfg.validate()?;
    let parts = match cfg.scenario {
        Scenario::Fundamental => fundamental(cfg)?,
        Scenario::MorreyNorm => morrey(cfg)?,
        Scenario::FuchsianCheck => fuchsian(cfg)?,
        Scenario::DilationProbe => dilation(cfg)?,
        Scenario::RadialSolve => radial_solve(cfg)?,
        Scenario::RatioLimit => ratio(cfg)?,
        Scenario::CriticalityProbe => criticality(cfg)?,
        Scenario::Solve2d => solve2d(cfg)?,
        Scenario::Harnack => harnack(cfg)?,
        Scenario::KelvinCheck => kelvin(cfg)?,
        Scenario::Capacity => capacity(cfg)?,
        Scenario::HardyCheck => hardy(cfg)?,
    };
    Ok(Report {
        inputs: cfg.clone(),
        results: parts.results,
        checks: parts.checks,
        provenance: parts.provenance,
        series: parts.series,
    })
}

fn matrix(cfg: &ScenarioConfig) -> Result<AnisotropyMatrix> {
    cfg.matrix_spec().build()
}

fn potential(cfg: &ScenarioConfig) -> Result<Potential> {
    cfg.potential.build(cfg.d, cfg.p)
}

/// Defaults to `d + 1`, admissible in every regime.
fn q(cfg: &ScenarioConfig) -> f64 {
    cfg.q.unwrap_or(cfg.d as f64 + 1.0)
}

fn domain(cfg: &ScenarioConfig, inner: f64, outer: f64) -> DomainSpec {
    cfg.domain.unwrap_or(DomainSpec { inner, outer })
}

fn ladder(cfg: &ScenarioConfig, default: Ladder) -> Ladder {
    cfg.ladder.unwrap_or(default)
}

fn require_planar(cfg: &ScenarioConfig) -> Result<()> {
    if cfg.d != 2 {
        return Err(crate::Error::UnsupportedDimension(cfg.d));
    }
    Ok(())
}

fn fundamental(cfg: &ScenarioConfig) -> Result<Parts> {
    let fs = FundamentalSolution::new(cfg.p, matrix(cfg)?)?;
    let radii = cfg.radii.clone().unwrap_or_else(|| vec![0.25, 1.0, 4.0]);
    let tol = cfg.tol(cfg.tolerances.flux);
    let mut table = Vec::new();
    let mut checks = Vec::new();
    for &r in &radii {
        let flux = fs.flux_integral(r, 1e-10)?;
        checks.push(Check::near(format!("flux_r={r}"), flux, -1.0, tol));
        table.push(json!({ "r": r, "flux": flux, "mu": fs.radial(r) }));
    }
    let samples = [0.25, 0.5, 1.0, 2.0, 4.0].map(|r| fs.radial(r));
    let decreasing = samples.windows(2).all(|w| w[1] < w[0]);
    checks.push(Check::holds("mu_decreasing_in_radius", decreasing));
    let mut parts = Parts::new(json!({
        "constant": fs.constant,
        "exponent": fs.exponent(),
        "form": fs.form,
        "flux_table": table,
        "sign": {
            "mu_at_half": fs.radial(0.5),
            "mu_at_two": fs.radial(2.0),
            "decreasing": decreasing,
        },
    }));
    parts.checks = checks;
    parts.provenance.push(Provenance::new("flux", "-1", "divergence theorem on A-ellipsoids"));
    Ok(parts)
}

fn window(cfg: &ScenarioConfig) -> Window {
    match cfg.domain {
        Some(DomainSpec { inner, outer }) if inner > 0.0 => Window::Annulus { inner, outer },
        Some(DomainSpec { outer, .. }) => Window::Ball { radius: outer },
        None => Window::Ball { radius: 1.0 },
    }
}

fn morrey(cfg: &ScenarioConfig) -> Result<Parts> {
    let ctx = MorreyContext::new(cfg.p, q(cfg), cfg.d)?;
    let est = morrey_norm(&ctx, &potential(cfg)?, &window(cfg), &GridSpec::default())?;
    let mut parts = Parts::new(json!({ "context": ctx, "window": window(cfg), "estimate": est }));
    parts.checks.push(Check::holds("refinement_converged", est.converged));
    Ok(parts)
}

fn fuchsian(cfg: &ScenarioConfig) -> Result<Parts> {
    let ctx = MorreyContext::new(cfg.p, q(cfg), cfg.d)?;
    let lad = ladder(cfg, Ladder::dyadic_toward(cfg.zeta, 6));
    let rep = fuchsian_check(
        &ctx,
        &potential(cfg)?,
        cfg.zeta,
        &lad,
        cfg.tolerances.stability_factor,
        &GridSpec::default(),
    )?;
    let mut parts = Parts::new(json!({ "context": ctx, "report": rep }));
    parts.checks.push(Check::holds("is_fuchsian", rep.is_fuchsian));
    parts.provenance.push(Provenance::new(
        "is_fuchsian",
        "bounded weighted norms on dyadic annuli",
        "finite ladder with a stability factor in place of the existential constant",
    ));
    Ok(parts)
}

fn dilation(cfg: &ScenarioConfig) -> Result<Parts> {
    let a = matrix(cfg)?;
    let v = potential(cfg)?;
    let data = OperatorData::new(cfg.p, a, v, cfg.zeta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let points: Vec<Vec<f64>> = (0..8).map(|_| (0..cfg.d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let mut gap = 0.0f64;
    for (r1, r2) in [(0.5, 0.25), (3.0, 0.1), (0.7, 1.9)] {
        let twice = dilate_operator(&dilate_operator(&data, r1)?, r2)?;
        let once = dilate_operator(&data, r1 * r2)?;
        for x in &points {
            let (s, o) = (twice.potential.eval(x), once.potential.eval(x));
            if s.is_finite() && o.is_finite() {
                gap = gap.max((s - o).abs() / o.abs().max(1e-300));
            }
        }
    }
    let default = match cfg.zeta {
        SingularPoint::Origin => Ladder { start: 1.0, factor: 0.5, count: 14 },
        SingularPoint::Infinity => Ladder { start: 1.0, factor: 2.0, count: 14 },
    };
    let ctx = MorreyContext::new(cfg.p, q(cfg), cfg.d)?;
    let probe = weak_fuchsian_probe(
        &ctx,
        &data,
        &[ladder(cfg, default).values()],
        &window(cfg),
        &TraceThresholds::default(),
        &GridSpec::default(),
    )?;
    let mut parts = Parts::new(json!({ "semigroup_gap": gap, "probe": probe }));
    parts.checks.push(Check::at_most("semigroup_law", gap, cfg.tol(cfg.tolerances.semigroup)));
    parts.provenance.push(Provenance::new("semigroup_gap", "0", "(V_R)_S = V_{RS} pointwise"));
    Ok(parts)
}

fn radial_problem(cfg: &ScenarioConfig, dom: DomainSpec, values: (f64, f64)) -> Result<RadialProblem> {
    RadialProblem::new(cfg.p, matrix(cfg)?, potential(cfg)?, dom.inner, dom.outer, values.0, values.1)
}

fn solver(cfg: &ScenarioConfig) -> SolverSpec {
    SolverSpec {
        cells: cfg.cells.unwrap_or(2048),
        ..Default::default()
    }
}

/// Radial boundary values: constant data at both ends, or `shift + μ`.
fn radial_values(cfg: &ScenarioConfig, dom: DomainSpec) -> Result<(f64, f64)> {
    match cfg.boundary.clone().unwrap_or(BoundaryData::Fundamental { shift: 1.0 }) {
        BoundaryData::Constant { value } => Ok((value, value)),
        BoundaryData::Fundamental { shift } => {
            let fs = FundamentalSolution::new(cfg.p, matrix(cfg)?)?;
            Ok((shift + fs.radial(dom.inner), shift + fs.radial(dom.outer)))
        }
        BoundaryData::Fourier { .. } => Err(invalid("Fourier data need a planar scenario")),
    }
}

fn radial_series(sol: &RadialSolution) -> Series {
    Series::new("radial", ["r", "u", "flux"], sol.series())
}

fn radial_solve(cfg: &ScenarioConfig) -> Result<Parts> {
    let dom = domain(cfg, 0.5, 2.0);
    let bc = radial_values(cfg, dom)?;
    let sol = solve_radial_dirichlet(&radial_problem(cfg, dom, bc)?, &solver(cfg))?;
    let conservation = sol.conservation_residual();
    let tol = cfg.tol(cfg.tolerances.closed_form);
    let mut parts = Parts::new(json!({
        "domain": dom,
        "boundary_values": [bc.0, bc.1],
        "cells": sol.len() - 1,
        "conservation_residual": conservation,
        "flux_range": [sol.flux.iter().copied().fold(f64::INFINITY, f64::min), sol.flux.iter().copied().fold(f64::NEG_INFINITY, f64::max)],
    }));
    if cfg.potential == PotentialSpec::Zero {
        let (p, d) = (cfg.p, cfg.d as f64);
        let (r0, r1) = (dom.inner, dom.outer);
        let exact = |r: f64| -> f64 {
            if p == d {
                bc.0 + (bc.1 - bc.0) * (r / r0).ln() / (r1 / r0).ln()
            } else {
                let a = (p - d) / (p - 1.0);
                bc.0 + (bc.1 - bc.0) * (r.powf(a) - r0.powf(a)) / (r1.powf(a) - r0.powf(a))
            }
        };
        let err = sol.grid.iter().zip(&sol.values).fold(0.0f64, |m, (r, u)| m.max((u - exact(*r)).abs()));
        parts.results["closed_form_error"] = json!(err);
        parts.checks.push(Check::at_most("closed_form_error", err, tol));
        parts.provenance.push(Provenance::new(
            "closed_form",
            "a + b r^((p-d)/(p-1)), or a + b log r for p = d",
            "radial solutions with zero potential",
        ));
    } else {
        parts.checks.push(Check::at_most("conservation_residual", conservation, tol));
    }
    parts.series.push(radial_series(&sol));
    Ok(parts)
}

fn ratio(cfg: &ScenarioConfig) -> Result<Parts> {
    let (dom, default) = match cfg.zeta {
        SingularPoint::Origin => (domain(cfg, 1e-6, 1.0), Ladder { start: 1.0 / 16.0, factor: 0.5, count: 16 }),
        SingularPoint::Infinity => (domain(cfg, 1.0, 1e6), Ladder { start: 16.0, factor: 2.0, count: 16 }),
    };
    let lad = ladder(cfg, default);
    let fs = FundamentalSolution::new(cfg.p, matrix(cfg)?)?;
    // Default data `1 + |μ|` stay positive toward either singular point.
    let bc = match cfg.boundary {
        None => (1.0 + fs.radial(dom.inner).abs(), 1.0 + fs.radial(dom.outer).abs()),
        Some(_) => radial_values(cfg, dom)?,
    };
    let u = solve_radial_dirichlet(&radial_problem(cfg, dom, bc)?, &solver(cfg))?;
    let mu = move |r: f64| fs.radial(r).abs();
    let diag = ratio_limit(&u, &mu, &lad.values(), cfg.zeta, &FitSpec::default())?;
    let rows: Vec<[f64; 3]> = (0..diag.radii.len())
        .map(|i| [diag.radii[i], diag.m_seq[i], diag.big_m_seq[i]])
        .collect();
    let mut parts = Parts::new(json!({ "domain": dom, "boundary_values": [bc.0, bc.1], "diagnostics": diag }));
    parts.checks.push(Check::holds("regular", diag.regular));
    parts.series.push(Series::new("ratio", ["R", "m_r", "M_r"], rows));
    parts.series.push(Series::new("solution", ["r", "u", "flux"], u.series()));
    Ok(parts)
}

fn criticality(cfg: &ScenarioConfig) -> Result<Parts> {
    let ks = ladder(cfg, Ladder { start: 16.0, factor: 2.0, count: 9 }).values();
    let probes = cfg.radii.clone().unwrap_or_else(|| vec![2.0]);
    let rep = criticality_probe(cfg.p, &matrix(cfg)?, &ks, &probes, &solver(cfg))?;
    let mut parts = Parts::new(json!({ "report": rep }));
    parts.checks.push(Check::at_most(
        "closed_form_error",
        rep.closed_form_error,
        cfg.tol(cfg.tolerances.criticality),
    ));
    parts.checks.push(Check::holds("monotone", rep.monotone));
    parts.checks.push(Check::holds("critical_iff_p_at_least_d", rep.critical == (cfg.p >= cfg.d as f64)));
    parts.provenance.push(Provenance::new("critical", "p >= d", "criticality dichotomy"));
    Ok(parts)
}

fn planar_data(cfg: &ScenarioConfig, dom: DomainSpec, h: f64, default: BoundaryData) -> Result<DiscreteField2D> {
    require_planar(cfg)?;
    let a = matrix(cfg)?;
    let grid = AnnularGrid2D::new(a.clone(), dom.inner, dom.outer, h)?;
    match cfg.boundary.clone().unwrap_or(default) {
        BoundaryData::Constant { value } => DiscreteField2D::from_dirichlet(grid, |_| value),
        BoundaryData::Fundamental { shift } => {
            let fs = FundamentalSolution::new(cfg.p, a)?;
            DiscreteField2D::from_dirichlet(grid, |x| shift + fs.mu(x).unwrap_or(f64::NAN))
        }
        BoundaryData::Fourier { mean, amplitude, mode } => {
            DiscreteField2D::from_dirichlet(grid, |x| mean + amplitude * (mode * x[1].atan2(x[0])).cos())
        }
    }
}

fn minimizer(cfg: &ScenarioConfig) -> MinimizerSpec {
    MinimizerSpec {
        tol: cfg.tol(cfg.tolerances.planar_residual),
        ..Default::default()
    }
}

fn solve2d(cfg: &ScenarioConfig) -> Result<Parts> {
    let dom = domain(cfg, 0.5, 1.5);
    let data = planar_data(cfg, dom, cfg.h.unwrap_or(1.0 / 32.0), BoundaryData::Fundamental { shift: 0.0 })?;
    let problem = PlanarProblem::new(cfg.p, potential(cfg)?).with_weight_exponent(cfg.beta.unwrap_or(0.0));
    let (u, rep) = minimize_dirichlet(&data, &problem, &minimizer(cfg))?;
    let mut parts = Parts::new(json!({
        "domain": dom,
        "free_nodes": u.grid.free_count(),
        "boundary_nodes": u.grid.boundary_count(),
        "minimizer": rep,
    }));
    parts.checks.push(Check::at_most("residual", rep.residual, rep.tolerance));
    parts.checks.push(Check::holds("energy_nonincreasing", rep.energy_nonincreasing()));
    parts.series.push(Series::new("field", ["x", "y", "u"], u.series()));
    Ok(parts)
}

fn harnack(cfg: &ScenarioConfig) -> Result<Parts> {
    let dom = domain(cfg, 0.1, 2.0);
    let data = planar_data(cfg, dom, cfg.h.unwrap_or(1.0 / 32.0), BoundaryData::Constant { value: 1.0 })?;
    let problem = PlanarProblem::new(cfg.p, potential(cfg)?);
    let (u, rep) = minimize_dirichlet(&data, &problem, &minimizer(cfg))?;
    let lad = ladder(cfg, Ladder { start: 1.0, factor: 0.5, count: 3 });
    let h = harnack_ratio(&u, &lad.values())?;
    let mut parts = Parts::new(json!({ "domain": dom, "minimizer": rep, "harnack": h }));
    parts.checks.push(Check::at_most("rung_spread", h.spread, cfg.tolerances.harnack_spread));
    parts.series.push(Series::new("field", ["x", "y", "u"], u.series()));
    Ok(parts)
}

fn kelvin(cfg: &ScenarioConfig) -> Result<Parts> {
    if cfg.potential != PotentialSpec::Zero {
        return Err(invalid("the Kelvin check runs with zero potential"));
    }
    let dom = domain(cfg, 0.6, 1.4);
    let base = cfg.h.unwrap_or(1.0 / 64.0);
    let mut levels = Vec::new();
    let mut residuals = Vec::new();
    for h in [base, base / 2.0, base / 4.0] {
        let data = planar_data(cfg, dom, h, BoundaryData::Fundamental { shift: 0.0 })?;
        let (u, _) = minimize_dirichlet(&data, &PlanarProblem::new(cfg.p, Potential::zero(2)), &minimizer(cfg))?;
        let k = kelvin_residual(&u, cfg.p, KELVIN_MARGIN)?;
        residuals.push(k.residual);
        levels.push(k);
    }
    let orders = observed_orders(&residuals);
    let mut parts = Parts::new(json!({ "domain": dom, "levels": levels, "orders": orders }));
    for (i, o) in orders.iter().enumerate() {
        parts.checks.push(Check::at_least(format!("order_{i}"), *o, cfg.tolerances.min_order));
    }
    parts.provenance.push(Provenance::new(
        "kelvin_residual",
        "0 in the continuum",
        "inversion maps solutions to solutions of the weighted equation",
    ));
    Ok(parts)
}

fn capacity(cfg: &ScenarioConfig) -> Result<Parts> {
    let dom = domain(cfg, 0.1, 1.0);
    let beta = cfg.beta.unwrap_or(2.0);
    let closed = weighted_capacity(cfg.p, cfg.d, beta, dom.inner, dom.outer, CapacityNormalization::Full)?;
    let quad = extremal_energy_quadrature(cfg.p, cfg.d, beta, dom.inner, dom.outer)?;
    let gap = (closed - quad).abs() / closed.abs().max(1e-300);
    let mut parts = Parts::new(json!({ "domain": dom, "beta": beta, "closed_form": closed, "quadrature": quad, "relative_gap": gap }));
    parts.checks.push(Check::at_most("relative_gap", gap, cfg.tol(cfg.tolerances.capacity)));
    parts.provenance.push(Provenance::new(
        "closed_form",
        "omega_d |gamma|^(p-1) |r^gamma - R^gamma|^(1-p)",
        "energy of the radial extremal profile",
    ));
    Ok(parts)
}

fn hardy(cfg: &ScenarioConfig) -> Result<Parts> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut samples = Vec::new();
    let mut all = true;
    let mut min_margin = f64::INFINITY;
    for _ in 0..cfg.samples.unwrap_or(20) {
        let a = rng.random_range(0.01..2.0);
        let b = a + rng.random_range(0.05..3.0);
        let amp = rng.random_range(0.1..5.0);
        let h = hardy_inequality_check(cfg.p, cfg.d, &RadialTestFunction::bump(a, b, amp)?)?;
        all &= h.holds();
        min_margin = min_margin.min(h.margin());
        samples.push(json!({ "support": [a, b], "amplitude": amp, "lhs": h.lhs, "rhs": h.rhs }));
    }
    let mut parts = Parts::new(json!({
        "hardy_constant": hardy_constant(cfg.p, cfg.d),
        "min_margin": min_margin,
        "samples": samples,
    }));
    parts.checks.push(Check::holds("all_hold", all));
    Ok(parts)
}
