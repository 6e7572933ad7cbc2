//! One-dimensional quadrature: Gauss–Legendre rules and a globally adaptive
//! integrator built on them.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Apply the rule on [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, w * half))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tolerances and budget for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_intervals: usize,
    pub order: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-14,
            max_intervals: 2000,
            order: 10,
        }
    }
}

impl AdaptiveOptions {
    pub fn with_rtol(rtol: f64) -> Self {
        Self {
            rtol,
            ..Self::default()
        }
    }
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Legendre integration of `f` over [a, b].
///
/// Each interval is estimated by comparing one `order`-point panel against two
/// half panels; the interval with the largest error estimate is bisected until
/// the summed estimate meets `max(atol, rtol * |I|)`.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    opts: AdaptiveOptions,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "integration limits must be finite, got [{a}, {b}]"
        )));
    }
    let rule = GaussLegendre::new(opts.order);
    let mut estimate = |lo: f64, hi: f64| -> Result<Piece> {
        let mid = 0.5 * (lo + hi);
        let whole = rule.integrate(&mut f, lo, hi);
        let left = rule.integrate(&mut f, lo, mid);
        let right = rule.integrate(&mut f, mid, hi);
        let value = left + right;
        if !value.is_finite() || !whole.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite integrand sample on [{lo:.6e}, {hi:.6e}]"
            )));
        }
        Ok(Piece {
            a: lo,
            b: hi,
            value,
            error: (value - whole).abs(),
        })
    };

    let mut heap = BinaryHeap::new();
    let first = estimate(a, b)?;
    let mut total = first.value;
    let mut total_err = first.error;
    heap.push(first);
    while total_err > opts.atol.max(opts.rtol * total.abs()) {
        if heap.len() >= opts.max_intervals {
            return Err(Error::Diverged(format!(
                "adaptive quadrature on [{a:.6e}, {b:.6e}] exceeded {} intervals (estimate {total:.6e}, error {total_err:.3e})",
                opts.max_intervals
            )));
        }
        let worst = heap.pop().expect("heap is nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval collapsed to adjacent floats; keep the estimate.
            heap.push(Piece {
                error: 0.0,
                ..worst
            });
            total_err = heap.iter().map(|p| p.error).sum();
            continue;
        }
        let l = estimate(worst.a, mid)?;
        let r = estimate(mid, worst.b)?;
        total += l.value + r.value - worst.value;
        total_err += l.error + r.error - worst.error;
        heap.push(l);
        heap.push(r);
        // Re-sum periodically to shed accumulated cancellation error.
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.error).sum();
        }
    }
    Ok(heap.iter().map(|p| p.value).sum())
}

/// Integrate over consecutive pieces `[breaks[i], breaks[i+1]]` with the
/// substitution `x = mid - half * cos(t)`, which smooths square-root behavior
/// at both ends of each piece.
pub fn integrate_pieces_cosine<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    opts: AdaptiveOptions,
) -> Result<f64> {
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        total += integrate_adaptive(
            |t| {
                let x = mid - half * t.cos();
                f(x) * half * t.sin()
            },
            0.0,
            PI,
            opts,
        )?;
    }
    Ok(total)
}

/// Composite rule on a piece that starts at a (possibly) singular endpoint
/// `lo`: substitutes `x = lo + (hi - lo) * s^m` so that an integrable power
/// singularity `(x - lo)^a` with `a > -1` becomes smooth for large enough `m`.
pub fn integrate_graded<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    grading: f64,
    opts: AdaptiveOptions,
) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let len = hi - lo;
    let m = grading.max(1.0);
    integrate_adaptive(
        |s| {
            if s <= 0.0 {
                return 0.0;
            }
            let x = lo + len * s.powf(m);
            f(x) * len * m * s.powf(m - 1.0)
        },
        0.0,
        1.0,
        opts,
    )
}

/// Composite periodic trapezoid rule on [0, 2π) with `n` points.
pub fn periodic_trapezoid<F: FnMut(f64) -> f64>(mut f: F, n: usize) -> f64 {
    let h = 2.0 * PI / n as f64;
    (0..n).map(|k| f(k as f64 * h)).sum::<f64>() * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        for n in [1, 2, 5, 10, 20, 41] {
            let gl = GaussLegendre::new(n);
            let s: f64 = gl.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}: {s}");
        }
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let gl = GaussLegendre::new(6);
        // degree 11 is the highest exactly integrated degree.
        let v = gl.integrate(|x| x.powi(10) + x.powi(11), -1.0, 1.0);
        assert!((v - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_kink() {
        let v = integrate_adaptive(|x| x.abs().sqrt(), -1.0, 1.0, AdaptiveOptions::default())
            .unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn cosine_pieces_resolve_sqrt_endpoints() {
        // Quarter-circle area via sqrt(1 - x^2) on [0, 1].
        let v = integrate_pieces_cosine(
            |x| (1.0 - x * x).max(0.0).sqrt(),
            &[0.0, 1.0],
            AdaptiveOptions::with_rtol(1e-12),
        )
        .unwrap();
        assert!((v - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn graded_substitution_handles_power_singularity() {
        let a: f64 = -0.9;
        let v = integrate_graded(|x| x.powf(a), 0.0, 1.0, 2.0 / (a + 1.0), AdaptiveOptions::default())
            .unwrap();
        assert!((v - 1.0 / (a + 1.0)).abs() < 1e-8, "{v}");
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let r = integrate_adaptive(|x| 1.0 / x, 0.0, 1.0, AdaptiveOptions::default());
        assert!(r.is_err());
    }

    #[test]
    fn periodic_trapezoid_is_spectral() {
        let v = periodic_trapezoid(|t| (t.cos()).exp(), 32);
        // 2π I_0(1)
        assert!((v - 2.0 * PI * 1.266_065_877_752_008_4).abs() < 1e-13);
    }
}
