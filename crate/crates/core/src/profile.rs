//! Compactly supported radial test functions `u(x) = φ(|x|)` with their
//! derivatives, used by the Hardy and Morrey–Adams diagnostics.

use std::sync::Arc;

use crate::error::{invalid, Result};

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `φ` on `[support.0, support.1]` with derivative `φ′`; zero outside.
#[derive(Clone)]
pub struct RadialTestFunction {
    value: Profile,
    derivative: Profile,
    pub support: (f64, f64),
}

impl std::fmt::Debug for RadialTestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialTestFunction")
            .field("support", &self.support)
            .finish()
    }
}

impl RadialTestFunction {
    pub fn new<F, G>(value: F, derivative: G, support: (f64, f64)) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(support.0 >= 0.0 && support.1 > support.0 && support.1.is_finite()) {
            return Err(invalid(format!("invalid support {support:?}")));
        }
        Ok(Self {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            support,
        })
    }

    /// `amplitude · ((r - a)(b - r))² / ((b - a)/2)⁴` on `[a, b]`, a `C¹` bump
    /// peaking at `amplitude`.
    pub fn bump(a: f64, b: f64, amplitude: f64) -> Result<Self> {
        let half = 0.5 * (b - a);
        let norm = half.powi(4);
        Self::new(
            move |r| {
                if r <= a || r >= b {
                    0.0
                } else {
                    amplitude * ((r - a) * (b - r)).powi(2) / norm
                }
            },
            move |r| {
                if r <= a || r >= b {
                    0.0
                } else {
                    let s = (r - a) * (b - r);
                    amplitude * 2.0 * s * (a + b - 2.0 * r) / norm
                }
            },
            (a, b),
        )
    }

    /// A plateau of height `amplitude` on `[0, a]`, cubic fall-off to 0 at `b`.
    pub fn plateau(a: f64, b: f64, amplitude: f64) -> Result<Self> {
        if !(0.0 < a && a < b) {
            return Err(invalid("plateau needs 0 < a < b"));
        }
        let w = b - a;
        Self::new(
            move |r| {
                if r <= a {
                    amplitude
                } else if r >= b {
                    0.0
                } else {
                    let s = (r - a) / w;
                    amplitude * (1.0 - s * s * (3.0 - 2.0 * s))
                }
            },
            move |r| {
                if r <= a || r >= b {
                    0.0
                } else {
                    let s = (r - a) / w;
                    -amplitude * 6.0 * s * (1.0 - s) / w
                }
            },
            (0.0, b),
        )
    }

    /// `x ↦ u(t x)`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid(format!("scale must be positive, got {t}")));
        }
        let v = Arc::clone(&self.value);
        let d = Arc::clone(&self.derivative);
        Self::new(
            move |r| v(t * r),
            move |r| t * d(t * r),
            (self.support.0 / t, self.support.1 / t),
        )
    }

    pub fn value(&self, r: f64) -> f64 {
        (self.value)(r)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        (self.derivative)(r)
    }

    /// Interior kinks that quadrature should split at.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        vec![self.support.0, self.support.1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(u: &RadialTestFunction, r: f64) -> f64 {
        let h = 1e-6;
        (u.value(r + h) - u.value(r - h)) / (2.0 * h)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let b = RadialTestFunction::bump(1.0, 2.0, 3.0).unwrap();
        let p = RadialTestFunction::plateau(0.5, 1.5, 2.0).unwrap();
        let s = b.scaled(2.0).unwrap();
        for r in [0.6, 0.8, 1.1, 1.3, 1.7, 1.9] {
            assert!((b.derivative(r) - fd(&b, r)).abs() < 1e-6);
            assert!((p.derivative(r) - fd(&p, r)).abs() < 1e-6);
            assert!((s.derivative(r / 2.0) - fd(&s, r / 2.0)).abs() < 1e-5);
        }
        assert!((b.value(1.5) - 3.0).abs() < 1e-15);
        assert_eq!(s.support, (0.5, 1.0));
    }
}
