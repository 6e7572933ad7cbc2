//! Numerics for quasilinear `(p, A)`-Laplacian equations
//! `-div(|∇u|_A^{p-2} A∇u) + V|u|^{p-2}u = 0` with isolated singular points.

pub mod anisotropy;
pub mod cli;
pub mod dilation;
pub mod error;
pub mod fundamental;
pub mod morrey;
pub mod planar;
pub mod potential;
pub mod profile;
pub mod quad;
pub mod radial;

pub use error::{Error, Result};
