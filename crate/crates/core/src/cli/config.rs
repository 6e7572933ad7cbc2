use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::anisotropy::MatrixSpec;
use crate::error::{Error, Result};
use crate::morrey::{Ladder, SingularPoint};
use crate::potential::PotentialSpec;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Fundamental,
    MorreyNorm,
    FuchsianCheck,
    DilationProbe,
    RadialSolve,
    RatioLimit,
    CriticalityProbe,
    Solve2d,
    Harnack,
    KelvinCheck,
    Capacity,
    HardyCheck,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Fundamental => "fundamental",
            Self::MorreyNorm => "morrey-norm",
            Self::FuchsianCheck => "fuchsian-check",
            Self::DilationProbe => "dilation-probe",
            Self::RadialSolve => "radial-solve",
            Self::RatioLimit => "ratio-limit",
            Self::CriticalityProbe => "criticality-probe",
            Self::Solve2d => "solve2d",
            Self::Harnack => "harnack",
            Self::KelvinCheck => "kelvin-check",
            Self::Capacity => "capacity",
            Self::HardyCheck => "hardy-check",
        }
    }
}

/// Radii of the working domain: an annulus, or a ball when `inner` is 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub inner: f64,
    pub outer: f64,
}

/// Dirichlet data for planar scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryData {
    Constant { value: f64 },
    /// `shift + μ`.
    Fundamental { shift: f64 },
    /// `mean + amplitude · cos(mode · θ)`.
    Fourier { mean: f64, amplitude: f64, mode: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub flux: f64,
    pub closed_form: f64,
    pub planar_residual: f64,
    pub criticality: f64,
    pub ratio: f64,
    pub capacity: f64,
    pub semigroup: f64,
    pub min_order: f64,
    pub harnack_spread: f64,
    pub stability_factor: f64,
    /// Multiplies every error tolerance (not orders, spreads or factors).
    pub scale: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            flux: 1e-6,
            closed_form: 1e-6,
            planar_residual: 1e-8,
            criticality: 1e-4,
            ratio: 1e-3,
            capacity: 1e-4,
            semigroup: 1e-12,
            min_order: 0.9,
            harnack_spread: 2.0,
            stability_factor: 10.0,
            scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    pub csv: bool,
}

/// A complete, reproducible scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    pub scenario: Scenario,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub matrix: Option<MatrixSpec>,
    #[serde(default = "default_potential")]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub boundary: Option<BoundaryData>,
    #[serde(default)]
    pub ladder: Option<Ladder>,
    #[serde(default = "default_zeta")]
    pub zeta: SingularPoint,
    /// Mesh spacing of planar grids.
    #[serde(default)]
    pub h: Option<f64>,
    /// Cells of the radial solver.
    #[serde(default)]
    pub cells: Option<usize>,
    /// Gradient-weight exponent for capacities.
    #[serde(default)]
    pub beta: Option<f64>,
    /// Probe radii (fundamental flux radii, criticality probes).
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
}

fn default_p() -> f64 {
    2.0
}
fn default_d() -> usize {
    2
}
fn default_potential() -> PotentialSpec {
    PotentialSpec::Zero
}
fn default_zeta() -> SingularPoint {
    SingularPoint::Origin
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            version: CONFIG_VERSION,
            scenario,
            p: default_p(),
            d: default_d(),
            q: None,
            matrix: None,
            potential: default_potential(),
            domain: None,
            boundary: None,
            ladder: None,
            zeta: default_zeta(),
            h: None,
            cells: None,
            beta: None,
            radii: None,
            samples: None,
            tolerances: Tolerances::default(),
            output: OutputSpec::default(),
            seed: 0,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    pub fn emit(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn matrix_spec(&self) -> MatrixSpec {
        self.matrix.clone().unwrap_or(MatrixSpec::Identity { dim: self.d })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.version != CONFIG_VERSION {
            return bad(format!("unsupported config version {} (expected {CONFIG_VERSION})", self.version));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return bad(format!("p must lie in (1, inf), got {}", self.p));
        }
        if self.d < 2 {
            return bad(format!("d must be at least 2, got {}", self.d));
        }
        if self.matrix_spec().dim() != self.d {
            return bad(format!("matrix dimension {} does not match d = {}", self.matrix_spec().dim(), self.d));
        }
        let t = &self.tolerances;
        let all = [
            t.flux,
            t.closed_form,
            t.planar_residual,
            t.criticality,
            t.ratio,
            t.capacity,
            t.semigroup,
            t.min_order,
            t.harnack_spread,
            t.stability_factor,
            t.scale,
        ];
        if all.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad("all tolerances must be positive and finite".into());
        }
        if let Some(dom) = self.domain {
            if !(dom.inner >= 0.0 && dom.outer > dom.inner && dom.outer.is_finite()) {
                return bad(format!("domain needs 0 <= inner < outer, got {dom:?}"));
            }
        }
        if let Some(h) = self.h {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("h must be positive, got {h}"));
            }
        }
        if let Some(ladder) = self.ladder {
            ladder.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.cells == Some(0) || self.samples == Some(0) {
            return bad("cells and samples must be positive".into());
        }
        Ok(())
    }

    /// A tolerance multiplied by the configured scale.
    pub fn tol(&self, base: f64) -> f64 {
        base * self.tolerances.scale
    }
}
