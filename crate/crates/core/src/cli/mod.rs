//! Scenario runner: command-line flags or a JSON config in, `report.json`
//! and CSV series out.

mod config;
mod report;
mod scenarios;

use std::path::PathBuf;

use clap::{Args, Parser};

pub use config::{BoundaryData, DomainSpec, OutputSpec, Scenario, ScenarioConfig, Tolerances, CONFIG_VERSION};
pub use report::{emit_series, Check, Provenance, Relation, Report, Series};
pub use scenarios::run;

use crate::anisotropy::MatrixSpec;
use crate::error::Error;
use crate::morrey::{Ladder, SingularPoint};
use crate::potential::PotentialSpec;

#[derive(Debug, Parser)]
#[command(name = "fuchs", version, allow_negative_numbers = true, about = "Verification scenarios for (p, A)-Laplacian equations with isolated singularities")]
pub struct Cli {
    pub scenario: Scenario,
    /// JSON scenario config; overrides individual flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for report.json, metadata.json and CSV series.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Multiplies every error tolerance.
    #[arg(long)]
    pub tol_scale: Option<f64>,
    /// Print the resolved config instead of running it.
    #[arg(long)]
    pub emit_config: bool,
    #[command(flatten)]
    pub args: ScenarioArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub q: Option<f64>,
    /// `identity`, `diag:a,b,...` or `full:a11,a12,...` (row-major).
    #[arg(long)]
    pub matrix: Option<String>,
    /// `zero`, `constant`, `hardy`, `power-law` or `bump`.
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub value: Option<f64>,
    #[arg(long)]
    pub coef: Option<f64>,
    #[arg(long)]
    pub exponent: Option<f64>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Bump bands `a:b,c:d`.
    #[arg(long)]
    pub bands: Option<String>,
    #[arg(long)]
    pub inner: Option<f64>,
    #[arg(long)]
    pub outer: Option<f64>,
    #[arg(long, value_enum)]
    pub zeta: Option<Zeta>,
    #[arg(long)]
    pub ladder_start: Option<f64>,
    #[arg(long)]
    pub ladder_factor: Option<f64>,
    #[arg(long)]
    pub ladder_count: Option<usize>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub cells: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Comma-separated probe radii.
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    /// Constant Dirichlet value (overrides the scenario default data).
    #[arg(long)]
    pub bc_value: Option<f64>,
    /// Write CSV series (requires --out).
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum Zeta {
    Origin,
    Infinity,
}

fn parse_list(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad number {s:?}: {e}"))))
        .collect()
}

fn parse_matrix(text: &str, d: usize) -> Result<MatrixSpec, Error> {
    match text.split_once(':') {
        None if text == "identity" => Ok(MatrixSpec::Identity { dim: d }),
        Some(("diag", list)) => Ok(MatrixSpec::Diagonal { entries: parse_list(list)? }),
        Some(("full", list)) => Ok(MatrixSpec::Full { dim: d, row_major: parse_list(list)? }),
        _ => Err(Error::Config(format!("unknown matrix {text:?}"))),
    }
}

fn need(v: Option<f64>, flag: &str) -> Result<f64, Error> {
    v.ok_or_else(|| Error::Config(format!("--{flag} is required for this potential")))
}

fn parse_potential(a: &ScenarioArgs, kind: &str) -> Result<PotentialSpec, Error> {
    Ok(match kind {
        "zero" => PotentialSpec::Zero,
        "constant" => PotentialSpec::Constant { value: need(a.value, "value")? },
        "hardy" => PotentialSpec::Hardy { lambda: need(a.lambda, "lambda")? },
        "power-law" => PotentialSpec::PowerLaw {
            coef: need(a.coef, "coef")?,
            exponent: need(a.exponent, "exponent")?,
        },
        "bump" => {
            let text = a.bands.as_deref().ok_or_else(|| Error::Config("--bands is required for bump".into()))?;
            let bands = text
                .split(',')
                .map(|b| {
                    let (lo, hi) = b.split_once(':').ok_or_else(|| Error::Config(format!("bad band {b:?}")))?;
                    Ok((parse_list(lo)?[0], parse_list(hi)?[0]))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            PotentialSpec::AnnulusBump { bands, amplitude: need(a.amplitude, "amplitude")? }
        }
        other => return Err(Error::Config(format!("unknown potential {other:?}"))),
    })
}

impl ScenarioArgs {
    pub fn into_config(&self, scenario: Scenario) -> Result<ScenarioConfig, Error> {
        let mut cfg = ScenarioConfig::new(scenario);
        if let Some(p) = self.p {
            cfg.p = p;
        }
        if let Some(d) = self.d {
            cfg.d = d;
        }
        cfg.q = self.q;
        if let Some(m) = &self.matrix {
            cfg.matrix = Some(parse_matrix(m, cfg.d)?);
        }
        if let Some(kind) = &self.potential {
            cfg.potential = parse_potential(self, kind)?;
        }
        match (self.inner, self.outer) {
            (Some(inner), Some(outer)) => cfg.domain = Some(DomainSpec { inner, outer }),
            (None, None) => {}
            _ => return Err(Error::Config("--inner and --outer go together".into())),
        }
        if let Some(z) = self.zeta {
            cfg.zeta = match z {
                Zeta::Origin => SingularPoint::Origin,
                Zeta::Infinity => SingularPoint::Infinity,
            };
        }
        match (self.ladder_start, self.ladder_factor, self.ladder_count) {
            (Some(start), Some(factor), Some(count)) => cfg.ladder = Some(Ladder { start, factor, count }),
            (None, None, None) => {}
            _ => return Err(Error::Config("--ladder-start, --ladder-factor and --ladder-count go together".into())),
        }
        cfg.h = self.h;
        cfg.cells = self.cells;
        cfg.beta = self.beta;
        cfg.samples = self.samples;
        cfg.radii = self.radii.clone();
        if let Some(value) = self.bc_value {
            cfg.boundary = Some(BoundaryData::Constant { value });
        }
        cfg.output.csv = self.csv;
        Ok(cfg)
    }
}

/// Builds the config from `cli`: the config file when given, flags otherwise.
/// Global `--out`, `--seed` and `--tol-scale` fill in what the file leaves unset.
pub fn resolve(cli: &Cli) -> Result<ScenarioConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let cfg = ScenarioConfig::load(path)?;
            if cfg.scenario != cli.scenario {
                return Err(Error::Config(format!(
                    "config is for {:?}, not {:?}",
                    cfg.scenario.name(),
                    cli.scenario.name()
                )));
            }
            cfg
        }
        None => {
            let mut cfg = cli.args.into_config(cli.scenario)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            if let Some(s) = cli.tol_scale {
                cfg.tolerances.scale = s;
            }
            cfg
        }
    };
    if cfg.output.dir.is_none() {
        cfg.output.dir = cli.out.clone();
    }
    if cfg.output.csv && cfg.output.dir.is_none() {
        return Err(Error::Config("CSV output needs an output directory".into()));
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Exit status for an error: 2 for bad input, 1 for numeric failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::UnsupportedDimension(_) => 2,
        _ => 1,
    }
}

/// Runs the command line and returns the process exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let cfg = match resolve(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    if cli.emit_config {
        println!("{}", cfg.emit());
        return 0;
    }
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: scenario {} failed: {e}", cfg.scenario.name());
            return exit_code(&e);
        }
    };
    print!("{}", report.to_json());
    if let Some(dir) = &cfg.output.dir {
        if let Err(e) = report.write(dir, cfg.output.csv) {
            eprintln!("error: {e}");
            return 1;
        }
    }
    if report.passed() {
        0
    } else {
        eprintln!("failed checks: {}", report.failed_checks().join(", "));
        1
    }
}
