use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::equilibrium::Cylinder;
use crate::potential::{EventuallyConstantPoint, Interval, PotentialFamily};
use crate::quadrature::QuadOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Pressure,
    Entropy,
    Density,
    Cylinder,
    Eigencheck,
    Subaction,
    Maximize,
    Select,
    Sweep,
    Ldp,
    Laplace,
    Sample,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Pressure => "pressure",
            Command::Entropy => "entropy",
            Command::Density => "density",
            Command::Cylinder => "cylinder",
            Command::Eigencheck => "eigencheck",
            Command::Subaction => "subaction",
            Command::Maximize => "maximize",
            Command::Select => "select",
            Command::Sweep => "sweep",
            Command::Ldp => "ldp",
            Command::Laplace => "laplace",
            Command::Sample => "sample",
        }
    }

    fn needs_beta(self) -> bool {
        !matches!(self, Command::Subaction | Command::Maximize | Command::Select)
    }

    fn needs_cylinder(self) -> bool {
        matches!(self, Command::Cylinder | Command::Sweep | Command::Ldp)
    }
}

/// Command-line flags. Flags override the corresponding keys of the config
/// file.
#[derive(Debug, Clone, Parser)]
#[command(name = "xygibbs", version, about = "Thermodynamic formalism for product-type potentials on the XY model")]
pub struct Args {
    /// Family configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum)]
    pub command: Option<Command>,
    /// Inverse temperature, or a comma-separated list.
    #[arg(long)]
    pub beta: Option<String>,
    /// Cylinder as JSON, e.g. `[[0.2,0.3],[-0.1,0.1]]`.
    #[arg(long)]
    pub cylinder: Option<String>,
    /// Where to write the JSON report (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write the CSV table, for commands that produce one.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative quadrature tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Number of draws for `sample`.
    #[arg(long)]
    pub count: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    One(f64),
    Many(Vec<f64>),
}

/// Contents of the config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub family: String,
    pub gamma: Option<f64>,
    pub domain: Option<[f64; 2]>,
    pub coeffs: Option<Vec<f64>>,
    pub command: Option<Command>,
    pub beta: Option<BetaSpec>,
    pub cylinder: Option<Vec<[f64; 2]>>,
    pub point: Option<EventuallyConstantPoint>,
    pub points: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub count: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilySpec {
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub domain: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<f64>>,
}

/// Fully resolved run configuration, echoed in every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub family: FamilySpec,
    pub command: Command,
    pub betas: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cylinder: Option<Vec<[f64; 2]>>,
    pub point: EventuallyConstantPoint,
    pub points: Vec<f64>,
    pub seed: u64,
    pub count: usize,
    pub tol: f64,
    pub peak_tol: f64,
    pub max_panels: usize,
}

pub const DEFAULT_COUNT: usize = 1000;
pub const DEFAULT_DENSITY_POINTS: usize = 11;

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn parse_betas(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| config_error(format!("bad beta value {t:?}: {e}")))
        })
        .collect()
}

pub fn parse_cylinder(text: &str) -> Result<Vec<[f64; 2]>, CliError> {
    serde_json::from_str(text)
        .map_err(|e| config_error(format!("cylinder must be a list of [lo, hi] pairs: {e}")))
}

fn read_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_error(format!("bad config {}: {e}", path.display())))
}

impl RunConfig {
    pub fn resolve(args: &Args) -> Result<Self, CliError> {
        let file = read_config(&args.config)?;
        let command = args
            .command
            .or(file.command)
            .ok_or_else(|| config_error("no command given"))?;

        let default_domain = match file.family.as_str() {
            "example1" => [-0.5, 0.5],
            "polylog" => [-1.0, 1.0],
            "zero" | "single" => [0.0, 1.0],
            other => return Err(config_error(format!("unknown family {other:?}"))),
        };
        let family = FamilySpec {
            family: file.family.clone(),
            gamma: file.gamma,
            domain: file.domain.unwrap_or(default_domain),
            coeffs: file.coeffs.clone(),
        };

        let betas = match (&args.beta, &file.beta) {
            (Some(text), _) => parse_betas(text)?,
            (None, Some(BetaSpec::One(b))) => vec![*b],
            (None, Some(BetaSpec::Many(bs))) => bs.clone(),
            (None, None) => Vec::new(),
        };
        if command.needs_beta() && betas.is_empty() {
            return Err(config_error(format!("command {} needs --beta", command.name())));
        }
        if betas.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return Err(config_error("beta values must be finite and nonnegative"));
        }
        if matches!(command, Command::Sweep | Command::Ldp | Command::Laplace)
            && betas.iter().any(|b| *b <= 0.0)
        {
            return Err(config_error(format!("command {} needs beta > 0", command.name())));
        }

        let cylinder = match (&args.cylinder, &file.cylinder) {
            (Some(text), _) => Some(parse_cylinder(text)?),
            (None, c) => c.clone(),
        };
        if command.needs_cylinder() && cylinder.is_none() {
            return Err(config_error(format!("command {} needs --cylinder", command.name())));
        }

        let [lo, hi] = family.domain;
        let point = file
            .point
            .clone()
            .unwrap_or_else(|| EventuallyConstantPoint::constant(0.5 * (lo + hi)));
        let points = match &file.points {
            Some(p) => p.clone(),
            None => Interval::new(lo, hi)
                .map(|d| d.grid(DEFAULT_DENSITY_POINTS))
                .unwrap_or_default(),
        };

        let tol = args.tol.or(file.tol).unwrap_or(QuadOptions::DEFAULT_REL_TOL);
        if !(tol > 0.0 && tol < 1.0) {
            return Err(config_error(format!("tolerance must lie in (0, 1), got {tol}")));
        }
        let count = args.count.or(file.count).unwrap_or(DEFAULT_COUNT);
        if count == 0 {
            return Err(config_error("count must be at least 1"));
        }

        Ok(Self {
            family,
            command,
            betas,
            cylinder,
            point,
            points,
            seed: args.seed.or(file.seed).unwrap_or(0),
            count,
            tol,
            peak_tol: crate::landscape::DEFAULT_PEAK_TOL,
            max_panels: QuadOptions::default().max_panels,
        })
    }

    pub fn quad_options(&self) -> QuadOptions {
        QuadOptions {
            abs_tol: 0.0,
            rel_tol: self.tol,
            max_panels: self.max_panels,
        }
    }

    pub fn build_family(&self) -> crate::Result<PotentialFamily> {
        let spec = &self.family;
        let domain = Interval::new(spec.domain[0], spec.domain[1])?;
        match spec.family.as_str() {
            "zero" => Ok(PotentialFamily::zero(domain)),
            "example1" => PotentialFamily::example1_on(domain),
            "polylog" => {
                let gamma = spec.gamma.ok_or_else(|| {
                    crate::Error::InvalidParameter("polylog family needs \"gamma\"".into())
                })?;
                PotentialFamily::polylog_on(gamma, domain)
            }
            "single" => {
                let coeffs = spec.coeffs.clone().ok_or_else(|| {
                    crate::Error::InvalidParameter("single family needs \"coeffs\"".into())
                })?;
                PotentialFamily::single(coeffs, domain)
            }
            other => Err(crate::Error::InvalidParameter(format!("unknown family {other:?}"))),
        }
    }

    pub fn build_cylinder(&self, family: &PotentialFamily) -> crate::Result<Option<Cylinder>> {
        self.cylinder
            .as_ref()
            .map(|pairs| Cylinder::from_pairs(pairs, family.domain()))
            .transpose()
    }
}
