//! Command-line front end: resolves a run configuration, dispatches to the
//! library and renders a JSON report plus an optional CSV table.

mod config;
mod render;

use std::io::Write;
use std::time::Instant;

use serde_json::{json, Value};

pub use config::{Args, Command, FamilySpec, RunConfig};
pub use render::{csv_number, to_json_string};

use crate::equilibrium::{cylinder_mass_with, variational_residual, MarginalSampler, MarginalSpec};
use crate::error::Error;
use crate::ldp::{ldp_residual, rate_on_cylinder};
use crate::optimization::{
    beta_sweep, calibration_residual, find_maxima, laplace_log_partition, selection_weights,
};
use crate::transfer::{eigen_residual, log_eigenfunction, EigenData};

pub const SCHEMA_VERSION: u32 = 1;
pub const THREADS_ENV: &str = "XYGIBBS_THREADS";

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Run(Error),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Run(Error::InvalidParameter(_)) => 2,
            CliError::Run(
                Error::OutOfDomain { .. }
                | Error::Domain(_)
                | Error::Divergence(_)
                | Error::Accuracy { .. },
            ) => 3,
            CliError::Run(
                Error::UnsupportedMultiplicity { .. }
                | Error::EndpointPeak(_)
                | Error::DegeneratePeak { .. }
                | Error::NonConcavePeak(_),
            ) => 4,
            CliError::Io(_) => 5,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Run(e) => e.code(),
            CliError::Io(_) => "io",
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Config(m) | CliError::Io(m) => m.clone(),
            CliError::Run(e) => e.to_string(),
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> String {
        to_json_string(&json!({
            "schema": SCHEMA_VERSION,
            "error": { "code": self.code(), "exit_code": self.exit_code(), "message": self.message() },
        }))
    }
}

/// Rendered artifacts of one run.
#[derive(Debug, Clone)]
pub struct Output {
    pub report: String,
    pub csv: Option<String>,
}

struct Computed {
    outputs: Value,
    errors: Value,
    csv: Option<String>,
}

/// Runs one resolved configuration.
pub fn execute(config: &RunConfig) -> Result<Output, CliError> {
    let start = Instant::now();
    let computed = dispatch(config)?;
    let report = json!({
        "schema": SCHEMA_VERSION,
        "command": config.command.name(),
        "config": config,
        "outputs": computed.outputs,
        "error_estimates": computed.errors,
        "wall_time_seconds": start.elapsed().as_secs_f64(),
    });
    Ok(Output {
        report: to_json_string(&report),
        csv: computed.csv,
    })
}

fn dispatch(config: &RunConfig) -> Result<Computed, CliError> {
    let family = config.build_family()?;
    let opts = config.quad_options();
    let cylinder = config.build_cylinder(&family)?;
    let betas = &config.betas;

    let computed = match config.command {
        Command::Pressure => {
            let rows = betas
                .iter()
                .map(|&b| EigenData::compute(&family, b, &opts))
                .collect::<crate::Result<Vec<_>>>()?;
            Computed {
                outputs: json!(rows
                    .iter()
                    .map(|r| json!({
                        "beta": r.beta,
                        "log_lambda": r.log_lambda,
                        "pressure_over_beta": r.pressure_over_beta(),
                    }))
                    .collect::<Vec<_>>()),
                errors: json!({ "log_lambda": rows.iter().map(|r| r.log_lambda_error).collect::<Vec<_>>() }),
                csv: None,
            }
        }
        Command::Entropy => {
            let rows = betas
                .iter()
                .map(|&b| variational_residual(&family, b, &opts))
                .collect::<crate::Result<Vec<_>>>()?;
            Computed {
                errors: json!({ "variational_residual": rows.iter().map(|r| r.residual).collect::<Vec<_>>() }),
                outputs: json!(rows),
                csv: None,
            }
        }
        Command::Density => {
            let mut rows = Vec::new();
            let mut errs = Vec::new();
            for &b in betas {
                let eigen = EigenData::compute(&family, b, &opts)?;
                let density = config
                    .points
                    .iter()
                    .map(|&a| eigen.density(&family, a))
                    .collect::<crate::Result<Vec<_>>>()?;
                rows.push(json!({ "beta": b, "points": config.points, "density": density }));
                errs.push(eigen.log_lambda_error);
            }
            Computed {
                outputs: json!(rows),
                errors: json!({ "log_density": errs }),
                csv: None,
            }
        }
        Command::Cylinder => {
            let d = cylinder.as_ref().expect("checked at resolution");
            let mut rows = Vec::new();
            let mut errs = Vec::new();
            for &b in betas {
                let eigen = EigenData::compute(&family, b, &opts)?;
                let mass = cylinder_mass_with(&family, &eigen, d, &opts)?;
                errs.push(mass.log_error);
                rows.push(json!({ "beta": b, "log_mass": mass.log_mass, "per_box": mass.per_box }));
            }
            Computed {
                outputs: json!(rows),
                errors: json!({ "log_mass": errs }),
                csv: None,
            }
        }
        Command::Eigencheck => {
            let hypothesis = family.check_eigen_hypothesis(&config.point);
            let rows = betas
                .iter()
                .map(|&b| {
                    Ok(json!({
                        "beta": b,
                        "log_h": log_eigenfunction(&family, b, &config.point)?.value,
                        "residual": eigen_residual(&family, b, &config.point, &opts)?,
                    }))
                })
                .collect::<crate::Result<Vec<_>>>()?;
            Computed {
                outputs: json!({ "hypothesis": hypothesis, "rows": rows }),
                errors: json!({ "quadrature_rel_tol": config.tol }),
                csv: None,
            }
        }
        Command::Subaction => {
            let u = family.subaction(&config.point)?;
            let f = family.evaluate(&config.point)?;
            let calibration = calibration_residual(&family, &config.point)?;
            Computed {
                outputs: json!({
                    "u": u.value,
                    "f": f.value,
                    "calibration": calibration,
                }),
                errors: json!({ "u": u.error, "f": f.error }),
                csv: None,
            }
        }
        Command::Maximize => {
            let report = find_maxima(&family, config.peak_tol)?;
            Computed {
                errors: json!({
                    "second_derivative": report.peaks.iter().map(|p| p.second_derivative_error).collect::<Vec<_>>(),
                }),
                outputs: json!(report),
                csv: None,
            }
        }
        Command::Select => {
            let report = find_maxima(&family, config.peak_tol)?;
            let selection = selection_weights(&report)?;
            Computed {
                outputs: json!({
                    "m_f": report.m_f,
                    "peaks": report.peaks.iter().map(|p| p.location).collect::<Vec<_>>(),
                    "weights": selection.weights,
                    "details": report.peaks,
                }),
                errors: json!({
                    "second_derivative": report.peaks.iter().map(|p| p.second_derivative_error).collect::<Vec<_>>(),
                }),
                csv: None,
            }
        }
        Command::Sweep => {
            let d = cylinder.as_ref().expect("checked at resolution");
            let rows = beta_sweep(&family, d, betas, &opts)?;
            let mut csv = String::from("beta,log_mass,pressure_over_beta\n");
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    csv_number(r.beta),
                    csv_number(r.log_mass),
                    csv_number(r.pressure_over_beta)
                ));
            }
            let m_f = family.landscape()?.max_value;
            Computed {
                outputs: json!({ "m_f": m_f, "rows": rows }),
                errors: json!({ "quadrature_rel_tol": config.tol }),
                csv: Some(csv),
            }
        }
        Command::Ldp => {
            let d = cylinder.as_ref().expect("checked at resolution");
            let rate = rate_on_cylinder(&family, d)?;
            let rows = ldp_residual(&family, d, betas, &opts)?;
            let mut csv = String::from("beta,log_mass_over_beta,neg_inf_I,residual\n");
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    csv_number(r.beta),
                    csv_number(r.log_mass_over_beta),
                    csv_number(r.neg_inf_rate),
                    csv_number(r.residual)
                ));
            }
            Computed {
                outputs: json!({ "rate": rate, "rows": rows }),
                errors: json!({ "quadrature_rel_tol": config.tol }),
                csv: Some(csv),
            }
        }
        Command::Laplace => {
            let report = find_maxima(&family, config.peak_tol)?;
            let mut rows = Vec::new();
            let mut errs = Vec::new();
            for &b in betas {
                let eigen = EigenData::compute(&family, b, &opts)?;
                let asymptotic = laplace_log_partition(&report, b)?;
                errs.push(eigen.log_lambda_error);
                rows.push(json!({
                    "beta": b,
                    "log_quadrature": eigen.log_lambda,
                    "log_asymptotic": asymptotic,
                    "relative_error": (eigen.log_lambda - asymptotic).exp_m1().abs(),
                }));
            }
            Computed {
                outputs: json!(rows),
                errors: json!({ "log_quadrature": errs }),
                csv: None,
            }
        }
        Command::Sample => {
            let beta = betas[0];
            let sampler = MarginalSampler::new(family.clone(), MarginalSpec::tilde(beta));
            let draws = sampler.sample(config.seed, config.count)?;
            let mean = draws.iter().sum::<f64>() / draws.len() as f64;
            let mut csv = String::from("sample\n");
            for x in &draws {
                csv.push_str(&csv_number(*x));
                csv.push('\n');
            }
            Computed {
                outputs: json!({ "beta": beta, "count": draws.len(), "mean": mean, "samples": draws }),
                errors: json!({ "cdf_nodes": crate::equilibrium::CDF_NODES }),
                csv: Some(csv),
            }
        }
    };
    Ok(computed)
}

fn write_file(path: &std::path::Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Caps the global thread pool when the environment asks for it.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(text) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .map_err(|e| CliError::Config(format!("{THREADS_ENV}={text:?}: {e}")))?;
    if n == 0 {
        return Err(CliError::Config(format!("{THREADS_ENV} must be at least 1")));
    }
    // a pool may already exist when embedded; the cap is then advisory
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Full CLI behaviour: resolve, run, write artifacts. Returns the exit code.
pub fn run(args: &Args) -> i32 {
    let result = configure_threads()
        .and_then(|()| RunConfig::resolve(args))
        .and_then(|config| execute(&config))
        .and_then(|out| {
            match &args.out {
                Some(path) => write_file(path, &out.report)?,
                None => println!("{}", out.report),
            }
            if let (Some(path), Some(csv)) = (&args.csv, &out.csv) {
                write_file(path, csv)?;
            }
            Ok(())
        });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "{}", e.to_json());
            e.exit_code()
        }
    }
}
