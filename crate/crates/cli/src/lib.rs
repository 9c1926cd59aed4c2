//! Batch front-end for `qreset-core`: parses run configurations, drives the
//! figure recipes and sweeps, and writes CSV artifacts.

pub mod config;
pub mod csv;
pub mod experiment;
pub mod sweep;

use std::path::{Path, PathBuf};

use config::RunConfig;
use experiment::{run_experiment, Recipe, RunOutput};
use sweep::{sweep, Axis};

/// Name of the sidecar log listing failed grid points.
pub const ERROR_LOG: &str = "sweep_errors.log";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{point}: {source}")]
    Engine {
        point: String,
        #[source]
        source: qreset_core::Error,
    },
    #[error("artifact: {0}")]
    Artifact(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Clone for CliError {
    fn clone(&self) -> Self {
        match self {
            Self::Config(s) => Self::Config(s.clone()),
            Self::Engine { point, source } => Self::Engine {
                point: point.clone(),
                source: source.clone(),
            },
            Self::Artifact(s) => Self::Artifact(s.clone()),
            Self::Io(e) => Self::Io(std::io::Error::new(e.kind(), e.to_string())),
        }
    }
}

/// What a completed invocation wrote.
#[derive(Debug, Default)]
pub struct Report {
    pub written: Vec<PathBuf>,
    pub summary: Vec<String>,
    pub failures: Vec<String>,
}

impl Report {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }
}

/// Decides whether the config asks for a sweep, and along which axis.
pub fn sweep_axis(config: &RunConfig, recipe: Recipe) -> Result<Option<(Axis, Vec<f64>)>, CliError> {
    let tau = config.tau_sweep.clone().map(|v| (Axis::Tau, v));
    let tr = if recipe.tr_is_grid() {
        None
    } else {
        config.tr_sweep.clone().map(|v| (Axis::TR, v))
    };
    match (tau, tr) {
        (Some(_), Some(_)) => Err(CliError::Config(format!(
            "recipe {recipe} sweeps one axis at a time; give tau_sweep or tr_sweep"
        ))),
        (a, b) => Ok(a.or(b)),
    }
}

type PointRun = (Option<(Axis, f64)>, Result<RunOutput, CliError>);

/// Runs `recipe` (as a sweep when the config carries one) and writes every
/// completed artifact under `out_dir`. Failed points go to [`ERROR_LOG`].
pub fn execute(config: &RunConfig, recipe: Recipe, out_dir: &Path) -> Result<Report, CliError> {
    let runs: Vec<PointRun> = match sweep_axis(config, recipe)? {
        Some((axis, values)) => sweep(config, recipe, axis, &values)?
            .into_iter()
            .map(|p| (Some((axis, p.value)), p.outcome))
            .collect(),
        None => vec![(None, run_experiment(config, recipe))],
    };
    // a lone run that fails validation is a config error, not a partial sweep
    if let [(None, Err(CliError::Config(_)))] = runs.as_slice() {
        return Err(runs.into_iter().next().unwrap().1.unwrap_err());
    }

    let mut report = Report::default();
    for (point, outcome) in runs {
        let label = match point {
            Some((Axis::Tau, v)) => format!("tau={}", csv::format_g12(v)),
            Some((Axis::TR, v)) => format!("t_r={}", csv::format_g12(v)),
            None => recipe.name().to_string(),
        };
        match outcome {
            Ok(out) => {
                for artifact in &out.artifacts {
                    report.written.push(artifact.write_to(out_dir)?);
                }
                if !out.summary.is_empty() {
                    let name = out.artifacts[0].name.trim_end_matches(".csv").to_string() + "_summary.txt";
                    std::fs::write(out_dir.join(name), out.summary.join("\n") + "\n")?;
                }
                report.summary.extend(out.summary.into_iter().map(|s| format!("[{label}] {s}")));
                report.failures.extend(out.failures.iter().map(|e| format!("[{label}] {e}")));
            }
            Err(e) => report.failures.push(format!("[{label}] {e}")),
        }
    }

    let log = out_dir.join(ERROR_LOG);
    if report.is_partial() {
        std::fs::create_dir_all(out_dir)?;
        std::fs::write(&log, report.failures.join("\n") + "\n")?;
    } else if log.exists() {
        std::fs::remove_file(&log)?;
    }
    Ok(report)
}
