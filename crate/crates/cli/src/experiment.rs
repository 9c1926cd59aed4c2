//! Figure recipes: each turns a [`RunConfig`] into CSV artifacts.

use std::fmt;
use std::str::FromStr;

use qreset_core::analysis::{self, OptimalTr};
use qreset_core::dynamics::{self, Boundary, DetectionSeries};
use qreset_core::restart::{self, steps_in};
use qreset_core::{LatticeSpec, ModelKind};

use crate::config::{ModelSelection, RunConfig};
use crate::csv::{format_g12, CsvArtifact};
use crate::CliError;

/// Upper end of the default restart-time grid.
const DEFAULT_TR_MAX: f64 = 15.0;
/// Default run length of the `pdet` recipe.
const DEFAULT_PDET_HORIZON: f64 = 100.0;
/// Default run lengths of the restart recipes, in restart periods.
const RESET_SURVIVAL_WINDOWS: f64 = 20.0;
const DELTA_PR_WINDOWS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recipe {
    Pdet,
    ResetSurvival,
    MfdtSweep,
    OptimalTr,
    DeltaPr,
}

impl Recipe {
    pub const ALL: [Recipe; 5] = [
        Recipe::Pdet,
        Recipe::ResetSurvival,
        Recipe::MfdtSweep,
        Recipe::OptimalTr,
        Recipe::DeltaPr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Pdet => "pdet",
            Self::ResetSurvival => "reset-survival",
            Self::MfdtSweep => "mfdt-sweep",
            Self::OptimalTr => "optimal-tr",
            Self::DeltaPr => "delta-pr",
        }
    }

    /// Whether `tr_sweep` is the recipe's own grid rather than a sweep axis.
    pub fn tr_is_grid(self) -> bool {
        matches!(self, Self::MfdtSweep | Self::OptimalTr)
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Recipe {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown recipe {s:?}")))
    }
}

/// Artifacts of one run, plus any grid points that failed after the
/// completed rows were kept.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub artifacts: Vec<CsvArtifact>,
    pub summary: Vec<String>,
    pub failures: Vec<CliError>,
}

pub fn file_name(recipe: Recipe, model: ModelSelection) -> String {
    format!("{recipe}_{}.csv", model.label())
}

pub fn run_experiment(config: &RunConfig, recipe: Recipe) -> Result<RunOutput, CliError> {
    config.validate()?;
    match recipe {
        Recipe::Pdet => pdet(config),
        Recipe::ResetSurvival => reset_survival(config),
        Recipe::MfdtSweep => mfdt_sweep(config),
        Recipe::OptimalTr => optimal_tr(config),
        Recipe::DeltaPr => delta_pr(config),
    }
}

fn at(point: impl Into<String>) -> impl FnOnce(qreset_core::Error) -> CliError {
    let point = point.into();
    move |source| CliError::Engine { point, source }
}

fn series(spec: &LatticeSpec, kind: ModelKind, tau: f64, n: usize) -> qreset_core::Result<DetectionSeries> {
    match kind {
        ModelKind::Exact => dynamics::measured_evolution(spec, tau, n, Boundary::Guard),
        _ => dynamics::nh_survival_series(spec, kind, tau, n, Boundary::Guard),
    }
}

fn restart_steps(config: &RunConfig, recipe: Recipe) -> Result<(f64, usize), CliError> {
    let t_r = config
        .t_r
        .ok_or_else(|| CliError::Config(format!("recipe {recipe} needs r or t_r")))?;
    let r = steps_in(t_r, config.tau).ok_or_else(|| {
        CliError::Config(format!(
            "recipe {recipe}: t_r = {t_r} is not an integer multiple of tau = {}",
            config.tau
        ))
    })?;
    Ok((t_r, r))
}

fn tag(config: &RunConfig) -> String {
    match config.t_r {
        Some(t_r) => format!("tau={} t_r={}", format_g12(config.tau), format_g12(t_r)),
        None => format!("tau={}", format_g12(config.tau)),
    }
}

fn pdet(config: &RunConfig) -> Result<RunOutput, CliError> {
    let n = config.steps(DEFAULT_PDET_HORIZON)?;
    let restart = match config.t_r {
        Some(_) => Some(restart_steps(config, Recipe::Pdet)?.1),
        None => None,
    };
    let kinds = config.model.kinds();
    let mut columns = Vec::with_capacity(kinds.len());
    for &kind in &kinds {
        let point = format!("pdet {kind} {}", tag(config));
        let column = match restart {
            Some(r) => {
                let base = series(&config.spec, kind, config.tau, r).map_err(at(&point))?;
                restart::reset_pdet(&base, r, n).map_err(at(&point))?
            }
            None => series(&config.spec, kind, config.tau, n).map_err(at(&point))?.pdet[1..].to_vec(),
        };
        columns.push(column);
    }
    let mut header = vec!["T".to_string()];
    header.extend(kinds.iter().map(|k| format!("Pdet_{k}")));
    let mut artifact = CsvArtifact::new(file_name(Recipe::Pdet, config.model), header);
    for i in 0..n {
        let mut row = vec![(i + 1) as f64 * config.tau];
        row.extend(columns.iter().map(|c| c[i]));
        artifact.push(row)?;
    }
    Ok(RunOutput {
        artifacts: vec![artifact],
        ..RunOutput::default()
    })
}

fn reset_survival(config: &RunConfig) -> Result<RunOutput, CliError> {
    let (t_r, r) = restart_steps(config, Recipe::ResetSurvival)?;
    let n = config.steps(RESET_SURVIVAL_WINDOWS * t_r)?;
    let kind = match config.model {
        ModelSelection::One(ModelKind::ModelI) => ModelKind::ModelI,
        _ => ModelKind::ModelII,
    };
    let point = format!("reset-survival {}", tag(config));
    let base = series(&config.spec, ModelKind::Exact, config.tau, r).map_err(at(&point))?;
    let exact = restart::reset_survival(&base, r, n).map_err(at(&point))?;
    let a = analysis::alpha(kind, &config.spec, config.tau, t_r).map_err(at(&point))?;

    let header = ["T", "P_exact", "P_nh_predicted"].map(String::from).to_vec();
    let mut artifact = CsvArtifact::new(file_name(Recipe::ResetSurvival, config.model), header);
    for (i, p) in exact.iter().enumerate() {
        let t = (i + 1) as f64 * config.tau;
        artifact.push(vec![t, *p, a.predicted_survival(t)])?;
    }
    Ok(RunOutput {
        artifacts: vec![artifact],
        summary: vec![
            format!("alpha_{kind} = {}", format_g12(a.alpha)),
            format!("survival_timescale_{kind} = {}", format_g12(a.survival_timescale)),
        ],
        failures: Vec::new(),
    })
}

/// Restart-time grid of the grid recipes: `tr_sweep`, or `τ, 2τ, …` up to
/// the default maximum.
fn tr_grid(config: &RunConfig) -> Result<Vec<f64>, CliError> {
    let grid = match &config.tr_sweep {
        Some(values) => values.clone(),
        None => {
            let count = (DEFAULT_TR_MAX / config.tau + 1e-9).floor() as usize;
            (1..=count).map(|k| k as f64 * config.tau).collect()
        }
    };
    if grid.is_empty() {
        return Err(CliError::Config(format!("tau = {} leaves an empty t_r grid", config.tau)));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config("tr_sweep must be strictly increasing".into()));
    }
    Ok(grid)
}

/// Grid values as measurement counts.
fn grid_steps(grid: &[f64], tau: f64) -> Result<Vec<usize>, CliError> {
    grid.iter()
        .map(|&t| {
            steps_in(t, tau).ok_or_else(|| {
                CliError::Config(format!("t_r = {t} is not an integer multiple of tau = {tau}"))
            })
        })
        .collect()
}

/// Writes the rows whose values are all finite and notes the others.
fn collect_rows(artifact: &mut CsvArtifact, grid: &[f64], columns: &[Vec<f64>], summary: &mut Vec<String>) -> Result<(), CliError> {
    for (i, &t) in grid.iter().enumerate() {
        let mut row = vec![t];
        row.extend(columns.iter().map(|c| c[i]));
        if row.iter().all(|v| v.is_finite()) {
            artifact.push(row)?;
        } else {
            summary.push(format!("skipped t_r = {}: no detection within one window", format_g12(t)));
        }
    }
    Ok(())
}

fn mfdt_sweep(config: &RunConfig) -> Result<RunOutput, CliError> {
    let grid = tr_grid(config)?;
    let steps = grid_steps(&grid, config.tau)?;
    let r_max = *steps.last().expect("non-empty grid");
    let kinds = config.model.kinds();
    let mut columns = Vec::with_capacity(kinds.len());
    let mut failures = Vec::new();
    let mut completed = grid.len();
    for &kind in &kinds {
        let point = format!("mfdt-sweep {kind} tau={}", format_g12(config.tau));
        let base = series(&config.spec, kind, config.tau, r_max).map_err(at(&point))?;
        let mut column = Vec::with_capacity(grid.len());
        for (&t, &r) in grid.iter().zip(&steps) {
            match restart::mfdt(&base, r) {
                Ok(v) => column.push(v),
                Err(qreset_core::Error::NeverDetected { .. }) => column.push(f64::INFINITY),
                Err(e) => {
                    failures.push(at(format!("{point} t_r={}", format_g12(t)))(e));
                    completed = completed.min(column.len());
                    break;
                }
            }
        }
        columns.push(column);
    }
    let mut header = vec!["t_r".to_string()];
    header.extend(kinds.iter().map(|k| format!("MFDT_{k}")));
    let mut artifact = CsvArtifact::new(file_name(Recipe::MfdtSweep, config.model), header);
    let mut summary = Vec::new();
    collect_rows(&mut artifact, &grid[..completed], &columns, &mut summary)?;
    Ok(RunOutput {
        artifacts: vec![artifact],
        summary,
        failures,
    })
}

fn optimal_tr(config: &RunConfig) -> Result<RunOutput, CliError> {
    let grid = tr_grid(config)?;
    let kinds = config.model.kinds();
    let mut results: Vec<OptimalTr> = Vec::with_capacity(kinds.len());
    for &kind in &kinds {
        let point = format!("optimal-tr {kind} tau={}", format_g12(config.tau));
        let result = match kind {
            ModelKind::Exact => {
                let steps = grid_steps(&grid, config.tau)?;
                let r_max = *steps.last().expect("non-empty grid");
                let base = series(&config.spec, kind, config.tau, r_max).map_err(at(&point))?;
                analysis::optimal_tr_exact_rate(&base, &steps)
            }
            _ => analysis::optimal_tr_nh(kind, &config.spec, config.tau, &grid),
        };
        results.push(result.map_err(at(&point))?);
    }
    let mut header = vec!["t_r".to_string()];
    header.extend(kinds.iter().map(|k| format!("neg_alpha_over_t_r_{k}")));
    let mut artifact = CsvArtifact::new(file_name(Recipe::OptimalTr, config.model), header);
    let mut summary: Vec<String> = kinds
        .iter()
        .zip(&results)
        .map(|(k, res)| format!("t_star_{k} = {}", format_g12(res.t_star)))
        .collect();
    let columns: Vec<Vec<f64>> = results.into_iter().map(|r| r.objective).collect();
    collect_rows(&mut artifact, &grid, &columns, &mut summary)?;
    Ok(RunOutput {
        artifacts: vec![artifact],
        summary,
        failures: Vec::new(),
    })
}

fn delta_pr(config: &RunConfig) -> Result<RunOutput, CliError> {
    let kinds: Vec<ModelKind> = match config.model {
        ModelSelection::One(ModelKind::Exact) => {
            return Err(CliError::Config("delta-pr compares effective models; use model1, model2 or all".into()))
        }
        ModelSelection::One(kind) => vec![kind],
        ModelSelection::All => vec![ModelKind::ModelI, ModelKind::ModelII],
    };
    let (t_r, r) = restart_steps(config, Recipe::DeltaPr)?;
    let r_max = config.steps(DELTA_PR_WINDOWS * t_r)? / r;
    if r_max == 0 {
        return Err(CliError::Config("delta-pr run is shorter than one restart period".into()));
    }
    let n = r_max * r;
    let point = format!("delta-pr {}", tag(config));
    let exact = series(&config.spec, ModelKind::Exact, config.tau, r).map_err(at(&point))?;
    let exact = restart::reset_pdet(&exact, r, n).map_err(at(&point))?;
    let mut columns = Vec::with_capacity(kinds.len());
    for &kind in &kinds {
        let point = format!("delta-pr {kind} {}", tag(config));
        let eff = series(&config.spec, kind, config.tau, r).map_err(at(&point))?;
        let eff = restart::reset_pdet(&eff, r, n).map_err(at(&point))?;
        let report = analysis::delta_p_r(&exact, &eff, r, config.tau, r_max, kind).map_err(at(&point))?;
        columns.push(report.delta);
    }
    let mut header = vec!["R".to_string()];
    header.extend(kinds.iter().map(|k| format!("dP_R_{k}")));
    let mut artifact = CsvArtifact::new(file_name(Recipe::DeltaPr, config.model), header);
    for i in 0..r_max {
        let mut row = vec![(i + 1) as f64];
        row.extend(columns.iter().map(|c| c[i]));
        artifact.push(row)?;
    }
    Ok(RunOutput {
        artifacts: vec![artifact],
        ..RunOutput::default()
    })
}
