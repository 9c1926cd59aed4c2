//! Flat `key = value` run configuration.

use std::path::PathBuf;

use qreset_core::restart::steps_in;
use qreset_core::{LatticeSpec, ModelKind};

use crate::CliError;

const KEYS: &[&str] = &[
    "L",
    "detector_index",
    "initial_index",
    "tau",
    "model",
    "r",
    "t_r",
    "n_max",
    "horizon",
    "tau_sweep",
    "tr_sweep",
    "output_path",
    "seed",
];

/// Which engines a run drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelSelection {
    One(ModelKind),
    All,
}

impl ModelSelection {
    pub fn kinds(self) -> Vec<ModelKind> {
        match self {
            Self::One(kind) => vec![kind],
            Self::All => vec![ModelKind::Exact, ModelKind::ModelI, ModelKind::ModelII],
        }
    }

    pub fn includes(self, kind: ModelKind) -> bool {
        self.kinds().contains(&kind)
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::One(kind) => kind.label(),
            Self::All => "all",
        }
    }
}

/// How long a run lasts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunLength {
    Steps(usize),
    Horizon(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: LatticeSpec,
    pub tau: f64,
    pub model: ModelSelection,
    /// Restart period as a time; `None` means no restart.
    pub t_r: Option<f64>,
    pub length: Option<RunLength>,
    pub tau_sweep: Option<Vec<f64>>,
    pub tr_sweep: Option<Vec<f64>>,
    pub output_path: PathBuf,
    /// Only used by synthetic-noise fixtures.
    pub seed: Option<u64>,
}

impl RunConfig {
    /// Restart period in measurements, if `t_r` is a multiple of τ.
    pub fn restart_steps(&self) -> Option<usize> {
        self.t_r.and_then(|t| steps_in(t, self.tau))
    }

    /// Number of measurements, falling back to `default_horizon`.
    pub fn steps(&self, default_horizon: f64) -> Result<usize, CliError> {
        let n = match self.length {
            Some(RunLength::Steps(n)) => n,
            Some(RunLength::Horizon(t)) => (t / self.tau + 1e-9).floor() as usize,
            None => (default_horizon / self.tau + 1e-9).floor() as usize,
        };
        if n == 0 {
            return Err(CliError::Config("run length is shorter than one measurement".into()));
        }
        Ok(n)
    }

    /// Same config at another τ, revalidated.
    pub fn with_tau(&self, tau: f64) -> Result<Self, CliError> {
        let next = Self { tau, ..self.clone() };
        next.validate()?;
        Ok(next)
    }

    /// Same config at another restart time, revalidated.
    pub fn with_t_r(&self, t_r: f64) -> Result<Self, CliError> {
        let next = Self {
            t_r: Some(t_r),
            ..self.clone()
        };
        next.validate()?;
        Ok(next)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        positive("tau", self.tau)?;
        if let Some(t) = self.t_r {
            positive("t_r", t)?;
            if self.model.includes(ModelKind::Exact) && steps_in(t, self.tau).is_none() {
                return Err(CliError::Config(format!(
                    "t_r = {t} is not an integer multiple of tau = {}",
                    self.tau
                )));
            }
        }
        if let Some(RunLength::Horizon(t)) = self.length {
            positive("horizon", t)?;
        }
        for (key, list) in [("tau_sweep", &self.tau_sweep), ("tr_sweep", &self.tr_sweep)] {
            if let Some(values) = list {
                if values.is_empty() {
                    return Err(CliError::Config(format!("{key} is empty")));
                }
                for &v in values {
                    positive(key, v)?;
                }
            }
        }
        if self.model.includes(ModelKind::ModelI) {
            let s = self.spec.detector();
            if s == 1 || s == self.spec.length() {
                return Err(CliError::Config(format!(
                    "model1 needs both neighbours of the detector, but s = {s} is at the edge"
                )));
            }
        }
        Ok(())
    }
}

fn positive(key: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{key} must be positive, got {v}")))
    }
}

fn number<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, CliError> {
    raw.parse()
        .map_err(|_| CliError::Config(format!("malformed value for {key}: {raw:?}")))
}

/// Parses a comma-separated list of reals.
pub fn parse_list(key: &str, raw: &str) -> Result<Vec<f64>, CliError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| number(key, s))
        .collect()
}

fn parse_model(raw: &str) -> Result<ModelSelection, CliError> {
    Ok(match raw {
        "exact" => ModelSelection::One(ModelKind::Exact),
        "model1" => ModelSelection::One(ModelKind::ModelI),
        "model2" => ModelSelection::One(ModelKind::ModelII),
        "all" => ModelSelection::All,
        other => {
            return Err(CliError::Config(format!(
                "model must be exact|model1|model2|all, got {other:?}"
            )))
        }
    })
}

/// Parses a flat `key = value` document. Unknown or repeated keys are errors.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let mut entries: Vec<(&str, &str)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(CliError::Config(format!("line {}: unknown key {key:?}", lineno + 1)));
        }
        if entries.iter().any(|(k, _)| *k == key) {
            return Err(CliError::Config(format!("line {}: repeated key {key:?}", lineno + 1)));
        }
        entries.push((key, value));
    }
    let get = |key: &str| entries.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);

    let length: usize = get("L").map(|v| number("L", v)).transpose()?.unwrap_or(500);
    let detector = get("detector_index")
        .map(|v| number("detector_index", v))
        .transpose()?
        .unwrap_or(length / 2 + 10);
    let initial = get("initial_index")
        .map(|v| number("initial_index", v))
        .transpose()?
        .unwrap_or(length / 2);
    let spec = LatticeSpec::new(length, detector, initial).map_err(|e| CliError::Config(e.to_string()))?;

    let tau: f64 = number("tau", get("tau").ok_or_else(|| CliError::Config("missing required key `tau`".into()))?)?;
    let model = get("model").map(parse_model).transpose()?.unwrap_or(ModelSelection::All);

    let t_r = match (get("r"), get("t_r")) {
        (Some(_), Some(_)) => return Err(CliError::Config("give either r or t_r, not both".into())),
        (Some(r), None) => {
            let r: usize = number("r", r)?;
            if r == 0 {
                return Err(CliError::Config("r must be >= 1".into()));
            }
            Some(r as f64 * tau)
        }
        (None, Some(t)) => Some(number("t_r", t)?),
        (None, None) => None,
    };
    let length_spec = match (get("n_max"), get("horizon")) {
        (Some(_), Some(_)) => return Err(CliError::Config("give either n_max or horizon, not both".into())),
        (Some(n), None) => Some(RunLength::Steps(number("n_max", n)?)),
        (None, Some(t)) => Some(RunLength::Horizon(number("horizon", t)?)),
        (None, None) => None,
    };

    let config = RunConfig {
        spec,
        tau,
        model,
        t_r,
        length: length_spec,
        tau_sweep: get("tau_sweep").map(|v| parse_list("tau_sweep", v)).transpose()?,
        tr_sweep: get("tr_sweep").map(|v| parse_list("tr_sweep", v)).transpose()?,
        output_path: PathBuf::from(get("output_path").unwrap_or(".")),
        seed: get("seed").map(|v| number("seed", v)).transpose()?,
    };
    config.validate()?;
    Ok(config)
}
