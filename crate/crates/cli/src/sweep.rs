//! Parameter sweeps over τ or t_r. Values run through the core grid map and
//! come back in value order, so output does not depend on scheduling.

use qreset_core::par::grid_map;

use crate::config::RunConfig;
use crate::csv::format_g12;
use crate::experiment::{run_experiment, Recipe, RunOutput};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Tau,
    TR,
}

impl Axis {
    fn key(self) -> &'static str {
        match self {
            Self::Tau => "tau",
            Self::TR => "tr",
        }
    }
}

/// Result of one sweep value.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub outcome: Result<RunOutput, CliError>,
}

/// Inserts `_{axis}{value}` before the extension.
pub fn tagged_name(name: &str, axis: Axis, value: f64) -> String {
    let (stem, ext) = name.rsplit_once('.').unwrap_or((name, ""));
    let tag = format!("_{}{}", axis.key(), format_g12(value));
    if ext.is_empty() {
        format!("{stem}{tag}")
    } else {
        format!("{stem}{tag}.{ext}")
    }
}

/// Runs `recipe` once per value. Per-value failures (including a value
/// that makes the config invalid) are kept in the returned points.
pub fn sweep(config: &RunConfig, recipe: Recipe, axis: Axis, values: &[f64]) -> Result<Vec<SweepPoint>, CliError> {
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(CliError::Config(format!("sweep value {v} is not positive")));
    }
    let run = |&value: &f64| {
        let outcome = match axis {
            Axis::Tau => config.with_tau(value),
            Axis::TR => config.with_t_r(value),
        }
        .and_then(|c| run_experiment(&c, recipe))
        .map(|mut out| {
            for a in &mut out.artifacts {
                a.name = tagged_name(&a.name, axis, value);
            }
            out
        });
        SweepPoint { value, outcome }
    };
    Ok(grid_map(values, run))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn names_embed_the_value() {
        assert_eq!(tagged_name("pdet_all.csv", Axis::Tau, 0.25), "pdet_all_tau0.25.csv");
        assert_eq!(tagged_name("delta-pr_all.csv", Axis::TR, 6.0), "delta-pr_all_tr6.csv");
    }

    #[test]
    fn empty_and_negative_values_rejected() {
        let c = parse_config("L = 40\ndetector_index = 23\ninitial_index = 20\ntau = 0.5").unwrap();
        assert!(sweep(&c, Recipe::Pdet, Axis::Tau, &[]).is_err());
        assert!(sweep(&c, Recipe::Pdet, Axis::Tau, &[0.5, -1.0]).is_err());
    }

    #[test]
    fn invalid_value_is_a_point_failure() {
        let c = parse_config("L = 40\ndetector_index = 23\ninitial_index = 20\ntau = 0.5\nhorizon = 4\nt_r = 1.0")
            .unwrap();
        let points = sweep(&c, Recipe::Pdet, Axis::Tau, &[0.5, 0.3]).unwrap();
        assert!(points[0].outcome.is_ok());
        assert!(matches!(points[1].outcome, Err(CliError::Config(_))));
    }
}
