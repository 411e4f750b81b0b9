//! Run-configuration schema. Configs are strict JSON: unknown keys are
//! rejected everywhere so a typo in a physics parameter cannot silently
//! fall back to a default.

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::correlations::Transition;
use crate::params::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Steady,
    Spectrum,
    G2,
    Validate,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Steady => "steady",
            Mode::Spectrum => "spectrum",
            Mode::G2 => "g2",
            Mode::Validate => "validate",
        }
    }
}

/// Uniform grid of probe detunings (spectrum mode) or delays (g2 mode).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridSpec {
    fn validate(&self) -> Result<(), CliError> {
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(CliError::Config("grid bounds must be finite".to_string()));
        }
        if self.max <= self.min {
            return Err(CliError::Config(format!(
                "grid max {} must exceed min {}",
                self.max, self.min
            )));
        }
        if self.points < 2 {
            return Err(CliError::Config(format!(
                "grid needs at least 2 points, got {}",
                self.points
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.points - 1) as f64;
        (0..self.points).map(|k| self.min + step * k as f64).collect()
    }
}

/// One parameter varied over a list of values; produces one curve per value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub field: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionName {
    Probe,
    Pump,
}

impl TransitionName {
    pub fn to_transition(self) -> Transition {
        match self {
            TransitionName::Probe => Transition::Probe,
            TransitionName::Pump => Transition::Pump,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub params: SystemParams,
    /// Output file name, placed inside the directory given by `--output`.
    pub output: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    /// Emission line for g2 and validate modes; defaults to the probe line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<TransitionName>,
    /// Trajectory seed; validate mode only (flag `--seed` overrides).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Trajectory count; validate mode only (flag `--ntraj` overrides).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ntraj: Option<usize>,
}

impl RunConfig {
    /// Mode/field compatibility matrix. Presence of seed and ntraj for
    /// validate mode is checked later, after command-line flags merge in.
    pub fn validate(&self) -> Result<(), CliError> {
        self.params
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if self.output.is_empty() {
            return Err(CliError::Config("output file name is empty".to_string()));
        }

        let forbid = |present: bool, field: &str| {
            if present {
                Err(CliError::Config(format!(
                    "field `{field}` does not apply to {} mode",
                    self.mode.name()
                )))
            } else {
                Ok(())
            }
        };

        match self.mode {
            Mode::Steady => {
                forbid(self.grid.is_some(), "grid")?;
                forbid(self.sweep.is_some(), "sweep")?;
                forbid(self.transition.is_some(), "transition")?;
                forbid(self.seed.is_some(), "seed")?;
                forbid(self.ntraj.is_some(), "ntraj")?;
            }
            Mode::Spectrum => {
                forbid(self.transition.is_some(), "transition")?;
                forbid(self.seed.is_some(), "seed")?;
                forbid(self.ntraj.is_some(), "ntraj")?;
                self.require_grid()?;
            }
            Mode::G2 => {
                forbid(self.seed.is_some(), "seed")?;
                forbid(self.ntraj.is_some(), "ntraj")?;
                self.require_grid()?;
                if self.grid.map(|g| g.min < 0.0).unwrap_or(false) {
                    return Err(CliError::Config(
                        "g2 delay grid cannot start below zero".to_string(),
                    ));
                }
            }
            Mode::Validate => {
                forbid(self.grid.is_some(), "grid")?;
                forbid(self.sweep.is_some(), "sweep")?;
            }
        }

        if let Some(sweep) = &self.sweep {
            if !SystemParams::FIELD_NAMES.contains(&sweep.field.as_str()) {
                return Err(CliError::Config(format!(
                    "unknown sweep field `{}`",
                    sweep.field
                )));
            }
            if sweep.values.is_empty() {
                return Err(CliError::Config("sweep value list is empty".to_string()));
            }
            if sweep.values.iter().any(|v| !v.is_finite()) {
                return Err(CliError::Config("sweep values must be finite".to_string()));
            }
            if self.mode == Mode::Spectrum && sweep.field == "delta_p" {
                return Err(CliError::Config(
                    "spectrum mode already scans delta_p; sweep a different field".to_string(),
                ));
            }
        }
        Ok(())
    }

    fn require_grid(&self) -> Result<(), CliError> {
        match &self.grid {
            Some(grid) => grid.validate(),
            None => Err(CliError::Config(format!(
                "{} mode requires a grid",
                self.mode.name()
            ))),
        }
    }
}

/// Parses and validates a JSON run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let config: RunConfig =
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}
