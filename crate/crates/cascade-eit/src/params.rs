//! System parameters for the driven three-level cascade |1> -- |2> -- |3>.
//!
//! The probe couples the lower rung |1>-|2> (Rabi frequency `omega_p`,
//! detuning `delta_p`), the control field the upper rung |2>-|3> (`omega_c`,
//! `delta_c`). Spontaneous decay runs down the ladder at full rates 2*gamma21
//! (|2> -> |1>) and 2*gamma32 (|3> -> |2>); incoherent pumping runs up from
//! the ground level at 2*lambda12 (|1> -> |2>) and 2*lambda13 (|1> -> |3>).
//! All fields store the half-rate symbols; the factors of two live in the
//! generator. Everything is expressed in units of gamma21 (set gamma21 = 1
//! for the dimensionless form used throughout the tests and figure recipes).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rates, Rabi frequencies, and detunings, all in units of gamma21.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct SystemParams {
    /// Half decay rate of |2> -> |1> (the unit of time is 1/gamma21).
    pub gamma21: f64,
    /// Half decay rate of |3> -> |2>.
    pub gamma32: f64,
    /// Half incoherent pump rate |1> -> |2>.
    pub lambda12: f64,
    /// Half incoherent pump rate |1> -> |3>.
    pub lambda13: f64,
    /// Probe Rabi frequency (|1>-|2> transition), real.
    pub omega_p: f64,
    /// Control Rabi frequency (|2>-|3> transition), real.
    pub omega_c: f64,
    /// Probe detuning omega21 - omega_p.
    pub delta_p: f64,
    /// Control detuning omega32 - omega_c.
    pub delta_c: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            gamma21: 1.0,
            gamma32: 0.0,
            lambda12: 0.0,
            lambda13: 0.0,
            omega_p: 0.0,
            omega_c: 0.0,
            delta_p: 0.0,
            delta_c: 0.0,
        }
    }
}

impl SystemParams {
    /// Checks the physical constraints: gamma21 > 0, the other rates and the
    /// Rabi frequencies nonnegative, everything finite.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("gamma21", self.gamma21),
            ("gamma32", self.gamma32),
            ("lambda12", self.lambda12),
            ("lambda13", self.lambda13),
            ("omega_p", self.omega_p),
            ("omega_c", self.omega_c),
            ("delta_p", self.delta_p),
            ("delta_c", self.delta_c),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
        }
        if self.gamma21 <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "gamma21 must be positive, got {}",
                self.gamma21
            )));
        }
        for (name, value) in [
            ("gamma32", self.gamma32),
            ("lambda12", self.lambda12),
            ("lambda13", self.lambda13),
            ("omega_p", self.omega_p),
            ("omega_c", self.omega_c),
        ] {
            if value < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{name} must be nonnegative, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// Returns a copy with the probe detuning replaced (used by sweeps).
    pub fn with_delta_p(&self, delta_p: f64) -> Self {
        SystemParams { delta_p, ..*self }
    }

    /// Returns a copy with the named field replaced. Field names match the
    /// struct fields (`gamma21`, ..., `delta_c`). Unknown names are errors.
    pub fn with_field(&self, name: &str, value: f64) -> Result<Self> {
        let mut p = *self;
        match name {
            "gamma21" => p.gamma21 = value,
            "gamma32" => p.gamma32 = value,
            "lambda12" => p.lambda12 = value,
            "lambda13" => p.lambda13 = value,
            "omega_p" => p.omega_p = value,
            "omega_c" => p.omega_c = value,
            "delta_p" => p.delta_p = value,
            "delta_c" => p.delta_c = value,
            _ => {
                return Err(Error::InvalidParams(format!(
                    "unknown parameter name: {name}"
                )))
            }
        }
        p.validate()?;
        Ok(p)
    }

    /// All sweepable field names, in declaration order.
    pub const FIELD_NAMES: [&'static str; 8] = [
        "gamma21", "gamma32", "lambda12", "lambda13", "omega_p", "omega_c", "delta_p", "delta_c",
    ];
}

/// Deserialization mirror with per-field defaults (gamma21 defaults to 1, the
/// rest to 0) so configs may omit fields they do not use. Unknown keys are
/// rejected to catch typos in physics parameters.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    #[serde(default = "one")]
    gamma21: f64,
    #[serde(default)]
    gamma32: f64,
    #[serde(default)]
    lambda12: f64,
    #[serde(default)]
    lambda13: f64,
    #[serde(default)]
    omega_p: f64,
    #[serde(default)]
    omega_c: f64,
    #[serde(default)]
    delta_p: f64,
    #[serde(default)]
    delta_c: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<RawParams> for SystemParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        let params = SystemParams {
            gamma21: raw.gamma21,
            gamma32: raw.gamma32,
            lambda12: raw.lambda12,
            lambda13: raw.lambda13,
            omega_p: raw.omega_p,
            omega_c: raw.omega_c,
            delta_p: raw.delta_p,
            delta_c: raw.delta_c,
        };
        params.validate()?;
        Ok(params)
    }
}
