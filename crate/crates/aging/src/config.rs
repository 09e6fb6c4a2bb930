//! Scenario files: parsing with field paths, validation and canonical output.

use std::fmt;
use std::path::Path;

use aging_core::channelsim::{Constellation, SamplerKind};
use aging_core::optimizer::{enumerate_layouts, OptimizerConfig};
use aging_core::scenario::{DataNoise, Scenario};
use serde::{Deserialize, Serialize};

/// Unit of reported spectral efficiencies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeUnits {
    #[default]
    Nats,
    Bits,
}

impl SeUnits {
    /// Convert a value in nats.
    pub fn from_nats(self, v: f64) -> f64 {
        match self {
            SeUnits::Nats => v,
            SeUnits::Bits => v / std::f64::consts::LN_2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SeUnits::Nats => "nats",
            SeUnits::Bits => "bits",
        }
    }
}

/// Scalar parameters a sweep can vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Tagged Doppler (constant schedule).
    Fd1,
    /// Tagged Rician factor (constant schedule).
    Kf1,
    /// SNR in dB.
    Snr,
    /// Tagged pilot-to-data power ratio at a fixed budget.
    Rp,
    /// Interferer path loss in dB.
    Pl2,
    /// Interferer Doppler (constant schedule).
    Fd2,
    /// Interferer pilot-to-data power ratio at its fixed total.
    Rp2,
}

/// Default sweep of a scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// Everything a run needs besides the command-line arguments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub scenario: Scenario,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub se_units: SeUnits,
    #[serde(default)]
    pub sampler: SamplerKind,
    #[serde(default)]
    pub constellation: Constellation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    /// Free-form notes on unstated constants, echoed into reports.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assumptions: Vec<String>,
}

/// A configuration problem located by a JSON path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ValidationError {}

fn invalid(path: impl Into<String>, message: impl fmt::Display) -> ValidationError {
    ValidationError { path: path.into(), message: message.to_string() }
}

impl ScenarioConfig {
    /// Parse JSON, reporting the path of the first offending field.
    pub fn from_json(text: &str) -> Result<Self, ValidationError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ScenarioConfig =
            serde_path_to_error::deserialize(de).map_err(|e| invalid(e.path().to_string(), e.inner()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
        Ok(Self::from_json(&text)?)
    }

    /// Canonical pretty JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    /// Longest horizon the optimizer may visit.
    pub fn max_horizon(&self) -> usize {
        enumerate_layouts(&self.optimizer).iter().map(|l| l.horizon()).max().unwrap_or(2)
    }

    /// Structural checks with field paths. Schedules are only checked at the
    /// first slot; a pole later on disqualifies just the layouts reaching it.
    pub fn validate(&self) -> Result<(), ValidationError> {
        let s = &self.scenario;
        s.wave.validate().map_err(|e| invalid("scenario.wave", e))?;
        if s.users.is_empty() {
            return Err(invalid("scenario.users", "at least one user is required"));
        }
        let nonneg = |v: f64, path: String| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(path, format!("must be finite and non-negative, got {v}")))
            }
        };
        nonneg(s.pilot_noise, "scenario.pilot_noise".into())?;
        match s.data_noise {
            DataNoise::Variance(v) => nonneg(v, "scenario.data_noise.variance".into())?,
            DataNoise::SnrDb(v) if !v.is_finite() => return Err(invalid("scenario.data_noise.snr_db", "must be finite")),
            DataNoise::SnrDb(_) => {}
        }
        for (k, u) in s.users.iter().enumerate() {
            let at = |f: &str| format!("scenario.users[{k}].{f}");
            nonneg(u.pilot_power, at("pilot_power"))?;
            nonneg(u.data_power, at("data_power"))?;
            if let Some(v) = u.pilot_noise {
                nonneg(v, at("pilot_noise"))?;
            }
            u.stats.aoa.validate().map_err(|e| invalid(at("stats.aoa"), e))?;
            u.stats.aod.validate().map_err(|e| invalid(at("stats.aod"), e))?;
            if let Err(e) = u.stats.validate(1) {
                return Err(invalid(at("stats"), e));
            }
        }
        if let Some(p) = s.total_power {
            if !(p > 0.0 && p.is_finite()) {
                return Err(invalid("scenario.total_power", format!("must be positive, got {p}")));
            }
        }
        s.validate().map_err(|e| invalid("scenario", e))?;
        self.optimizer.validate().map_err(|e| invalid("optimizer", e))?;
        Ok(())
    }
}
