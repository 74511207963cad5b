//! Declarative experiment description, read from a flat TOML file.
//!
//! ```toml
//! name = "test1"
//! source = "sinusoid"
//! seed = 1
//! input_noise = 0.1
//! alpha = 2.3
//! beta = 0.82
//! gamma = 0.01
//! filter_order = 1
//! ```
//!
//! Every key is optional; unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identifier::IdentifierConfig;
use crate::plant::{PlantModel, SimConfig, Signal, SpeedController};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Open-loop sinusoidal current reference.
    Sinusoid,
    /// Closed-loop speed step with a proportional speed controller.
    SpeedStep,
    /// Recorded `t,u,y` file given by `input_path`.
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    IdealCurrent,
    FullDq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSpec {
    pub name: String,
    pub source: Source,
    pub seed: u64,

    pub model: ModelKind,
    /// Current regulator gain for `full_dq` (V/A).
    pub current_gain: f64,
    pub sim_dt: f64,
    pub sample_dt: f64,
    pub duration: f64,

    /// Sinusoid amplitude (A) and frequency (Hz).
    pub amplitude: f64,
    pub frequency: f64,
    /// Uniform noise half-width as a fraction of the nominal input amplitude.
    pub input_noise: f64,
    /// Uniform noise half-width as a fraction of the peak clean speed.
    pub output_noise: f64,
    /// Load torque (N·m), removed at `load_release_time` if set.
    pub load_torque: f64,
    pub load_release_time: Option<f64>,

    /// Speed step target (rad/s), controller gain (A per rad/s) and current
    /// limit (A).
    pub speed_reference: f64,
    pub speed_gain: f64,
    pub current_limit: f64,

    pub input_path: Option<PathBuf>,

    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub filter_order: usize,
    pub n_sets: usize,
    pub u_init_limit: f64,
    pub y_init_limit: f64,
    pub integral_clamp: Option<f64>,
    pub integral_forgetting: f64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let id = IdentifierConfig::default();
        let sim = SimConfig::default();
        Self {
            name: "experiment".to_owned(),
            source: Source::Sinusoid,
            seed: 1,
            model: ModelKind::IdealCurrent,
            current_gain: 100.0,
            sim_dt: sim.dt,
            sample_dt: sim.sample_dt,
            duration: sim.duration,
            amplitude: 10.0,
            frequency: 0.5,
            input_noise: 0.0,
            output_noise: 0.0,
            load_torque: 0.0,
            load_release_time: None,
            speed_reference: 100.0,
            speed_gain: 0.5,
            current_limit: 10.0,
            input_path: None,
            alpha: id.alpha,
            beta: id.beta,
            gamma: id.gamma,
            filter_order: id.filter_order,
            n_sets: id.n_sets,
            u_init_limit: id.u_init_limit,
            y_init_limit: id.y_init_limit,
            integral_clamp: id.integral_clamp,
            integral_forgetting: id.integral_forgetting,
        }
    }
}

impl ExperimentSpec {
    /// Parses spec text and applies `key=value` overrides (values in TOML
    /// syntax; bare words are taken as strings).
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config(e.message().to_owned()))?;
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::config(format!("override {item:?} is not key=value")))?;
            table.insert(key.trim().to_owned(), parse_value(raw.trim()));
        }
        let spec: Self = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(e.message().to_owned()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a spec file. A relative `input_path` is resolved against the
    /// file's directory.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut spec = Self::parse(&text, overrides).map_err(|e| match e {
            Error::Config(message) => Error::Format {
                path: path.to_owned(),
                message,
            },
            other => other,
        })?;
        if let Some(input) = &spec.input_path {
            if input.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                spec.input_path = Some(base.join(input));
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::config(format!("invalid experiment name {:?}", self.name)));
        }
        if self.source == Source::Csv && self.input_path.is_none() {
            return Err(Error::config("source = \"csv\" needs input_path"));
        }
        for (key, v) in [("input_noise", self.input_noise), ("output_noise", self.output_noise)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{key} must be a non-negative number, got {v}")));
            }
        }
        if self.source != Source::Csv {
            if !(self.sample_dt > 0.0 && self.sample_dt.is_finite()) {
                return Err(Error::config(format!("sample_dt must be positive, got {}", self.sample_dt)));
            }
            if !(self.duration >= 0.0 && self.duration.is_finite()) {
                return Err(Error::config(format!("duration must be non-negative, got {}", self.duration)));
            }
        }
        self.identifier_config(self.sample_dt).validate()
    }

    /// Identifier settings with sampling period `dt`.
    pub fn identifier_config(&self, dt: f64) -> IdentifierConfig {
        IdentifierConfig {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            filter_order: self.filter_order,
            n_sets: self.n_sets,
            u_init_limit: self.u_init_limit,
            y_init_limit: self.y_init_limit,
            dt,
            integral_clamp: self.integral_clamp,
            integral_forgetting: self.integral_forgetting,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            dt: self.sim_dt,
            sample_dt: self.sample_dt,
            duration: self.duration,
            model: match self.model {
                ModelKind::IdealCurrent => PlantModel::IdealCurrent,
                ModelKind::FullDq => PlantModel::FullDq {
                    current_gain: self.current_gain,
                },
            },
            ..SimConfig::default()
        }
    }

    pub fn load_signal(&self) -> Signal {
        match self.load_release_time {
            Some(t) => Signal::Steps(vec![(0.0, self.load_torque), (t, 0.0)]),
            None => Signal::Constant(self.load_torque),
        }
    }

    pub fn speed_controller(&self) -> SpeedController {
        SpeedController {
            gain: self.speed_gain,
            limit: self.current_limit,
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_owned()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_keys() {
        let spec = ExperimentSpec::parse("name = \"a\"\nalpha = 1.4", &[]).unwrap();
        assert_eq!(spec.alpha, 1.4);
        assert_eq!(spec.beta, 0.82);
        assert_eq!(spec.source, Source::Sinusoid);
    }

    #[test]
    fn overrides_take_precedence() {
        let spec = ExperimentSpec::parse(
            "name = \"a\"\ngamma = 0.15",
            &["gamma=1".into(), "source=speed_step".into(), "seed = 7".into()],
        )
        .unwrap();
        assert_eq!(spec.gamma, 1.0);
        assert_eq!(spec.source, Source::SpeedStep);
        assert_eq!(spec.seed, 7);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentSpec::parse("name = \"a\"\nalhpa = 2", &[]).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(ExperimentSpec::parse("name = \"a\"\nfilter_order = 3", &[]).is_err());
        assert!(ExperimentSpec::parse("name = \"a\"\nsource = \"csv\"", &[]).is_err());
        assert!(ExperimentSpec::parse("name = \"a/b\"", &[]).is_err());
        assert!(ExperimentSpec::parse("name = \"a\"\ninput_noise = -0.1", &[]).is_err());
        assert!(ExperimentSpec::parse("name = \"a\"", &["nonsense".into()]).is_err());
    }
}
