//! Simulation configuration: file parsing, defaults and validation.
//!
//! Config documents are TOML, or JSON when the file name ends in `.json`.
//! Every key is optional at parse time so that a file can be layered under
//! command-line flags; [`ConfigOverrides::resolve`] then applies defaults and
//! checks ranges. Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, EveStrategy};
use crate::error::{Error, Result};
use crate::protocol::{PipelineParams, ProtocolKind, ProtocolSetup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::domain(format!("unknown output format `{other}` (expected csv or json)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub protocol: ProtocolKind,
    pub rounds: u64,
    pub trials: u64,
    pub seed: u64,
    pub depolarizing_p: f64,
    pub eve: EveStrategy,
    pub disclose_fraction: f64,
    pub qber_threshold: f64,
    /// `false` skips Bob's master-key addition (MKS/MKC only).
    pub apply_master_key: bool,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    pub dump_transcript: bool,
    /// Record per-trial wall time. Off by default because timings make
    /// otherwise identical output files differ.
    pub record_timing: bool,
}

impl SimulationConfig {
    /// Setup for one trial of this experiment.
    pub fn setup_for_trial(&self, trial: u64) -> ProtocolSetup {
        ProtocolSetup {
            kind: self.protocol,
            rounds: self.rounds,
            channel: ChannelModel {
                depolarizing_p: self.depolarizing_p,
            },
            eve: self.eve.clone(),
            pipeline: PipelineParams {
                disclose_fraction: self.disclose_fraction,
                qber_threshold: self.qber_threshold,
                apply_master_key: self.apply_master_key,
            },
            seed: self.seed,
            trial,
        }
    }

    /// Where the newline-delimited transcript goes, next to the stats file.
    pub fn transcript_path(&self) -> Option<PathBuf> {
        self.output_path.as_ref().map(|p| p.with_extension("transcript.jsonl"))
    }
}

/// A 64-bit unsigned value that may be written as an integer or, for values
/// beyond TOML's signed range, as a decimal string.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum UnsignedValue {
    Unsigned(u64),
    Signed(i64),
    Text(String),
}

impl UnsignedValue {
    fn get(&self, field: &str) -> Result<u64> {
        match self {
            UnsignedValue::Unsigned(v) => Ok(*v),
            UnsignedValue::Signed(v) => Err(Error::field(field, format!("{v} is negative"))),
            UnsignedValue::Text(s) => s
                .trim()
                .parse()
                .map_err(|_| Error::field(field, format!("`{s}` is not an unsigned 64-bit integer"))),
        }
    }
}

impl From<u64> for UnsignedValue {
    fn from(v: u64) -> Self {
        UnsignedValue::Unsigned(v)
    }
}

/// A partially specified configuration.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub protocol: Option<String>,
    pub rounds: Option<UnsignedValue>,
    pub trials: Option<UnsignedValue>,
    pub seed: Option<UnsignedValue>,
    pub depolarizing_p: Option<f64>,
    pub eve: Option<String>,
    pub disclose_fraction: Option<f64>,
    pub qber_threshold: Option<f64>,
    pub apply_master_key: Option<bool>,
    pub output_path: Option<PathBuf>,
    pub output_format: Option<String>,
    pub dump_transcript: Option<bool>,
    pub record_timing: Option<bool>,
}

/// Where a config document comes from.
#[derive(Debug, Clone)]
pub enum ConfigSource {
    Path(PathBuf),
    /// TOML text.
    Inline(String),
}

impl ConfigOverrides {
    pub fn parse_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            Self::parse_json(&text)
        } else {
            Self::parse_toml(&text)
        };
        parsed.map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_source(source: &ConfigSource) -> Result<Self> {
        match source {
            ConfigSource::Path(p) => Self::from_path(p),
            ConfigSource::Inline(text) => Self::parse_toml(text),
        }
    }

    /// Values set in `top` replace those in `self`.
    pub fn overlay(self, top: ConfigOverrides) -> ConfigOverrides {
        ConfigOverrides {
            protocol: top.protocol.or(self.protocol),
            rounds: top.rounds.or(self.rounds),
            trials: top.trials.or(self.trials),
            seed: top.seed.or(self.seed),
            depolarizing_p: top.depolarizing_p.or(self.depolarizing_p),
            eve: top.eve.or(self.eve),
            disclose_fraction: top.disclose_fraction.or(self.disclose_fraction),
            qber_threshold: top.qber_threshold.or(self.qber_threshold),
            apply_master_key: top.apply_master_key.or(self.apply_master_key),
            output_path: top.output_path.or(self.output_path),
            output_format: top.output_format.or(self.output_format),
            dump_transcript: top.dump_transcript.or(self.dump_transcript),
            record_timing: top.record_timing.or(self.record_timing),
        }
    }

    /// Applies defaults and validates every field.
    pub fn resolve(self) -> Result<SimulationConfig> {
        fn required<T>(v: Option<T>, field: &str) -> Result<T> {
            v.ok_or_else(|| Error::field(field, "is required"))
        }
        fn at_least_one(v: u64, field: &str) -> Result<u64> {
            if v == 0 {
                Err(Error::field(field, "must be at least 1"))
            } else {
                Ok(v)
            }
        }

        let protocol: ProtocolKind = required(self.protocol, "protocol")?
            .parse()
            .map_err(|e: Error| Error::field("protocol", strip_domain(e)))?;
        let rounds = at_least_one(required(self.rounds, "rounds")?.get("rounds")?, "rounds")?;
        let trials = at_least_one(self.trials.map_or(Ok(1), |t| t.get("trials"))?, "trials")?;
        let seed = required(self.seed, "seed")?.get("seed")?;

        let depolarizing_p = self.depolarizing_p.unwrap_or(0.0);
        if !(0.0..=1.0).contains(&depolarizing_p) {
            return Err(Error::field("depolarizing_p", format!("{depolarizing_p} is outside [0, 1]")));
        }
        let defaults = PipelineParams::default();
        let disclose_fraction = self.disclose_fraction.unwrap_or(defaults.disclose_fraction);
        if !(disclose_fraction > 0.0 && disclose_fraction < 1.0) {
            return Err(Error::field("disclose_fraction", format!("{disclose_fraction} is outside (0, 1)")));
        }
        let qber_threshold = self.qber_threshold.unwrap_or(defaults.qber_threshold);
        if !(0.0..0.5).contains(&qber_threshold) {
            return Err(Error::field("qber_threshold", format!("{qber_threshold} is outside [0, 0.5)")));
        }

        let eve: EveStrategy = match self.eve {
            Some(s) => s.parse().map_err(|e: Error| Error::field("eve", strip_domain(e)))?,
            None => EveStrategy::None,
        };
        protocol.validate_eve(&eve).map_err(|e| Error::field("eve", strip_domain(e)))?;

        let output_format = match self.output_format {
            Some(s) => s.parse().map_err(|e: Error| Error::field("output_format", strip_domain(e)))?,
            None => OutputFormat::default(),
        };
        let dump_transcript = self.dump_transcript.unwrap_or(false);
        if dump_transcript && self.output_path.is_none() {
            return Err(Error::field("dump_transcript", "requires output_path"));
        }

        Ok(SimulationConfig {
            protocol,
            rounds,
            trials,
            seed,
            depolarizing_p,
            eve,
            disclose_fraction,
            qber_threshold,
            apply_master_key: self.apply_master_key.unwrap_or(true),
            output_path: self.output_path,
            output_format,
            dump_transcript,
            record_timing: self.record_timing.unwrap_or(false),
        })
    }
}

fn strip_domain(e: Error) -> String {
    match e {
        Error::Domain(msg) | Error::Config(msg) => msg,
        other => other.to_string(),
    }
}

/// Parses and validates a complete config document.
pub fn load_config(source: &ConfigSource) -> Result<SimulationConfig> {
    ConfigOverrides::from_source(source)?.resolve()
}
