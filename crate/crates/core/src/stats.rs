//! Per-trial and aggregate run statistics, and their CSV/JSON output.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::OutputFormat;
use crate::error::{Error, Result};
use crate::key::Verdict;
use crate::protocol::Transcript;

pub const CSV_HEADER: &str =
    "trial,kept_fraction,final_key_length,key_match_rate,disclosed_qber,detected,eve_bit_information,wall_time_ms";

/// Rounds `x` to 12 significant digits.
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub trial: u64,
    pub kept_fraction: f64,
    pub final_key_length: u64,
    /// Agreement of the undisclosed key bits; 1 for an empty key.
    pub key_match_rate: f64,
    pub disclosed_qber: f64,
    pub detected: bool,
    /// Fraction of final-key bits Eve's intervention left certain.
    pub eve_bit_information: f64,
    pub wall_time_ms: f64,
    pub disclosed_bits: u64,
    pub disclosed_mismatches: u64,
}

impl TrialStats {
    pub fn from_transcript(trial: u64, t: &Transcript, wall_time_ms: f64) -> Self {
        let det = &t.detection;
        let final_len = det.remaining_key_alice.len();
        let key_match_rate = if final_len == 0 {
            1.0
        } else {
            let diff = det
                .remaining_key_alice
                .hamming_distance(&det.remaining_key_bob)
                .unwrap_or(final_len);
            1.0 - diff as f64 / final_len as f64
        };

        let mut disclosed = vec![false; t.keys.len()];
        det.disclosed_positions.iter().for_each(|&i| disclosed[i] = true);
        let determined = t
            .kept_rounds()
            .zip(&disclosed)
            .filter(|(r, &d)| !d && r.eve_determines_final_bit == Some(true))
            .count();
        let eve_bit_information = if final_len == 0 {
            0.0
        } else {
            determined as f64 / final_len as f64
        };

        TrialStats {
            trial,
            kept_fraction: t.keys.len() as f64 / t.rounds.len().max(1) as f64,
            final_key_length: final_len as u64,
            key_match_rate,
            disclosed_qber: det.disclosed_qber,
            detected: det.verdict == Verdict::EveSuspected,
            eve_bit_information,
            wall_time_ms,
            disclosed_bits: det.disclosed_positions.len() as u64,
            disclosed_mismatches: det.mismatches as u64,
        }
    }

    fn rounded(&self) -> Self {
        TrialStats {
            kept_fraction: round_sig12(self.kept_fraction),
            key_match_rate: round_sig12(self.key_match_rate),
            disclosed_qber: round_sig12(self.disclosed_qber),
            eve_bit_information: round_sig12(self.eve_bit_information),
            wall_time_ms: round_sig12(self.wall_time_ms),
            ..self.clone()
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(xs: impl IntoIterator<Item = f64>) -> Self {
        let xs: Vec<f64> = xs.into_iter().collect();
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Estimate { mean: 0.0, stderr: 0.0 };
        }
        let mean = xs.iter().sum::<f64>() / n;
        let stderr = if xs.len() > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Estimate { mean, stderr }
    }

    fn rounded(self) -> Self {
        Estimate {
            mean: round_sig12(self.mean),
            stderr: round_sig12(self.stderr),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub trials: u64,
    pub kept_fraction: Estimate,
    pub final_key_length: Estimate,
    pub key_match_rate: Estimate,
    pub disclosed_qber: Estimate,
    /// Fraction of trials whose verdict was `EveSuspected`.
    pub detection_rate: Estimate,
    pub eve_bit_information: Estimate,
    pub wall_time_ms: Estimate,
    /// Mismatches over disclosed bits, pooled across trials.
    pub pooled_disclosed_qber: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub trials: Vec<TrialStats>,
    pub aggregate: AggregateStats,
}

impl RunStats {
    /// Aggregates trials in trial-index order, whatever order they arrive in.
    pub fn from_trials(mut trials: Vec<TrialStats>) -> Self {
        trials.sort_by_key(|t| t.trial);
        let est = |f: fn(&TrialStats) -> f64| Estimate::from_samples(trials.iter().map(f));
        let disclosed: u64 = trials.iter().map(|t| t.disclosed_bits).sum();
        let mismatches: u64 = trials.iter().map(|t| t.disclosed_mismatches).sum();
        let aggregate = AggregateStats {
            trials: trials.len() as u64,
            kept_fraction: est(|t| t.kept_fraction),
            final_key_length: est(|t| t.final_key_length as f64),
            key_match_rate: est(|t| t.key_match_rate),
            disclosed_qber: est(|t| t.disclosed_qber),
            detection_rate: est(|t| f64::from(u8::from(t.detected))),
            eve_bit_information: est(|t| t.eve_bit_information),
            wall_time_ms: est(|t| t.wall_time_ms),
            pooled_disclosed_qber: if disclosed == 0 {
                0.0
            } else {
                mismatches as f64 / disclosed as f64
            },
        };
        RunStats { trials, aggregate }
    }

    pub fn any_detected(&self) -> bool {
        self.trials.iter().any(|t| t.detected)
    }

    /// The values as they appear once written: every real number rounded to
    /// 12 significant digits.
    pub fn rounded(&self) -> RunStats {
        let a = &self.aggregate;
        RunStats {
            trials: self.trials.iter().map(TrialStats::rounded).collect(),
            aggregate: AggregateStats {
                trials: a.trials,
                kept_fraction: a.kept_fraction.rounded(),
                final_key_length: a.final_key_length.rounded(),
                key_match_rate: a.key_match_rate.rounded(),
                disclosed_qber: a.disclosed_qber.rounded(),
                detection_rate: a.detection_rate.rounded(),
                eve_bit_information: a.eve_bit_information.rounded(),
                wall_time_ms: a.wall_time_ms.rounded(),
                pooled_disclosed_qber: round_sig12(a.pooled_disclosed_qber),
            },
        }
    }

    pub fn to_csv(&self) -> String {
        let r = self.rounded();
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        for t in &r.trials {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                t.trial,
                t.kept_fraction,
                t.final_key_length,
                t.key_match_rate,
                t.disclosed_qber,
                u8::from(t.detected),
                t.eve_bit_information,
                t.wall_time_ms
            );
        }
        let a = &r.aggregate;
        let _ = writeln!(
            out,
            "aggregate,{},{},{},{},{},{},{}",
            a.kept_fraction.mean,
            a.final_key_length.mean,
            a.key_match_rate.mean,
            a.disclosed_qber.mean,
            a.detection_rate.mean,
            a.eve_bit_information.mean,
            a.wall_time_ms.mean
        );
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.rounded())?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<RunStats> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn write_stats(stats: &RunStats, format: OutputFormat, path: &Path) -> Result<()> {
    let body = match format {
        OutputFormat::Csv => stats.to_csv(),
        OutputFormat::Json => stats.to_json()?,
    };
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}
