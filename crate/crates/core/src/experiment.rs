//! Trial fan-out and output.
//!
//! Trials are independent: each derives its streams from `(seed, trial)`
//! and owns its records. They run on the rayon pool when the `parallel`
//! feature is on; results are collected in trial-index order, so parallel
//! and sequential execution write identical files.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::config::SimulationConfig;
use crate::error::{Error, Result};
use crate::protocol::{run_protocol, RoundRecord, Transcript};
use crate::stats::{write_stats, RunStats, TrialStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    #[default]
    Parallel,
}

pub struct TrialOutput {
    pub stats: TrialStats,
    pub transcript: Option<Transcript>,
}

pub struct ExperimentOutput {
    pub stats: RunStats,
    /// One per trial, in trial order; empty unless requested.
    pub transcripts: Vec<Transcript>,
}

pub fn run_trial(config: &SimulationConfig, trial: u64, keep_transcript: bool) -> Result<TrialOutput> {
    let start = Instant::now();
    let transcript = run_protocol(&config.setup_for_trial(trial))?;
    let wall = if config.record_timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };
    Ok(TrialOutput {
        stats: TrialStats::from_transcript(trial, &transcript, wall),
        transcript: keep_transcript.then_some(transcript),
    })
}

fn run_all(config: &SimulationConfig, execution: Execution, keep: bool) -> Result<Vec<TrialOutput>> {
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..config.trials)
                .into_par_iter()
                .map(|t| run_trial(config, t, keep))
                .collect()
        }
        _ => (0..config.trials).map(|t| run_trial(config, t, keep)).collect(),
    }
}

/// Runs every trial and aggregates, without touching the filesystem.
pub fn simulate(config: &SimulationConfig, execution: Execution, keep_transcripts: bool) -> Result<ExperimentOutput> {
    let outputs = run_all(config, execution, keep_transcripts)?;
    let mut stats = Vec::with_capacity(outputs.len());
    let mut transcripts = Vec::new();
    for out in outputs {
        stats.push(out.stats);
        transcripts.extend(out.transcript);
    }
    Ok(ExperimentOutput {
        stats: RunStats::from_trials(stats),
        transcripts,
    })
}

#[derive(Serialize)]
struct TranscriptLine<'a> {
    trial: u64,
    #[serde(flatten)]
    record: &'a RoundRecord,
}

/// Writes every round of every transcript as one JSON document per line.
pub fn write_transcripts(transcripts: &[Transcript], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for t in transcripts {
        for record in &t.rounds {
            let line = TranscriptLine {
                trial: t.setup.trial,
                record,
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Runs the experiment with the given execution mode and writes the
/// configured output files.
pub fn run_experiment_with(config: &SimulationConfig, execution: Execution) -> Result<RunStats> {
    let out = simulate(config, execution, config.dump_transcript)?;
    if let Some(path) = &config.output_path {
        write_stats(&out.stats, config.output_format, path)?;
    }
    if config.dump_transcript {
        if let Some(path) = config.transcript_path() {
            write_transcripts(&out.transcripts, &path)?;
        }
    }
    Ok(out.stats)
}

pub fn run_experiment(config: &SimulationConfig) -> Result<RunStats> {
    run_experiment_with(config, Execution::default())
}
