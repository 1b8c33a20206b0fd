//! Command-line runner for the QKD protocol simulator.
//!
//! Exit status: 0 when every trial's verdict is clean, 2 when any trial
//! flagged an eavesdropper, 1 on errors.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use ghz_qkd::config::{ConfigOverrides, ConfigSource, OutputFormat, SimulationConfig};
use ghz_qkd::experiment::{run_experiment_with, Execution};
use ghz_qkd::stats::RunStats;

#[derive(Parser, Debug)]
#[command(version, about = "Monte-Carlo simulator for BB84/Eckert, MKS-QKD and MKC-QKD")]
struct Cli {
    /// bb84, mks or mkc
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    rounds: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Depolarizing probability per transported particle
    #[arg(long)]
    noise: Option<f64>,
    /// none | intercept[:<channels>] | guess-master:<uniform|ch2|ch3|oracle> | xboth
    #[arg(long)]
    eve: Option<String>,
    #[arg(long)]
    disclose_fraction: Option<f64>,
    #[arg(long)]
    qber_threshold: Option<f64>,
    /// TOML (or .json) config file; flags given explicitly take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Statistics file; printed to stdout when omitted
    #[arg(long)]
    output: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
    /// Also write every round as newline-delimited JSON next to the output
    #[arg(long)]
    dump_transcript: bool,
    /// Skip Bob's master-key addition (mks/mkc)
    #[arg(long)]
    withhold_master_key: bool,
    /// Record per-trial wall time (output is then not reproducible)
    #[arg(long)]
    timing: bool,
    /// Run trials on the current thread only
    #[arg(long)]
    sequential: bool,
}

impl Cli {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            protocol: self.protocol.clone(),
            rounds: self.rounds.map(Into::into),
            trials: self.trials.map(Into::into),
            seed: self.seed.map(Into::into),
            depolarizing_p: self.noise,
            eve: self.eve.clone(),
            disclose_fraction: self.disclose_fraction,
            qber_threshold: self.qber_threshold,
            apply_master_key: self.withhold_master_key.then_some(false),
            output_path: self.output.clone(),
            output_format: self.format.clone(),
            dump_transcript: self.dump_transcript.then_some(true),
            record_timing: self.timing.then_some(true),
        }
    }

    fn resolve(&self) -> anyhow::Result<SimulationConfig> {
        let base = match &self.config {
            Some(path) => ConfigOverrides::from_source(&ConfigSource::Path(path.clone()))?,
            None => ConfigOverrides::default(),
        };
        Ok(base.overlay(self.overrides()).resolve()?)
    }
}

fn summarize(config: &SimulationConfig, stats: &RunStats) {
    let a = &stats.aggregate;
    eprintln!(
        "{} | {} trials x {} rounds | eve {} | noise {}",
        config.protocol, config.trials, config.rounds, config.eve, config.depolarizing_p
    );
    let line = |name: &str, e: ghz_qkd::stats::Estimate| eprintln!("  {name:<20} {:.6} ± {:.6}", e.mean, e.stderr);
    line("kept_fraction", a.kept_fraction);
    line("final_key_length", a.final_key_length);
    line("key_match_rate", a.key_match_rate);
    line("disclosed_qber", a.disclosed_qber);
    line("detection_rate", a.detection_rate);
    line("eve_bit_information", a.eve_bit_information);
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let config = cli.resolve().context("invalid configuration")?;
    let execution = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let stats = run_experiment_with(&config, execution)?;
    if config.output_path.is_none() {
        match config.output_format {
            OutputFormat::Csv => print!("{}", stats.to_csv()),
            OutputFormat::Json => print!("{}", stats.to_json()?),
        }
    }
    summarize(&config, &stats);
    Ok(stats.any_detected())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
