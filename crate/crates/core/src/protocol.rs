//! Per-round state machines for the singlet baseline (BB84/Eckert), the
//! master-key secured protocol (MKS) and the master-key controlled protocol
//! (MKC), plus the multi-round driver that sifts, combines and checks keys.
//!
//! Transit layout per protocol:
//!
//! | protocol | source    | stays home | transits        |
//! |----------|-----------|------------|-----------------|
//! | BB84     | singlet   | 1 (Alice)  | 2 (Bob)         |
//! | MKS      | GHZ(3)    | 1 (Alice)  | 2, 3 (Bob)      |
//! | MKC      | GHZ(3)    | 3 (Master) | 1 (Alice), 2 (Bob) |
//!
//! Each round draws from its own per-stage streams, so a `(seed, trial)`
//! pair fixes the whole transcript.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_noise, eve_intervene, ChannelId, ChannelModel, EveRecord, EveStrategy};
use crate::error::{Error, Result};
use crate::key::{code_bit, disclose_and_check, master_bit, BitString, CodingRole, DetectionReport, KeyMaterial};
use crate::quantum::{joint_distribution, make_ghz, make_singlet, measure, Basis, Outcome, StateVector};
use crate::streams::{derive_stream, uniform_basis, unit_draw, RoundStreams, Stage, TRIAL_LEVEL_ROUND};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProtocolKind {
    Bb84Eckert,
    MksQkd,
    MkcQkd,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 3] = [ProtocolKind::Bb84Eckert, ProtocolKind::MksQkd, ProtocolKind::MkcQkd];

    /// Channels that leave the source holder each round.
    pub fn transported(self) -> &'static [ChannelId] {
        match self {
            ProtocolKind::Bb84Eckert => &[ChannelId(2)],
            ProtocolKind::MksQkd => &[ChannelId(2), ChannelId(3)],
            ProtocolKind::MkcQkd => &[ChannelId(1), ChannelId(2)],
        }
    }

    pub fn has_master_key(self) -> bool {
        self != ProtocolKind::Bb84Eckert
    }

    pub fn validate_eve(self, eve: &EveStrategy) -> Result<()> {
        eve.validate(self.transported(), self == ProtocolKind::MksQkd)
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProtocolKind::Bb84Eckert => "bb84",
            ProtocolKind::MksQkd => "mks",
            ProtocolKind::MkcQkd => "mkc",
        })
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bb84" => Ok(ProtocolKind::Bb84Eckert),
            "mks" => Ok(ProtocolKind::MksQkd),
            "mkc" => Ok(ProtocolKind::MkcQkd),
            other => Err(Error::domain(format!("unknown protocol `{other}` (expected bb84, mks or mkc)"))),
        }
    }
}

/// Everything that happened in one round.
///
/// Bits are present only on kept rounds. `master_outcome` is Bob's
/// master-channel outcome in MKS and the Master's outcome in MKC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round_index: u64,
    pub protocol: ProtocolKind,
    pub master_channel: Option<ChannelId>,
    pub alice_basis: Basis,
    pub bob_basis: Basis,
    pub alice_outcome: Outcome,
    pub bob_secure_outcome: Outcome,
    pub master_outcome: Option<Outcome>,
    pub eve: Option<EveRecord>,
    pub kept_after_sift: bool,
    pub alice_bit: Option<u8>,
    pub bob_raw_bit: Option<u8>,
    pub master_bit_value: Option<u8>,
    pub bob_final_bit: Option<u8>,
    /// Kept rounds with an active Eve: whether Bob's final bit is certain
    /// given the state Eve left behind and the public announcements.
    pub eve_determines_final_bit: Option<bool>,
}

/// Knobs for the classical post-processing of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub disclose_fraction: f64,
    pub qber_threshold: f64,
    /// Whether Bob adds the master key. Turning it off shows what the raw
    /// keys look like without it.
    pub apply_master_key: bool,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            disclose_fraction: 0.2,
            qber_threshold: 0.0,
            apply_master_key: true,
        }
    }
}

/// Inputs that fully determine one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSetup {
    pub kind: ProtocolKind,
    pub rounds: u64,
    pub channel: ChannelModel,
    pub eve: EveStrategy,
    pub pipeline: PipelineParams,
    pub seed: u64,
    pub trial: u64,
}

impl ProtocolSetup {
    pub fn ideal(kind: ProtocolKind, rounds: u64, seed: u64) -> Self {
        ProtocolSetup {
            kind,
            rounds,
            channel: ChannelModel::IDEAL,
            eve: EveStrategy::None,
            pipeline: PipelineParams::default(),
            seed,
            trial: 0,
        }
    }

    pub fn with_eve(mut self, eve: EveStrategy) -> Self {
        self.eve = eve;
        self
    }

    pub fn with_trial(mut self, trial: u64) -> Self {
        self.trial = trial;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub setup: ProtocolSetup,
    pub rounds: Vec<RoundRecord>,
    pub keys: KeyMaterial,
    pub detection: DetectionReport,
}

impl Transcript {
    /// Kept rounds, in key order.
    pub fn kept_rounds(&self) -> impl Iterator<Item = &RoundRecord> {
        self.rounds.iter().filter(|r| r.kept_after_sift)
    }
}

/// Whether every possible result of Bob's measurements on `state` gives the
/// same final bit.
fn final_bit_is_certain(
    state: &StateVector,
    bob_measurements: &[(usize, Basis)],
    final_bit: impl Fn(&[Outcome]) -> u8,
) -> Result<bool> {
    let mut seen = None;
    for (outcomes, p) in joint_distribution(state, bob_measurements)? {
        if p <= 1e-12 {
            continue;
        }
        let bit = final_bit(&outcomes);
        match seen {
            None => seen = Some(bit),
            Some(b) if b != bit => return Ok(false),
            Some(_) => {}
        }
    }
    Ok(true)
}

struct Bits {
    alice: u8,
    bob_raw: u8,
    master: Option<u8>,
}

fn finish_record(mut record: RoundRecord, bits: Option<Bits>) -> RoundRecord {
    if let Some(bits) = bits {
        record.alice_bit = Some(bits.alice);
        record.bob_raw_bit = Some(bits.bob_raw);
        record.master_bit_value = bits.master;
        record.bob_final_bit = Some(bits.bob_raw ^ bits.master.unwrap_or(0));
    }
    record
}

/// One singlet round: particle 2 transits to Bob, both parties pick a basis
/// uniformly, bits use the BB84 tables.
pub fn run_bb84_round(round_index: u64, channel: ChannelModel, eve: &EveStrategy, streams: &RoundStreams) -> Result<RoundRecord> {
    let kind = ProtocolKind::Bb84Eckert;
    let state = make_singlet();
    let state = apply_noise(&state, 2, channel, &mut streams.stream(Stage::NoiseA))?;
    let (in_transit, eve_record) = eve_intervene(&state, kind.transported(), eve, None, &mut streams.stream(Stage::Eve))?;

    let alice_basis = uniform_basis(&mut streams.stream(Stage::AliceBasis));
    let (alice_outcome, state) = measure(&in_transit, 1, alice_basis, unit_draw(&mut streams.stream(Stage::AliceMeasure)))?;
    let bob_basis = uniform_basis(&mut streams.stream(Stage::BobBasis));
    let (bob_outcome, _) = measure(&state, 2, bob_basis, unit_draw(&mut streams.stream(Stage::BobMeasure)))?;

    let kept = alice_basis == bob_basis;
    let mut record = RoundRecord {
        round_index,
        protocol: kind,
        master_channel: None,
        alice_basis,
        bob_basis,
        alice_outcome,
        bob_secure_outcome: bob_outcome,
        master_outcome: None,
        eve: eve_record,
        kept_after_sift: kept,
        alice_bit: None,
        bob_raw_bit: None,
        master_bit_value: None,
        bob_final_bit: None,
        eve_determines_final_bit: None,
    };
    if !kept {
        return Ok(record);
    }
    if record.eve.is_some() {
        let certain = final_bit_is_certain(&in_transit, &[(2, bob_basis)], |o| {
            code_bit(o[0], bob_basis, CodingRole::BobBb84).unwrap_or(0)
        })?;
        record.eve_determines_final_bit = Some(certain);
    }
    let bits = Bits {
        alice: code_bit(alice_outcome, alice_basis, CodingRole::AliceBb84)?,
        bob_raw: code_bit(bob_outcome, bob_basis, CodingRole::BobBb84)?,
        master: None,
    };
    Ok(finish_record(record, Some(bits)))
}

/// One MKS round: GHZ(3) from Alice, particles 2 and 3 transit to Bob, who
/// secretly picks one as master channel and X-measures it.
pub fn run_mks_round(round_index: u64, channel: ChannelModel, eve: &EveStrategy, streams: &RoundStreams) -> Result<RoundRecord> {
    let kind = ProtocolKind::MksQkd;
    let state = make_ghz(3)?;
    let state = apply_noise(&state, 2, channel, &mut streams.stream(Stage::NoiseA))?;
    let state = apply_noise(&state, 3, channel, &mut streams.stream(Stage::NoiseB))?;

    // Bob's role choice is independent of every other draw; Eve only sees
    // it through the oracle policy.
    let (master, secure) = if streams.stream(Stage::BobRoles).random_bool(0.5) {
        (ChannelId(2), ChannelId(3))
    } else {
        (ChannelId(3), ChannelId(2))
    };
    let (in_transit, eve_record) =
        eve_intervene(&state, kind.transported(), eve, Some(master), &mut streams.stream(Stage::Eve))?;

    let alice_basis = uniform_basis(&mut streams.stream(Stage::AliceBasis));
    let (alice_outcome, state) = measure(&in_transit, 1, alice_basis, unit_draw(&mut streams.stream(Stage::AliceMeasure)))?;
    let bob_basis = uniform_basis(&mut streams.stream(Stage::BobBasis));
    let mut bob_draws = streams.stream(Stage::BobMeasure);
    let (secure_outcome, state) = measure(&state, secure.particle(), bob_basis, unit_draw(&mut bob_draws))?;
    let (master_outcome, _) = measure(&state, master.particle(), Basis::X, unit_draw(&mut bob_draws))?;

    let kept = alice_basis == bob_basis;
    let mut record = RoundRecord {
        round_index,
        protocol: kind,
        master_channel: Some(master),
        alice_basis,
        bob_basis,
        alice_outcome,
        bob_secure_outcome: secure_outcome,
        master_outcome: Some(master_outcome),
        eve: eve_record,
        kept_after_sift: kept,
        alice_bit: None,
        bob_raw_bit: None,
        master_bit_value: None,
        bob_final_bit: None,
        eve_determines_final_bit: None,
    };
    if !kept {
        return Ok(record);
    }
    if record.eve.is_some() {
        let certain = final_bit_is_certain(
            &in_transit,
            &[(secure.particle(), bob_basis), (master.particle(), Basis::X)],
            |o| code_bit(o[0], bob_basis, CodingRole::BobStd).unwrap_or(0) ^ master_bit(o[1], bob_basis),
        )?;
        record.eve_determines_final_bit = Some(certain);
    }
    let bits = Bits {
        alice: code_bit(alice_outcome, alice_basis, CodingRole::AliceStd)?,
        bob_raw: code_bit(secure_outcome, bob_basis, CodingRole::BobStd)?,
        master: Some(master_bit(master_outcome, bob_basis)),
    };
    Ok(finish_record(record, Some(bits)))
}

/// One MKC round: GHZ(3) held by the Master, particle 1 transits to Alice and
/// particle 2 to Bob; the Master X-measures particle 3 and later publishes
/// the master bit of every kept round.
pub fn run_mkc_round(round_index: u64, channel: ChannelModel, eve: &EveStrategy, streams: &RoundStreams) -> Result<RoundRecord> {
    let kind = ProtocolKind::MkcQkd;
    let state = make_ghz(3)?;
    let state = apply_noise(&state, 1, channel, &mut streams.stream(Stage::NoiseA))?;
    let state = apply_noise(&state, 2, channel, &mut streams.stream(Stage::NoiseB))?;
    let (in_transit, eve_record) = eve_intervene(&state, kind.transported(), eve, None, &mut streams.stream(Stage::Eve))?;

    let alice_basis = uniform_basis(&mut streams.stream(Stage::AliceBasis));
    let (alice_outcome, state) = measure(&in_transit, 1, alice_basis, unit_draw(&mut streams.stream(Stage::AliceMeasure)))?;
    let (master_outcome, state) = measure(&state, 3, Basis::X, unit_draw(&mut streams.stream(Stage::MasterMeasure)))?;
    let bob_basis = uniform_basis(&mut streams.stream(Stage::BobBasis));
    let (bob_outcome, _) = measure(&state, 2, bob_basis, unit_draw(&mut streams.stream(Stage::BobMeasure)))?;

    let kept = alice_basis == bob_basis;
    let mut record = RoundRecord {
        round_index,
        protocol: kind,
        master_channel: Some(ChannelId(3)),
        alice_basis,
        bob_basis,
        alice_outcome,
        bob_secure_outcome: bob_outcome,
        master_outcome: Some(master_outcome),
        eve: eve_record,
        kept_after_sift: kept,
        alice_bit: None,
        bob_raw_bit: None,
        master_bit_value: None,
        bob_final_bit: None,
        eve_determines_final_bit: None,
    };
    if !kept {
        return Ok(record);
    }
    let master_value = master_bit(master_outcome, bob_basis);
    if record.eve.is_some() {
        // The master bit is broadcast, so only Bob's raw bit can be uncertain.
        let certain = match in_transit.conditioned(3, Basis::X, master_outcome) {
            Ok(given_master) => final_bit_is_certain(&given_master, &[(2, bob_basis)], |o| {
                code_bit(o[0], bob_basis, CodingRole::BobStd).unwrap_or(0) ^ master_value
            })?,
            Err(Error::UndefinedCondition { .. }) => false,
            Err(e) => return Err(e),
        };
        record.eve_determines_final_bit = Some(certain);
    }
    let bits = Bits {
        alice: code_bit(alice_outcome, alice_basis, CodingRole::AliceStd)?,
        bob_raw: code_bit(bob_outcome, bob_basis, CodingRole::BobStd)?,
        master: Some(master_value),
    };
    Ok(finish_record(record, Some(bits)))
}

pub fn run_round(kind: ProtocolKind, round_index: u64, channel: ChannelModel, eve: &EveStrategy, streams: &RoundStreams) -> Result<RoundRecord> {
    match kind {
        ProtocolKind::Bb84Eckert => run_bb84_round(round_index, channel, eve, streams),
        ProtocolKind::MksQkd => run_mks_round(round_index, channel, eve, streams),
        ProtocolKind::MkcQkd => run_mkc_round(round_index, channel, eve, streams),
    }
}

fn validate_setup(setup: &ProtocolSetup) -> Result<()> {
    if setup.rounds == 0 {
        return Err(Error::field("rounds", "must be at least 1"));
    }
    ChannelModel::new(setup.channel.depolarizing_p).map_err(|e| Error::field("depolarizing_p", e.to_string()))?;
    let p = &setup.pipeline;
    if !(p.disclose_fraction > 0.0 && p.disclose_fraction < 1.0) {
        return Err(Error::field("disclose_fraction", format!("{} is outside (0, 1)", p.disclose_fraction)));
    }
    if !(0.0..0.5).contains(&p.qber_threshold) {
        return Err(Error::field("qber_threshold", format!("{} is outside [0, 0.5)", p.qber_threshold)));
    }
    setup.kind.validate_eve(&setup.eve)
}

/// Runs every round of one trial, then sifts, combines and checks the keys.
pub fn run_protocol(setup: &ProtocolSetup) -> Result<Transcript> {
    validate_setup(setup)?;
    let rounds = (0..setup.rounds)
        .map(|r| {
            let streams = RoundStreams::new(setup.seed, setup.trial, r);
            run_round(setup.kind, r, setup.channel, &setup.eve, &streams)
        })
        .collect::<Result<Vec<_>>>()?;

    let kept: Vec<&RoundRecord> = rounds.iter().filter(|r| r.kept_after_sift).collect();
    let collect = |f: fn(&RoundRecord) -> Option<u8>| -> BitString { kept.iter().map(|r| f(r).unwrap_or(0)).collect() };
    let alice = collect(|r| r.alice_bit);
    let bob_raw = collect(|r| r.bob_raw_bit);
    let (master, post_xor) = if setup.kind.has_master_key() {
        let master = collect(|r| r.master_bit_value);
        let post = setup
            .pipeline
            .apply_master_key
            .then(|| collect(|r| r.bob_final_bit));
        (Some(master), post)
    } else {
        (None, None)
    };
    let keys = KeyMaterial::new(alice, bob_raw, master, post_xor)?;

    let detection = if keys.is_empty() {
        DetectionReport::empty()
    } else {
        let mut rng = derive_stream(setup.seed, setup.trial, TRIAL_LEVEL_ROUND, Stage::Disclosure);
        disclose_and_check(
            &keys.alice_bits,
            keys.bob_final(),
            setup.pipeline.disclose_fraction,
            setup.pipeline.qber_threshold,
            &mut rng,
        )?
    };

    Ok(Transcript {
        setup: setup.clone(),
        rounds,
        keys,
        detection,
    })
}
