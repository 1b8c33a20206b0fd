//! Quantum transit: depolarizing noise and eavesdropper interventions.
//!
//! A channel is labelled by the number of the particle it carries, so
//! channel 2 carries particle 2. Per particle the order is fixed as
//! source, noise, Eve, receiver.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{measure, Basis, Outcome, Pauli, StateVector};
use crate::streams::{uniform_basis, unit_draw};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChannelId(pub u8);

impl ChannelId {
    pub fn particle(self) -> usize {
        usize::from(self.0)
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    /// Probability that a transported particle suffers a uniformly chosen
    /// X, Y or Z error.
    pub depolarizing_p: f64,
}

impl ChannelModel {
    pub const IDEAL: ChannelModel = ChannelModel { depolarizing_p: 0.0 };

    pub fn new(depolarizing_p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&depolarizing_p) {
            return Err(Error::domain(format!(
                "depolarizing probability {depolarizing_p} outside [0, 1]"
            )));
        }
        Ok(ChannelModel { depolarizing_p })
    }
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel::IDEAL
    }
}

/// How Eve picks the channel she believes is Bob's master channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GuessPolicy {
    UniformRandom,
    FixedChannel2,
    FixedChannel3,
    /// Always the true master channel. Only meaningful for MKS-QKD.
    OracleCorrect,
}

impl GuessPolicy {
    pub const ALL: [GuessPolicy; 4] = [
        GuessPolicy::UniformRandom,
        GuessPolicy::FixedChannel2,
        GuessPolicy::FixedChannel3,
        GuessPolicy::OracleCorrect,
    ];
}

/// Eavesdropper behaviour.
///
/// Written and parsed as the descriptors `none`, `intercept`,
/// `intercept:<ch>[,<ch>...]`, `guess-master:<uniform|ch2|ch3|oracle>` and
/// `xboth`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum EveStrategy {
    None,
    /// Measure each targeted channel in a random basis and forward the
    /// collapsed particle. `None` targets every transported channel.
    InterceptResendRandomBasis { targets: Option<Vec<ChannelId>> },
    XMeasureGuessedMaster(GuessPolicy),
    /// X-measure every transported channel, lowest channel first.
    XMeasureBoth,
}

impl EveStrategy {
    pub fn is_none(&self) -> bool {
        matches!(self, EveStrategy::None)
    }

    /// Checks that the strategy can act on the given transit layout.
    /// `has_master` is true only when a secret master channel exists (MKS).
    pub fn validate(&self, transported: &[ChannelId], has_master: bool) -> Result<()> {
        let require = |ch: ChannelId| {
            if transported.contains(&ch) {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "eve strategy `{self}` targets channel {ch}, which does not transit in this protocol"
                )))
            }
        };
        match self {
            EveStrategy::None | EveStrategy::XMeasureBoth => Ok(()),
            EveStrategy::InterceptResendRandomBasis { targets } => {
                let targets = targets.as_deref().unwrap_or(transported);
                if targets.is_empty() {
                    return Err(Error::Config("intercept strategy has no target channels".into()));
                }
                targets.iter().try_for_each(|&ch| require(ch))
            }
            EveStrategy::XMeasureGuessedMaster(policy) => match policy {
                GuessPolicy::UniformRandom => Ok(()),
                GuessPolicy::FixedChannel2 => require(ChannelId(2)),
                GuessPolicy::FixedChannel3 => require(ChannelId(3)),
                GuessPolicy::OracleCorrect if has_master => Ok(()),
                GuessPolicy::OracleCorrect => Err(Error::Config(
                    "guess-master:oracle requires a protocol with a secret master channel (mks)".into(),
                )),
            },
        }
    }
}

impl fmt::Display for EveStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EveStrategy::None => f.write_str("none"),
            EveStrategy::InterceptResendRandomBasis { targets: None } => f.write_str("intercept"),
            EveStrategy::InterceptResendRandomBasis { targets: Some(t) } => {
                let list: Vec<String> = t.iter().map(ToString::to_string).collect();
                write!(f, "intercept:{}", list.join(","))
            }
            EveStrategy::XMeasureGuessedMaster(p) => {
                let name = match p {
                    GuessPolicy::UniformRandom => "uniform",
                    GuessPolicy::FixedChannel2 => "ch2",
                    GuessPolicy::FixedChannel3 => "ch3",
                    GuessPolicy::OracleCorrect => "oracle",
                };
                write!(f, "guess-master:{name}")
            }
            EveStrategy::XMeasureBoth => f.write_str("xboth"),
        }
    }
}

impl FromStr for EveStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::domain(format!(
                "unknown eve strategy `{s}` (expected none, intercept[:channels], guess-master:<uniform|ch2|ch3|oracle> or xboth)"
            ))
        };
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        match (head, arg) {
            ("none", None) => Ok(EveStrategy::None),
            ("xboth", None) => Ok(EveStrategy::XMeasureBoth),
            ("intercept", None) => Ok(EveStrategy::InterceptResendRandomBasis { targets: None }),
            ("intercept", Some(list)) => {
                let mut targets = list
                    .split(',')
                    .map(|c| c.trim().parse::<u8>().map(ChannelId).map_err(|_| bad()))
                    .collect::<Result<Vec<_>>>()?;
                targets.sort_unstable();
                targets.dedup();
                Ok(EveStrategy::InterceptResendRandomBasis {
                    targets: Some(targets),
                })
            }
            ("guess-master", Some(policy)) => {
                let policy = match policy {
                    "uniform" => GuessPolicy::UniformRandom,
                    "ch2" => GuessPolicy::FixedChannel2,
                    "ch3" => GuessPolicy::FixedChannel3,
                    "oracle" => GuessPolicy::OracleCorrect,
                    _ => return Err(bad()),
                };
                Ok(EveStrategy::XMeasureGuessedMaster(policy))
            }
            _ => Err(bad()),
        }
    }
}

impl From<EveStrategy> for String {
    fn from(e: EveStrategy) -> String {
        e.to_string()
    }
}

impl TryFrom<String> for EveStrategy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EveAction {
    pub channel: ChannelId,
    pub basis: Basis,
    pub outcome: Outcome,
}

/// What Eve did and saw in one round.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EveRecord {
    pub actions: Vec<EveAction>,
}

impl EveRecord {
    pub fn touched(&self, channel: ChannelId) -> Option<&EveAction> {
        self.actions.iter().find(|a| a.channel == channel)
    }
}

/// Depolarizing noise on one particle.
///
/// With probability `1 - p` the state is returned unchanged; otherwise one of
/// X, Y, Z, chosen uniformly, is applied to `particle`.
pub fn apply_noise<R: Rng + ?Sized>(
    state: &StateVector,
    particle: usize,
    model: ChannelModel,
    rng: &mut R,
) -> Result<StateVector> {
    Ok(apply_noise_traced(state, particle, model, rng)?.0)
}

/// [`apply_noise`], also reporting which Pauli (if any) was applied.
pub fn apply_noise_traced<R: Rng + ?Sized>(
    state: &StateVector,
    particle: usize,
    model: ChannelModel,
    rng: &mut R,
) -> Result<(StateVector, Option<Pauli>)> {
    if particle == 0 || particle > state.num_particles() {
        return Err(Error::domain(format!("particle {particle} not in state")));
    }
    if unit_draw(rng) < model.depolarizing_p {
        let pauli = Pauli::ALL[rng.random_range(0..3)];
        Ok((state.apply_pauli(particle, pauli)?, Some(pauli)))
    } else {
        Ok((state.clone(), None))
    }
}

fn measure_channel<R: Rng + ?Sized>(
    state: StateVector,
    channel: ChannelId,
    basis: Basis,
    rng: &mut R,
    record: &mut EveRecord,
) -> Result<StateVector> {
    let (outcome, post) = measure(&state, channel.particle(), basis, unit_draw(rng))?;
    record.actions.push(EveAction {
        channel,
        basis,
        outcome,
    });
    Ok(post)
}

/// Applies Eve's strategy to the particles currently in transit.
///
/// `true_master` is Bob's secret master channel in MKS rounds and `None`
/// elsewhere. Returns the collapsed state and, unless the strategy is
/// `None`, Eve's record.
pub fn eve_intervene<R: Rng + ?Sized>(
    state: &StateVector,
    transported: &[ChannelId],
    strategy: &EveStrategy,
    true_master: Option<ChannelId>,
    rng: &mut R,
) -> Result<(StateVector, Option<EveRecord>)> {
    strategy.validate(transported, true_master.is_some())?;
    let mut record = EveRecord::default();
    let mut state = state.clone();
    match strategy {
        EveStrategy::None => return Ok((state, None)),
        EveStrategy::InterceptResendRandomBasis { targets } => {
            let mut targets = targets.clone().unwrap_or_else(|| transported.to_vec());
            targets.sort_unstable();
            for ch in targets {
                let basis = uniform_basis(rng);
                state = measure_channel(state, ch, basis, rng, &mut record)?;
            }
        }
        EveStrategy::XMeasureGuessedMaster(policy) => {
            let ch = match policy {
                GuessPolicy::UniformRandom => transported[rng.random_range(0..transported.len())],
                GuessPolicy::FixedChannel2 => ChannelId(2),
                GuessPolicy::FixedChannel3 => ChannelId(3),
                GuessPolicy::OracleCorrect => true_master.expect("validated above"),
            };
            state = measure_channel(state, ch, Basis::X, rng, &mut record)?;
        }
        EveStrategy::XMeasureBoth => {
            let mut chans = transported.to_vec();
            chans.sort_unstable();
            for ch in chans {
                state = measure_channel(state, ch, Basis::X, rng, &mut record)?;
            }
        }
    }
    Ok((state, Some(record)))
}
