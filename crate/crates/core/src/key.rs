//! Classical key post-processing: coding tables, sifting, master-key
//! combination, disclosure check and QBER.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{Basis, Outcome};

/// A string of bits, each stored as `0` or `1`.
///
/// Serializes as a string of `'0'`/`'1'` characters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::domain(format!("bit value {b} is not 0 or 1")));
        }
        Ok(BitString(bits))
    }

    pub fn zeros(len: usize) -> Self {
        BitString(vec![0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        self.0.iter().copied()
    }

    /// Bits at `positions`, in the given order.
    pub fn select(&self, positions: &[usize]) -> BitString {
        BitString(positions.iter().map(|&i| self.0[i]).collect())
    }

    pub fn hamming_distance(&self, other: &BitString) -> Result<usize> {
        check_same_len(self, other)?;
        Ok(self.iter().zip(other.iter()).filter(|(a, b)| a != b).count())
    }
}

impl FromIterator<u8> for BitString {
    /// Values other than 0 are stored as 1.
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        BitString(iter.into_iter().map(|b| u8::from(b != 0)).collect())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b == 0 { "0" } else { "1" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::domain(format!("'{other}' is not a bit"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(BitString)
    }
}

impl From<BitString> for String {
    fn from(b: BitString) -> String {
        b.to_string()
    }
}

impl TryFrom<String> for BitString {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

fn check_same_len(a: &BitString, b: &BitString) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::domain(format!(
            "bit strings differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Which outcome-to-bit table a party uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CodingRole {
    AliceStd,
    BobStd,
    AliceBb84,
    BobBb84,
    MasterChannel,
}

impl CodingRole {
    pub const ALL: [CodingRole; 5] = [
        CodingRole::AliceStd,
        CodingRole::BobStd,
        CodingRole::AliceBb84,
        CodingRole::BobBb84,
        CodingRole::MasterChannel,
    ];
}

/// Maps a measurement outcome to a key bit.
///
/// Both bases share one table: `Plus` (↑ or +) codes to 1 for every role
/// except `BobBb84`, which is inverted to undo singlet anti-correlation.
/// Master-channel bits come from [`master_bit`].
pub fn code_bit(outcome: Outcome, _basis: Basis, role: CodingRole) -> Result<u8> {
    let plus_is_one = match role {
        CodingRole::AliceStd | CodingRole::BobStd | CodingRole::AliceBb84 => true,
        CodingRole::BobBb84 => false,
        CodingRole::MasterChannel => {
            return Err(Error::domain("master-channel outcomes are coded by master_bit"))
        }
    };
    Ok(u8::from((outcome == Outcome::Plus) == plus_is_one))
}

/// Master-key bit from an X outcome on the master channel.
///
/// With an X secure basis, `+ → 0` and `− → 1`; with a Z secure basis the bit
/// is always 0.
pub fn master_bit(outcome: Outcome, secure_basis: Basis) -> u8 {
    match secure_basis {
        Basis::X => u8::from(outcome == Outcome::Minus),
        Basis::Z => 0,
    }
}

/// Ascending indices where the two basis sequences agree.
pub fn sift(alice_bases: &[Basis], bob_bases: &[Basis]) -> Result<Vec<usize>> {
    if alice_bases.len() != bob_bases.len() {
        return Err(Error::domain(format!(
            "basis lists differ in length ({} vs {})",
            alice_bases.len(),
            bob_bases.len()
        )));
    }
    Ok(alice_bases
        .iter()
        .zip(bob_bases)
        .enumerate()
        .filter_map(|(i, (a, b))| (a == b).then_some(i))
        .collect())
}

/// Bitwise addition modulo 2.
pub fn xor_combine(key: &BitString, master: &BitString) -> Result<BitString> {
    check_same_len(key, master)?;
    Ok(BitString(key.iter().zip(master.iter()).map(|(a, b)| a ^ b).collect()))
}

/// One-time-pad encryption; applying it twice with the same key is the identity.
pub fn vernam(message: &BitString, key: &BitString) -> Result<BitString> {
    xor_combine(message, key)
}

/// Fraction of positions where the two strings differ.
pub fn qber(a: &BitString, b: &BitString) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::domain("QBER of empty bit strings is undefined"));
    }
    Ok(a.hamming_distance(b)? as f64 / a.len() as f64)
}

/// Sifted (and, where applicable, master-combined) key material of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyMaterial {
    pub alice_bits: BitString,
    /// Bob's raw bits before any master-key addition.
    pub bob_bits: BitString,
    pub master_bits: Option<BitString>,
    pub post_xor_bob: Option<BitString>,
}

impl KeyMaterial {
    pub fn new(
        alice_bits: BitString,
        bob_bits: BitString,
        master_bits: Option<BitString>,
        post_xor_bob: Option<BitString>,
    ) -> Result<Self> {
        check_same_len(&alice_bits, &bob_bits)?;
        for other in master_bits.iter().chain(post_xor_bob.iter()) {
            check_same_len(&alice_bits, other)?;
        }
        Ok(KeyMaterial {
            alice_bits,
            bob_bits,
            master_bits,
            post_xor_bob,
        })
    }

    pub fn len(&self) -> usize {
        self.alice_bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice_bits.is_empty()
    }

    /// Bob's key as used for the disclosure check: the post-XOR key if the
    /// master key was applied, otherwise his raw key.
    pub fn bob_final(&self) -> &BitString {
        self.post_xor_bob.as_ref().unwrap_or(&self.bob_bits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Clean,
    EveSuspected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub disclosed_positions: Vec<usize>,
    pub mismatches: usize,
    pub disclosed_qber: f64,
    pub verdict: Verdict,
    pub remaining_key_alice: BitString,
    pub remaining_key_bob: BitString,
}

impl DetectionReport {
    /// Report for a run that produced no key; nothing is disclosed.
    pub fn empty() -> Self {
        DetectionReport {
            disclosed_positions: Vec::new(),
            mismatches: 0,
            disclosed_qber: 0.0,
            verdict: Verdict::Clean,
            remaining_key_alice: BitString::default(),
            remaining_key_bob: BitString::default(),
        }
    }
}

/// Number of positions disclosed out of `len`: `⌈fraction·len⌉`.
pub fn disclosed_count(len: usize, fraction: f64) -> usize {
    // Products like 0.1 * 30 land just above the integer.
    let raw = fraction * len as f64;
    let rounded = raw.round();
    let count = if (raw - rounded).abs() < 1e-9 { rounded } else { raw.ceil() };
    (count as usize).min(len)
}

/// Publicly compares a random subset of positions and discards them.
///
/// `⌈fraction·len⌉` distinct positions are drawn from `rng`; the verdict is
/// `EveSuspected` iff the disclosed QBER exceeds `qber_threshold`.
pub fn disclose_and_check<R: Rng + ?Sized>(
    alice: &BitString,
    bob: &BitString,
    fraction: f64,
    qber_threshold: f64,
    rng: &mut R,
) -> Result<DetectionReport> {
    check_same_len(alice, bob)?;
    if alice.is_empty() {
        return Err(Error::domain("cannot disclose from an empty key"));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::domain(format!("disclosure fraction {fraction} outside (0, 1)")));
    }
    if !(0.0..0.5).contains(&qber_threshold) {
        return Err(Error::domain(format!("QBER threshold {qber_threshold} outside [0, 0.5)")));
    }
    let len = alice.len();
    let k = disclosed_count(len, fraction);
    let mut positions = rand::seq::index::sample(rng, len, k).into_vec();
    positions.sort_unstable();

    let mismatches = positions.iter().filter(|&&i| alice.0[i] != bob.0[i]).count();
    let disclosed_qber = mismatches as f64 / k as f64;
    let mut disclosed = vec![false; len];
    positions.iter().for_each(|&i| disclosed[i] = true);
    let remaining: Vec<usize> = (0..len).filter(|&i| !disclosed[i]).collect();

    Ok(DetectionReport {
        verdict: if disclosed_qber > qber_threshold {
            Verdict::EveSuspected
        } else {
            Verdict::Clean
        },
        remaining_key_alice: alice.select(&remaining),
        remaining_key_bob: bob.select(&remaining),
        disclosed_positions: positions,
        mismatches,
        disclosed_qber,
    })
}
