//! Brute-force branch-enumeration oracle.
//!
//! Built from explicit 2x2 projectors, Kronecker products and unnormalized
//! state vectors; shares no code with the library's state-vector engine or
//! coding tables. The probability of a sequence of outcomes is the squared
//! norm of the successively projected (never renormalized) source state.

#![allow(dead_code)]

use num_complex::Complex64 as C;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum B {
    Z,
    X,
}

pub const BASES: [B; 2] = [B::Z, B::X];
pub const SIGNS: [i8; 2] = [1, -1];

/// Values frozen from the oracle below (each is re-derived in tests).
pub const BB84_INTERCEPT_QBER: f64 = 0.25;
pub const MKS_MISMATCH_UNIFORM: f64 = 0.125;
pub const MKS_MISMATCH_CH2: f64 = 0.125;
pub const MKS_MISMATCH_CH3: f64 = 0.125;
pub const MKS_MISMATCH_ORACLE: f64 = 0.0;
pub const MKS_WRONG_CHANNEL_Z_AGREEMENT: f64 = 0.5;
pub const MKC_WITHHELD_AGREEMENT_Z: f64 = 1.0;
pub const MKC_WITHHELD_AGREEMENT_X: f64 = 0.5;

fn c(x: f64) -> C {
    C::new(x, 0.0)
}

type Mat = Vec<Vec<C>>;

fn projector(basis: B, sign: i8) -> Mat {
    match (basis, sign) {
        (B::Z, 1) => vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(0.0)]],
        (B::Z, _) => vec![vec![c(0.0), c(0.0)], vec![c(0.0), c(1.0)]],
        (B::X, 1) => vec![vec![c(0.5), c(0.5)], vec![c(0.5), c(0.5)]],
        (B::X, _) => vec![vec![c(0.5), c(-0.5)], vec![c(-0.5), c(0.5)]],
    }
}

fn identity(d: usize) -> Mat {
    (0..d)
        .map(|i| (0..d).map(|j| c(if i == j { 1.0 } else { 0.0 })).collect())
        .collect()
}

fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

/// Single-particle operator on `particle` (1-based, particle 1 leftmost).
fn embed(op: &Mat, particle: usize, n: usize) -> Mat {
    let id = identity(2);
    let mut m = vec![vec![c(1.0)]];
    for k in 1..=n {
        m = kron(&m, if k == particle { op } else { &id });
    }
    m
}

fn apply(m: &Mat, v: &[C]) -> Vec<C> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn norm_sqr(v: &[C]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// Single-particle eigenket as a 2-vector.
pub fn ket(basis: B, sign: i8) -> Vec<C> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match (basis, sign) {
        (B::Z, 1) => vec![c(1.0), c(0.0)],
        (B::Z, _) => vec![c(0.0), c(1.0)],
        (B::X, 1) => vec![c(h), c(h)],
        (B::X, _) => vec![c(h), c(-h)],
    }
}

pub fn tensor(kets: &[Vec<C>]) -> Vec<C> {
    kets.iter().fold(vec![c(1.0)], |acc, k| {
        acc.iter().flat_map(|a| k.iter().map(move |b| a * b)).collect()
    })
}

pub fn ghz(n: usize) -> Vec<C> {
    let up = tensor(&vec![ket(B::Z, 1); n]);
    let down = tensor(&vec![ket(B::Z, -1); n]);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    up.iter().zip(&down).map(|(a, b)| (a + b) * h).collect()
}

pub fn singlet() -> Vec<C> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let ud = tensor(&[ket(B::Z, 1), ket(B::Z, -1)]);
    let du = tensor(&[ket(B::Z, -1), ket(B::Z, 1)]);
    ud.iter().zip(&du).map(|(a, b)| (a - b) * h).collect()
}

/// Projects `v` onto outcome `sign` of `basis` on `particle`.
pub fn project(v: &[C], particle: usize, basis: B, sign: i8, n: usize) -> Vec<C> {
    apply(&embed(&projector(basis, sign), particle, n), v)
}

/// Enumerates every outcome string of the measurement sequence, returning
/// `(signs, probability)` for each.
pub fn branches(v: &[C], n: usize, seq: &[(usize, B)]) -> Vec<(Vec<i8>, f64)> {
    let mut out = Vec::new();
    fn go(v: Vec<C>, n: usize, seq: &[(usize, B)], prefix: Vec<i8>, out: &mut Vec<(Vec<i8>, f64)>) {
        match seq.split_first() {
            None => out.push((prefix, norm_sqr(&v))),
            Some((&(p, b), rest)) => {
                for s in SIGNS {
                    let mut pre = prefix.clone();
                    pre.push(s);
                    go(project(&v, p, b, s, n), n, rest, pre, out);
                }
            }
        }
    }
    go(v.to_vec(), n, seq, Vec::new(), &mut out);
    out
}

// Coding tables, written out independently of the library.
fn std_bit(sign: i8) -> u8 {
    u8::from(sign == 1)
}
fn bob_bb84_bit(sign: i8) -> u8 {
    u8::from(sign == -1)
}
fn master_key_bit(sign: i8, secure: B) -> u8 {
    if secure == B::X && sign == -1 {
        1
    } else {
        0
    }
}

/// BB84 singlet with intercept-resend on particle 2: probability that a kept
/// bit disagrees.
pub fn bb84_intercept_qber() -> f64 {
    let src = singlet();
    let mut err = 0.0;
    for kept in BASES {
        for eve in BASES {
            let w = 0.5 * 0.5;
            for (s, p) in branches(&src, 2, &[(2, eve), (1, kept), (2, kept)]) {
                if std_bit(s[1]) != bob_bb84_bit(s[2]) {
                    err += w * p;
                }
            }
        }
    }
    err
}

/// Eve's channel choice distribution given the true master channel.
pub enum Guess {
    Uniform,
    Fixed(usize),
    Oracle,
}

/// MKS with Eve X-measuring one channel: probability a kept bit disagrees
/// after the master-key addition.
pub fn mks_guess_mismatch(guess: Guess) -> f64 {
    let src = ghz(3);
    let mut err = 0.0;
    for master in [2usize, 3] {
        let secure = 5 - master;
        let eve_choices: Vec<(usize, f64)> = match guess {
            Guess::Uniform => vec![(2, 0.5), (3, 0.5)],
            Guess::Fixed(ch) => vec![(ch, 1.0)],
            Guess::Oracle => vec![(master, 1.0)],
        };
        for (eve_ch, w_eve) in eve_choices {
            for kept in BASES {
                let w = 0.5 * w_eve * 0.5;
                let seq = [(eve_ch, B::X), (1, kept), (secure, kept), (master, B::X)];
                for (s, p) in branches(&src, 3, &seq) {
                    let alice = std_bit(s[1]);
                    let bob = std_bit(s[2]) ^ master_key_bit(s[3], kept);
                    if alice != bob {
                        err += w * p;
                    }
                }
            }
        }
    }
    err
}

/// MKS, Eve X-measures the secure channel, both parties measure Z on
/// particles 1 and 2: probability of agreement.
pub fn mks_wrong_channel_z_agreement() -> f64 {
    branches(&ghz(3), 3, &[(2, B::X), (1, B::Z), (2, B::Z)])
        .into_iter()
        .filter(|(s, _)| s[1] == s[2])
        .map(|(_, p)| p)
        .sum()
}

/// MKC without the master broadcast: agreement of raw bits on kept rounds
/// measured in `kept`.
pub fn mkc_withheld_agreement(kept: B) -> f64 {
    branches(&ghz(3), 3, &[(1, kept), (3, B::X), (2, kept)])
        .into_iter()
        .filter(|(s, _)| std_bit(s[0]) == std_bit(s[2]))
        .map(|(_, p)| p)
        .sum()
}

/// Ideal MKS: probability a kept bit disagrees after the master-key addition.
pub fn ideal_mismatch_mks() -> f64 {
    let src = ghz(3);
    let mut err = 0.0;
    for kept in BASES {
        for (s, p) in branches(&src, 3, &[(1, kept), (2, kept), (3, B::X)]) {
            if std_bit(s[0]) != std_bit(s[1]) ^ master_key_bit(s[2], kept) {
                err += 0.5 * p;
            }
        }
    }
    err
}

fn binomial_pmf(n: u64, k: u64) -> f64 {
    // log-space to stay finite for large n
    let ln_choose: f64 = (1..=k).map(|i| ((n - k + i) as f64).ln() - (i as f64).ln()).sum();
    (ln_choose - n as f64 * std::f64::consts::LN_2).exp()
}

/// Probability that a trial of `rounds` rounds is flagged, when kept rounds
/// are Binomial(rounds, 1/2), `⌈K/5⌉` of them are disclosed and each
/// disclosed bit mismatches independently with probability `mismatch`.
pub fn detection_probability(rounds: u64, mismatch: f64) -> f64 {
    (1..=rounds)
        .map(|k| {
            let disclosed = k.div_ceil(5) as i32;
            binomial_pmf(rounds, k) * (1.0 - (1.0 - mismatch).powi(disclosed))
        })
        .sum()
}
