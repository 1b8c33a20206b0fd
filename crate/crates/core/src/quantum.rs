//! Exact state-vector engine for up to six spin-1/2 particles.
//!
//! Particles are numbered from 1. Particle 1 is the most significant bit of a
//! basis-state label, and bit value 0 is spin up along z (`|↑⟩`), 1 is spin
//! down (`|↓⟩`). The x eigenstates are `|±⟩ = (|↑⟩ ± |↓⟩)/√2` with no extra
//! phase.
//!
//! Everything here is a pure function of its inputs. Measurement takes the
//! random draw as an argument so the engine itself owns no randomness.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_PARTICLES: usize = 6;

/// Tolerance on state and density-matrix invariants.
pub const STATE_TOLERANCE: f64 = 1e-9;

/// Conditioning on an outcome with probability at or below this is undefined.
const ZERO_PROBABILITY: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub const ALL: [Basis; 2] = [Basis::Z, Basis::X];
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Z => f.write_str("Z"),
            Basis::X => f.write_str("X"),
        }
    }
}

/// Eigenvalue of a single-particle spin measurement.
///
/// In Z, `Plus` is `|↑⟩` and `Minus` is `|↓⟩`; in X they are `|+⟩` and `|−⟩`.
/// Serialized as the integers `1` and `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn sign(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn value(self) -> f64 {
        f64::from(self.sign())
    }

    pub fn flipped(self) -> Outcome {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

impl From<Outcome> for i8 {
    fn from(o: Outcome) -> i8 {
        o.sign()
    }
}

impl TryFrom<i8> for Outcome {
    type Error = String;

    fn try_from(v: i8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            other => Err(format!("outcome must be 1 or -1, got {other}")),
        }
    }
}

/// Single-particle Pauli operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];
}

impl From<Basis> for Pauli {
    fn from(b: Basis) -> Pauli {
        match b {
            Basis::Z => Pauli::Z,
            Basis::X => Pauli::X,
        }
    }
}

/// Pure state of `num_particles` spin-1/2 particles, stored densely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    num_particles: usize,
    amplitudes: Vec<Complex64>,
}

fn check_particle_count(n: usize) -> Result<()> {
    if (1..=MAX_PARTICLES).contains(&n) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "particle count {n} outside [1, {MAX_PARTICLES}]"
        )))
    }
}

impl StateVector {
    /// Builds a state from raw amplitudes, checking length and normalization.
    pub fn new(num_particles: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_particle_count(num_particles)?;
        if amplitudes.len() != 1 << num_particles {
            return Err(Error::domain(format!(
                "{} amplitudes given for {num_particles} particles (need {})",
                amplitudes.len(),
                1usize << num_particles
            )));
        }
        let state = StateVector {
            num_particles,
            amplitudes,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > STATE_TOLERANCE {
            return Err(Error::domain(format!("state norm² is {norm}, expected 1")));
        }
        Ok(state)
    }

    /// Tensor product of single-particle eigenstates, e.g. `|↑⟩|+⟩|↓⟩`.
    pub fn product(kets: &[(Basis, Outcome)]) -> Result<Self> {
        check_particle_count(kets.len())?;
        let mut amps = vec![Complex64::new(1.0, 0.0)];
        for &(basis, outcome) in kets {
            let single = single_eigenstate(basis, outcome);
            amps = amps
                .iter()
                .flat_map(|a| single.iter().map(move |s| a * s))
                .collect();
        }
        Ok(StateVector {
            num_particles: kets.len(),
            amplitudes: amps,
        })
    }

    pub fn num_particles(&self) -> usize {
        self.num_particles
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn mask(&self, particle: usize) -> Result<usize> {
        if particle == 0 || particle > self.num_particles {
            return Err(Error::domain(format!(
                "particle {particle} outside [1, {}]",
                self.num_particles
            )));
        }
        Ok(1 << (self.num_particles - particle))
    }

    /// Unnormalized projection onto one eigenspace, with its probability.
    fn project_raw(&self, particle: usize, basis: Basis, outcome: Outcome) -> Result<(f64, Vec<Complex64>)> {
        let mask = self.mask(particle)?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        for lo in (0..self.dim()).filter(|i| i & mask == 0) {
            let hi = lo | mask;
            let (a0, a1) = (self.amplitudes[lo], self.amplitudes[hi]);
            match (basis, outcome) {
                (Basis::Z, Outcome::Plus) => out[lo] = a0,
                (Basis::Z, Outcome::Minus) => out[hi] = a1,
                (Basis::X, Outcome::Plus) => {
                    let s = (a0 + a1) * 0.5;
                    out[lo] = s;
                    out[hi] = s;
                }
                (Basis::X, Outcome::Minus) => {
                    let d = (a0 - a1) * 0.5;
                    out[lo] = d;
                    out[hi] = -d;
                }
            }
        }
        let p = out.iter().map(|a| a.norm_sqr()).sum();
        Ok((p, out))
    }

    /// Born-rule probability of `outcome` when measuring `particle` in `basis`.
    pub fn probability(&self, particle: usize, basis: Basis, outcome: Outcome) -> Result<f64> {
        Ok(self.project_raw(particle, basis, outcome)?.0)
    }

    /// Post-measurement state given `outcome`, renormalized.
    pub fn conditioned(&self, particle: usize, basis: Basis, outcome: Outcome) -> Result<StateVector> {
        let (p, amps) = self.project_raw(particle, basis, outcome)?;
        if p <= ZERO_PROBABILITY {
            return Err(Error::UndefinedCondition {
                particle,
                basis,
                outcome: outcome.sign(),
            });
        }
        Ok(self.renormalized(amps, p))
    }

    fn renormalized(&self, mut amps: Vec<Complex64>, norm_sqr: f64) -> StateVector {
        let scale = norm_sqr.sqrt().recip();
        amps.iter_mut().for_each(|a| *a *= scale);
        StateVector {
            num_particles: self.num_particles,
            amplitudes: amps,
        }
    }

    pub fn apply_pauli(&self, particle: usize, pauli: Pauli) -> Result<StateVector> {
        let mask = self.mask(particle)?;
        let mut out = self.amplitudes.clone();
        let i = Complex64::new(0.0, 1.0);
        for lo in (0..self.dim()).filter(|k| k & mask == 0) {
            let hi = lo | mask;
            let (a0, a1) = (self.amplitudes[lo], self.amplitudes[hi]);
            let (b0, b1) = match pauli {
                Pauli::X => (a1, a0),
                Pauli::Y => (-i * a1, i * a0),
                Pauli::Z => (a0, -a1),
            };
            out[lo] = b0;
            out[hi] = b1;
        }
        Ok(StateVector {
            num_particles: self.num_particles,
            amplitudes: out,
        })
    }

    /// Amplitudes re-expressed with particle `k` in `bases[k-1]`.
    ///
    /// Entry `j` is `⟨b_1 … b_n|ψ⟩` where bit value 0 in `j` names the
    /// `Plus` eigenstate of that particle's basis.
    pub fn amplitudes_in(&self, bases: &[Basis]) -> Result<Vec<Complex64>> {
        if bases.len() != self.num_particles {
            return Err(Error::domain("one basis per particle required"));
        }
        let mut amps = self.amplitudes.clone();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (k, basis) in bases.iter().enumerate() {
            if *basis == Basis::Z {
                continue;
            }
            let mask = self.mask(k + 1)?;
            for lo in (0..self.dim()).filter(|i| i & mask == 0) {
                let hi = lo | mask;
                let (a0, a1) = (amps[lo], amps[hi]);
                amps[lo] = (a0 + a1) * h;
                amps[hi] = (a0 - a1) * h;
            }
        }
        Ok(amps)
    }
}

fn single_eigenstate(basis: Basis, outcome: Outcome) -> [Complex64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64| Complex64::new(re, 0.0);
    match (basis, outcome) {
        (Basis::Z, Outcome::Plus) => [c(1.0), c(0.0)],
        (Basis::Z, Outcome::Minus) => [c(0.0), c(1.0)],
        (Basis::X, Outcome::Plus) => [c(h), c(h)],
        (Basis::X, Outcome::Minus) => [c(h), c(-h)],
    }
}

/// `(|↑…↑⟩ + |↓…↓⟩)/√2` on `n` particles, `2 ≤ n ≤ 6`.
pub fn make_ghz(n: usize) -> Result<StateVector> {
    if !(2..=MAX_PARTICLES).contains(&n) {
        return Err(Error::domain(format!(
            "GHZ size {n} outside [2, {MAX_PARTICLES}]"
        )));
    }
    let dim = 1usize << n;
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    amps[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[dim - 1] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Ok(StateVector {
        num_particles: n,
        amplitudes: amps,
    })
}

/// `(|↑↓⟩ − |↓↑⟩)/√2`.
pub fn make_singlet() -> StateVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    StateVector {
        num_particles: 2,
        amplitudes: vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(h, 0.0),
            Complex64::new(-h, 0.0),
            Complex64::new(0.0, 0.0),
        ],
    }
}

/// Projective measurement of one particle.
///
/// Returns `Plus` iff `draw < p₊`, together with the collapsed, renormalized
/// state. A zero-probability branch is never selected.
pub fn measure(state: &StateVector, particle: usize, basis: Basis, draw: f64) -> Result<(Outcome, StateVector)> {
    if !(0.0..1.0).contains(&draw) {
        return Err(Error::domain(format!("random draw {draw} outside [0, 1)")));
    }
    let (p_plus, plus) = state.project_raw(particle, basis, Outcome::Plus)?;
    let (p_minus, minus) = state.project_raw(particle, basis, Outcome::Minus)?;
    // p₊ + p₋ can differ from 1 by rounding; never land on an empty branch.
    if (draw < p_plus && p_plus > ZERO_PROBABILITY) || p_minus <= ZERO_PROBABILITY {
        Ok((Outcome::Plus, state.renormalized(plus, p_plus)))
    } else {
        Ok((Outcome::Minus, state.renormalized(minus, p_minus)))
    }
}

fn check_distinct(particles: impl IntoIterator<Item = usize>) -> Result<()> {
    let mut seen = 0u64;
    for p in particles {
        let bit = 1u64.checked_shl(p as u32).unwrap_or(0);
        if seen & bit != 0 {
            return Err(Error::domain(format!("particle {p} listed twice")));
        }
        seen |= bit;
    }
    Ok(())
}

/// Exact expectation value of a product of single-particle Paulis.
pub fn correlator(state: &StateVector, observables: &[(usize, Basis)]) -> Result<f64> {
    check_distinct(observables.iter().map(|o| o.0))?;
    let mut image = state.clone();
    for &(particle, basis) in observables {
        image = image.apply_pauli(particle, basis.into())?;
    }
    Ok(state.inner(&image).re)
}

/// Correlator evaluated in the state conditioned on one measurement outcome.
pub fn conditional_correlator(
    state: &StateVector,
    observables: &[(usize, Basis)],
    condition: (usize, Basis, Outcome),
) -> Result<f64> {
    let (particle, basis, outcome) = condition;
    if observables.iter().any(|o| o.0 == particle) {
        return Err(Error::domain(format!(
            "condition particle {particle} also appears among the observables"
        )));
    }
    let post = state.conditioned(particle, basis, outcome)?;
    correlator(&post, observables)
}

/// X–X correlator of particles 1 and 2 of GHZ(`n`) given X outcomes on
/// particles 3..=n. Equals `(-1)^(number of Minus outcomes)`.
pub fn eraser_parity_check(n: usize, outcomes: &[Outcome]) -> Result<f64> {
    if !(3..=MAX_PARTICLES).contains(&n) {
        return Err(Error::domain(format!("eraser check needs 3 ≤ n ≤ 6, got {n}")));
    }
    if outcomes.len() != n - 2 {
        return Err(Error::domain(format!(
            "expected {} outcomes for particles 3..={n}, got {}",
            n - 2,
            outcomes.len()
        )));
    }
    let mut state = make_ghz(n)?;
    for (k, &outcome) in outcomes.iter().enumerate() {
        state = state.conditioned(k + 3, Basis::X, outcome)?;
    }
    correlator(&state, &[(1, Basis::X), (2, Basis::X)])
}

/// Exact joint distribution of measuring each listed particle in its basis.
///
/// Outcome strings are enumerated with `Plus` before `Minus`, first particle
/// slowest; zero-probability strings are included.
pub fn joint_distribution(state: &StateVector, measurements: &[(usize, Basis)]) -> Result<Vec<(Vec<Outcome>, f64)>> {
    check_distinct(measurements.iter().map(|m| m.0))?;
    let mut branches = vec![(Vec::new(), 1.0, Some(state.clone()))];
    for &(particle, basis) in measurements {
        let mut next = Vec::with_capacity(branches.len() * 2);
        for (prefix, weight, branch_state) in branches {
            for outcome in Outcome::ALL {
                let mut path = prefix.clone();
                path.push(outcome);
                let Some(s) = branch_state.as_ref() else {
                    next.push((path, 0.0, None));
                    continue;
                };
                let (p, amps) = s.project_raw(particle, basis, outcome)?;
                if p <= ZERO_PROBABILITY {
                    next.push((path, 0.0, None));
                } else {
                    next.push((path, weight * p, Some(s.renormalized(amps, p))));
                }
            }
        }
        branches = next;
    }
    Ok(branches.into_iter().map(|(o, p, _)| (o, p)).collect())
}

/// Density matrix of `num_particles` particles.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_particles: usize,
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positive semidefiniteness.
    pub fn new(num_particles: usize, entries: DMatrix<Complex64>) -> Result<Self> {
        check_particle_count(num_particles)?;
        let dim = 1usize << num_particles;
        if entries.shape() != (dim, dim) {
            return Err(Error::domain(format!(
                "density matrix must be {dim}x{dim}, got {:?}",
                entries.shape()
            )));
        }
        let rho = DensityMatrix {
            num_particles,
            entries,
        };
        if !rho.is_hermitian() {
            return Err(Error::domain("density matrix is not Hermitian"));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > STATE_TOLERANCE || tr.im.abs() > STATE_TOLERANCE {
            return Err(Error::domain(format!("density matrix trace is {tr}")));
        }
        let min = rho.min_eigenvalue();
        if min < -STATE_TOLERANCE {
            return Err(Error::domain(format!("density matrix has eigenvalue {min}")));
        }
        Ok(rho)
    }

    /// `|ψ⟩⟨ψ|`
    pub fn pure(state: &StateVector) -> DensityMatrix {
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        DensityMatrix {
            num_particles: state.num_particles(),
            entries: &v * v.adjoint(),
        }
    }

    pub fn num_particles(&self) -> usize {
        self.num_particles
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn is_hermitian(&self) -> bool {
        let d = self.entries.nrows();
        (0..d).all(|i| {
            (0..d).all(|j| (self.entries[(i, j)] - self.entries[(j, i)].conj()).norm() <= STATE_TOLERANCE)
        })
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.entries.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }
}

/// Partial trace over every particle not listed in `keep`.
///
/// The kept particles keep their relative order, so the lowest-numbered kept
/// particle is the most significant bit of the result.
pub fn reduced_density(state: &StateVector, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::domain("keep set is empty"));
    }
    check_distinct(keep.iter().copied())?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    let masks: Vec<usize> = kept.iter().map(|&p| state.mask(p)).collect::<Result<_>>()?;
    let env_masks: Vec<usize> = (1..=state.num_particles())
        .filter(|p| !kept.contains(p))
        .map(|p| state.mask(p))
        .collect::<Result<_>>()?;

    let gather = |index: usize, masks: &[usize]| {
        masks
            .iter()
            .fold(0usize, |acc, m| (acc << 1) | usize::from(index & m != 0))
    };
    let rows = 1usize << masks.len();
    let cols = 1usize << env_masks.len();
    let mut psi = DMatrix::from_element(rows, cols, Complex64::new(0.0, 0.0));
    for (index, amp) in state.amplitudes().iter().enumerate() {
        psi[(gather(index, &masks), gather(index, &env_masks))] = *amp;
    }
    Ok(DensityMatrix {
        num_particles: kept.len(),
        entries: &psi * psi.adjoint(),
    })
}

/// `Tr(ρ²)`
pub fn purity(rho: &DensityMatrix) -> f64 {
    (rho.entries() * rho.entries()).trace().re
}
