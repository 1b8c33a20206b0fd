//! Simulation of master-key quantum key distribution over GHZ states.
//!
//! * [`quantum`]: exact state vectors for up to six spin-1/2 particles.
//! * [`key`]: coding tables, sifting, master-key combination, disclosure.
//! * [`channel`]: depolarizing noise and eavesdropper models.
//! * [`protocol`]: BB84/Eckert, MKS and MKC round state machines.
//! * [`config`], [`stats`], [`experiment`]: the Monte-Carlo harness.
//!
//! Trials run on a rayon pool when the `parallel` feature is enabled
//! (default) and sequentially otherwise; results are identical either way.

pub mod channel;
pub mod config;
pub mod error;
pub mod experiment;
pub mod key;
pub mod protocol;
pub mod quantum;
pub mod stats;
pub mod streams;

pub use error::{Error, Result};
