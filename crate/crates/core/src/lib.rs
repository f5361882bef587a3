//! Simulation core for reversible light/atom state transfer in cavity QED.
//!
//! A three-level Λ atom (ground states `a`, `b`, excited state `e`) sits in a
//! single lossy cavity mode. The cavity couples `b ↔ e` with rate `g`, a
//! classical field `Ω(t)` drives `a ↔ e`, and a coherent probe `λ(t)` drives
//! the cavity. Both fields are blue-detuned from the atom by `Δ`.
//!
//! The crate is `no_std` with `alloc`. All IO, configuration and parallel
//! orchestration live in the companion `cqed-lab` crate.
//!
//! Unit conventions: times in seconds, rates and frequencies in rad/s.
//! `κ` and `γ` are *amplitude* decay rates, so populations and photon number
//! decay at `2κ` and `2γ`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod params;
pub mod protocol;

pub use error::{Error, Result};
pub use hilbert::{Level, Populations, Space, State};
pub use linalg::{Matrix, C64};
pub use params::SystemParams;
