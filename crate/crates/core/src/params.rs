//! Physical parameters of the atom-cavity system.

use alloc::format;

use crate::error::{Error, Result};
use crate::hilbert::Space;

/// Conversion factor from a frequency quoted as `(2π)(x MHz)` to rad/s.
pub const MHZ_2PI: f64 = 2.0 * core::f64::consts::PI * 1e6;

/// Rates and detunings in rad/s.
///
/// `kappa_*` and `gamma_*` are amplitude decay rates: intracavity photon
/// number decays as `e^{−2κt}` and excited-state population as `e^{−2γt}`.
/// The cavity decay is split by mirror (`kappa_in` through the input mirror,
/// `kappa_out` through the output mirror) plus scatter/absorption
/// (`kappa_loss`); spontaneous decay is split by the ground level it returns to.
///
/// The ground hyperfine splitting (2π · 9.193 GHz) does not appear: both
/// drives are locked in Raman resonance and the splitting drops out of the
/// rotating frame. `delta2` carries any residual two-photon detuning.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    /// Atom-cavity coupling on `b ↔ e`.
    pub g: f64,
    pub kappa_in: f64,
    pub kappa_out: f64,
    pub kappa_loss: f64,
    /// Decay `e → a`.
    pub gamma_a: f64,
    /// Decay `e → b`.
    pub gamma_b: f64,
    /// Blue detuning of cavity and classical field from the atom.
    pub delta: f64,
    /// Two-photon (Raman) detuning.
    pub delta2: f64,
    pub fock_cutoff: usize,
}

impl Default for SystemParams {
    /// g = 2π·16 MHz, κ = 2π·3.8 MHz split evenly between the mirrors with no
    /// scatter loss, γ = 2π·2.6 MHz with 50/50 branching, Δ = 2π·10 MHz.
    fn default() -> Self {
        let kappa = 3.8 * MHZ_2PI;
        let gamma = 2.6 * MHZ_2PI;
        Self {
            g: 16.0 * MHZ_2PI,
            kappa_in: 0.5 * kappa,
            kappa_out: 0.5 * kappa,
            kappa_loss: 0.0,
            gamma_a: 0.5 * gamma,
            gamma_b: 0.5 * gamma,
            delta: 10.0 * MHZ_2PI,
            delta2: 0.0,
            fock_cutoff: 4,
        }
    }
}

impl SystemParams {
    pub fn kappa(&self) -> f64 {
        self.kappa_in + self.kappa_out + self.kappa_loss
    }

    pub fn gamma(&self) -> f64 {
        self.gamma_a + self.gamma_b
    }

    /// Splits total `kappa` into `kappa_loss` plus two equal mirror rates.
    pub fn with_symmetric_mirrors(mut self, kappa: f64, kappa_loss: f64) -> Self {
        let mirrors = (kappa - kappa_loss).max(0.0);
        self.kappa_in = 0.5 * mirrors;
        self.kappa_out = 0.5 * mirrors;
        self.kappa_loss = kappa_loss;
        self
    }

    /// Splits total `gamma` with the fraction `to_a` going to `e → a`.
    pub fn with_branching(mut self, gamma: f64, to_a: f64) -> Self {
        self.gamma_a = gamma * to_a;
        self.gamma_b = gamma * (1.0 - to_a);
        self
    }

    pub fn space(&self) -> Result<Space> {
        Space::new(self.fock_cutoff)
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("g", self.g),
            ("kappa_in", self.kappa_in),
            ("kappa_out", self.kappa_out),
            ("kappa_loss", self.kappa_loss),
            ("gamma_a", self.gamma_a),
            ("gamma_b", self.gamma_b),
        ];
        for (name, v) in rates {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        for (name, v) in [("delta", self.delta), ("delta2", self.delta2)] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite")));
            }
        }
        self.space()?;
        Ok(())
    }
}
