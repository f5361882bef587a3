use alloc::format;

use crate::error::{Error, Result};

/// Upper bound on adiabatic transfer per incident photon: the share of the
/// cavity decay through the input mirror, divided among the polarization
/// modes the atom couples to.
pub fn efficiency_budget(kappa_in: f64, kappa_out: f64, kappa_loss: f64, polarization_modes: u32) -> Result<f64> {
    for (name, v) in [("kappa_in", kappa_in), ("kappa_out", kappa_out), ("kappa_loss", kappa_loss)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
        }
    }
    if !(1..=2).contains(&polarization_modes) {
        return Err(Error::invalid(format!("polarization_modes must be 1 or 2, got {polarization_modes}")));
    }
    let kappa = kappa_in + kappa_out + kappa_loss;
    if kappa == 0.0 {
        return Err(Error::invalid("total cavity decay is zero"));
    }
    Ok(kappa_in / kappa / polarization_modes as f64)
}

/// `ζ = p_a / n̄`.
pub fn transfer_efficiency(p_a: f64, n_bar: f64) -> Result<f64> {
    if !(n_bar > 0.0) {
        return Err(Error::invalid("n_bar must be > 0"));
    }
    Ok(p_a / n_bar)
}
