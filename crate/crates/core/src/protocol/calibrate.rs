//! Input calibration: relates the incident photon number of a probe pulse to
//! the photon content it builds up in the empty cavity, and solves for the
//! scatter loss that reproduces a measured ratio.
//!
//! Without an atom the cavity amplitude obeys `dα/dt = −κα − iλ(t)` and the
//! intracavity state stays coherent, so `⟨a†a⟩ = |α|²`.

use alloc::format;
use core::fmt;
use core::str::FromStr;

use super::schedule::{lambda_peak_for, lambda_shape, LAMBDA_SUPPORT_FWHM};
use crate::dynamics::ode::{DormandPrince, Tolerances};
use crate::error::{Error, Result};
use crate::linalg::{C64, I, ZERO};
use crate::params::SystemParams;

/// How the "photons inside the cavity" of a pulse are counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum IntracavityReading {
    /// Photons leaving the cavity through every port except the input mirror,
    /// `∫ 2(κ − κ_in)|α|² dt`.
    #[default]
    Integrated,
    /// Peak intracavity photon number `max |α(t)|²`.
    Peak,
}

impl IntracavityReading {
    pub fn name(self) -> &'static str {
        match self {
            IntracavityReading::Integrated => "integrated",
            IntracavityReading::Peak => "peak",
        }
    }
}

impl fmt::Display for IntracavityReading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IntracavityReading {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "integrated" => Ok(IntracavityReading::Integrated),
            "peak" => Ok(IntracavityReading::Peak),
            _ => Err(Error::invalid(format!("unknown intracavity reading {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calibration {
    /// Input parameters with `kappa_loss` solved and the remaining decay split
    /// evenly between the mirrors.
    pub params: SystemParams,
    pub n_bar_in: f64,
    /// Content reached at the solution.
    pub content: f64,
    pub reading: IntracavityReading,
}

/// Intracavity content of a probe pulse carrying `n_bar` incident photons,
/// for an empty cavity with the rates of `params`.
pub fn empty_cavity_content(params: &SystemParams, lambda_width: f64, n_bar: f64, reading: IntracavityReading) -> Result<f64> {
    let k = params.kappa();
    if !(k > 0.0) {
        return Err(Error::invalid("empty-cavity content needs kappa > 0"));
    }
    if !(lambda_width > 0.0) || !(n_bar >= 0.0) {
        return Err(Error::invalid("lambda_width must be > 0 and n_bar >= 0"));
    }
    let peak = lambda_peak_for(n_bar, lambda_width, params.kappa_in);
    let weight = 2.0 * (k - params.kappa_in);
    let mut rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        let lam = peak * lambda_shape(t, lambda_width);
        dy[0] = -y[0] * k - I * lam;
        dy[1] = C64::new(weight * y[0].norm_sqr(), 0.0);
    };
    let half = LAMBDA_SUPPORT_FWHM * lambda_width;
    let (t0, t1) = (-half, half + 30.0 / k);
    let dt = lambda_width / 200.0;
    let tol = Tolerances { atol: 1e-14, rtol: 1e-11 };
    let mut stepper = DormandPrince::new(2, tol, dt);
    let mut y = [ZERO, ZERO];
    let mut t = t0;
    let mut max_n: f64 = 0.0;
    let steps = libm::ceil((t1 - t0) / dt) as usize;
    for s in 1..=steps {
        let target = if s == steps { t1 } else { t0 + s as f64 * dt };
        stepper.integrate_to(&mut rhs, &mut t, &mut y, target)?;
        max_n = max_n.max(y[0].norm_sqr());
    }
    Ok(match reading {
        IntracavityReading::Integrated => y[1].re,
        IntracavityReading::Peak => max_n,
    })
}

/// Solves for `kappa_loss ∈ [0, κ]` (mirrors split evenly) such that a pulse
/// of `n_bar_in` incident photons yields `target_content` in the empty cavity.
/// Total κ is kept fixed.
pub fn calibrate_input(
    n_bar_in: f64,
    target_content: f64,
    reading: IntracavityReading,
    lambda_width: f64,
    params: &SystemParams,
) -> Result<Calibration> {
    if !(n_bar_in >= 0.0) || !n_bar_in.is_finite() {
        return Err(Error::invalid(format!("n_bar_in must be finite and >= 0, got {n_bar_in}")));
    }
    if n_bar_in == 0.0 {
        return Ok(Calibration { params: *params, n_bar_in, content: 0.0, reading });
    }
    if !(target_content > 0.0) || !target_content.is_finite() {
        return Err(Error::invalid(format!("target content must be finite and > 0, got {target_content}")));
    }
    let k = params.kappa();
    let content = |loss: f64| empty_cavity_content(&params.with_symmetric_mirrors(k, loss), lambda_width, n_bar_in, reading);
    let best = content(0.0)?;
    if best < target_content {
        return Err(Error::CalibrationFailure(format!(
            "{reading} content {target_content} unreachable: lossless mirrors give only {best:.6}"
        )));
    }
    // content falls monotonically from `best` to 0 as kappa_loss goes 0 → κ
    let (mut lo, mut hi) = (0.0, k);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if content(mid)? > target_content {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * k {
            break;
        }
    }
    let loss = 0.5 * (lo + hi);
    let params = params.with_symmetric_mirrors(k, loss);
    Ok(Calibration { params, n_bar_in, content: content(loss)?, reading })
}
