#![allow(dead_code)]

use cqed_core::protocol::{calibrate_input, IntracavityReading, ScheduleConfig, Setup};
use cqed_core::SystemParams;

pub const FWHM: f64 = 150e-9;

pub fn calibrated_params() -> SystemParams {
    calibrate_input(1.1, 0.68, IntracavityReading::Integrated, FWHM, &SystemParams::default()).unwrap().params
}

pub fn calibrated_setup() -> Setup {
    Setup::new(calibrated_params(), ScheduleConfig { lambda1_on: true, ..Default::default() })
}

/// Trapezoid rule over a sampled track.
pub fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2).zip(y.windows(2)).map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1])).sum()
}
