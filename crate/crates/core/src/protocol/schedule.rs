//! Pulse timing: two classical pulses `Ω₁`, `Ω₂` on `a ↔ e` and two cavity
//! probe pulses `λ₁`, `λ₂`.
//!
//! ```text
//!  Ω   ‾‾‾‾‾‾‾\                         /‾‾‾‾‾‾‾‾
//!              \_______________________/
//!             0  edge                  Δt  Δt+edge
//!  λ          _/\_                    _/\_
//!             t₁                   Δt+edge/2   (λ₂ carries e^{iθ})
//! ```
//!
//! `Ω₁` is on for `t < 0` and falls over `[0, edge]`; `Ω₂` rises over
//! `[Δt, Δt + edge]` and stays on. Edges are sin² ramps. The λ pulses are
//! Gaussians in amplitude, cut off at ±4 FWHM with the offset subtracted so
//! they stay continuous. `lambda_width` is the FWHM of the photon flux
//! `|λ|²`, not of the amplitude.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI};
use core::fmt;

use crate::dynamics::{Controls, Drive};
use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};
use crate::params::{SystemParams, MHZ_2PI};

/// λ pulses vanish beyond this many FWHM from their center.
pub const LAMBDA_SUPPORT_FWHM: f64 = 4.0;

/// User-facing pulse settings. Probe strengths are mean photon numbers
/// incident on the input mirror; [`make_schedule`] turns them into drive
/// amplitudes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduleConfig {
    pub omega1_on: bool,
    pub omega2_on: bool,
    pub lambda1_on: bool,
    pub lambda2_on: bool,
    /// Center of `λ₁` relative to the start of the `Ω₁` falling edge (s).
    pub t1: f64,
    /// Delay between the start of the `Ω₁` fall and the start of the `Ω₂` rise (s).
    pub delta_t: f64,
    /// Phase of `λ₂` relative to `λ₁` (rad).
    pub theta: f64,
    /// Shift of the `λ₂` center from the middle of the `Ω₂` rise (s).
    pub lambda2_offset: f64,
    /// Peak Rabi frequency (rad/s).
    pub omega_max: f64,
    pub edge_time: f64,
    pub lambda_width: f64,
    pub n_bar_1: f64,
    pub n_bar_2: f64,
}

impl Default for ScheduleConfig {
    /// All pulses off; Ω_max = 8γ = 2π·20.8 MHz, 100 ns edges, 150 ns probe
    /// pulses, Δt = 1 μs, n̄₁ = 1.1, n̄₂ = 2.
    fn default() -> Self {
        Self {
            omega1_on: false,
            omega2_on: false,
            lambda1_on: false,
            lambda2_on: false,
            t1: 0.0,
            delta_t: 1e-6,
            theta: 0.0,
            lambda2_offset: 0.0,
            omega_max: 8.0 * 2.6 * MHZ_2PI,
            edge_time: 100e-9,
            lambda_width: 150e-9,
            n_bar_1: 1.1,
            n_bar_2: 2.0,
        }
    }
}

impl ScheduleConfig {
    pub fn with_pulses(mut self, omega1: bool, omega2: bool, lambda1: bool, lambda2: bool) -> Self {
        self.omega1_on = omega1;
        self.omega2_on = omega2;
        self.lambda1_on = lambda1;
        self.lambda2_on = lambda2;
        self
    }

    pub fn lambda2_center(&self) -> f64 {
        self.delta_t + 0.5 * self.edge_time + self.lambda2_offset
    }

    pub fn lambda_half_support(&self) -> f64 {
        LAMBDA_SUPPORT_FWHM * self.lambda_width
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScheduleWarning {
    /// `λ₂` is on but never overlaps the `Ω₂` rise.
    Lambda2MissesRise { support: (f64, f64), rise: (f64, f64) },
    /// `λ₁` (or the `Ω₁` fall) reaches into the `Ω₂` rise.
    Lambda1OverlapsReadout { lambda1_end: f64, delta_t: f64 },
}

impl fmt::Display for ScheduleWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleWarning::Lambda2MissesRise { support, rise } => write!(
                f,
                "lambda2 support [{:e}, {:e}] s misses the omega2 rise [{:e}, {:e}] s",
                support.0, support.1, rise.0, rise.1
            ),
            ScheduleWarning::Lambda1OverlapsReadout { lambda1_end, delta_t } => {
                write!(f, "lambda1 ends at {lambda1_end:e} s, after the omega2 rise at {delta_t:e} s")
            }
        }
    }
}

/// Resolved envelopes, usable directly as a [`Drive`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseSchedule {
    pub config: ScheduleConfig,
    /// Peak `λ₁` amplitude (rad/s).
    pub lambda1_peak: f64,
    /// Peak `λ₂` amplitude before the `e^{iθ}` phase (rad/s).
    pub lambda2_peak: f64,
}

/// Amplitude profile of a λ pulse, 1 at the center.
pub fn lambda_shape(u: f64, fwhm: f64) -> f64 {
    let half = LAMBDA_SUPPORT_FWHM * fwhm;
    if u.abs() >= half {
        return 0.0;
    }
    let c = 2.0 * LN_2 / (fwhm * fwhm);
    let floor = libm::exp(-c * half * half);
    (libm::exp(-c * u * u) - floor) / (1.0 - floor)
}

/// `∫ lambda_shape(u)² du`, closed form.
pub fn lambda_shape_energy(fwhm: f64) -> f64 {
    let half = LAMBDA_SUPPORT_FWHM * fwhm;
    let c = 2.0 * LN_2 / (fwhm * fwhm);
    let floor = libm::exp(-c * half * half);
    let gauss = |k: f64| libm::sqrt(PI / k) * libm::erf(libm::sqrt(k) * half);
    (gauss(2.0 * c) - 2.0 * floor * gauss(c) + floor * floor * 2.0 * half) / ((1.0 - floor) * (1.0 - floor))
}

/// Peak amplitude for which a pulse of this width carries `n_bar` photons
/// onto a mirror with amplitude rate `kappa_in`: `λ = √(2κ_in) √Φ`.
pub fn lambda_peak_for(n_bar: f64, fwhm: f64, kappa_in: f64) -> f64 {
    libm::sqrt(2.0 * kappa_in * n_bar / lambda_shape_energy(fwhm))
}

fn ramp(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let s = libm::sin(0.5 * PI * x);
        s * s
    }
}

/// Validates `config` and resolves probe amplitudes against the input-mirror
/// rate of `params`. Returns the schedule with any non-fatal warnings.
pub fn make_schedule(config: &ScheduleConfig, params: &SystemParams) -> Result<(PulseSchedule, Vec<ScheduleWarning>)> {
    let c = config;
    for (name, v) in [("t1", c.t1), ("delta_t", c.delta_t), ("theta", c.theta), ("lambda2_offset", c.lambda2_offset)] {
        if !v.is_finite() {
            return Err(Error::invalid(format!("{name} must be finite, got {v}")));
        }
    }
    for (name, v) in [("edge_time", c.edge_time), ("lambda_width", c.lambda_width)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid(format!("{name} must be finite and > 0, got {v}")));
        }
    }
    for (name, v) in [("omega_max", c.omega_max), ("n_bar_1", c.n_bar_1), ("n_bar_2", c.n_bar_2)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
        }
    }
    if !(params.kappa_in >= 0.0) {
        return Err(Error::invalid("kappa_in must be >= 0"));
    }
    let mut warnings = Vec::new();
    let half = c.lambda_half_support();
    let rise = (c.delta_t, c.delta_t + c.edge_time);
    if c.lambda2_on {
        let support = (c.lambda2_center() - half, c.lambda2_center() + half);
        if support.1 <= rise.0 || support.0 >= rise.1 {
            warnings.push(ScheduleWarning::Lambda2MissesRise { support, rise });
        }
    }
    if c.lambda1_on && c.omega2_on && c.t1 + half > c.delta_t {
        warnings.push(ScheduleWarning::Lambda1OverlapsReadout { lambda1_end: c.t1 + half, delta_t: c.delta_t });
    }
    let schedule = PulseSchedule {
        config: *c,
        lambda1_peak: lambda_peak_for(c.n_bar_1, c.lambda_width, params.kappa_in),
        lambda2_peak: lambda_peak_for(c.n_bar_2, c.lambda_width, params.kappa_in),
    };
    Ok((schedule, warnings))
}

impl PulseSchedule {
    pub fn omega1(&self, t: f64) -> f64 {
        let c = &self.config;
        if !c.omega1_on {
            return 0.0;
        }
        c.omega_max * (1.0 - ramp(t / c.edge_time))
    }

    pub fn omega2(&self, t: f64) -> f64 {
        let c = &self.config;
        if !c.omega2_on {
            return 0.0;
        }
        c.omega_max * ramp((t - c.delta_t) / c.edge_time)
    }

    pub fn omega(&self, t: f64) -> f64 {
        self.omega1(t) + self.omega2(t)
    }

    pub fn lambda1(&self, t: f64) -> C64 {
        let c = &self.config;
        if !c.lambda1_on {
            return ZERO;
        }
        C64::new(self.lambda1_peak * lambda_shape(t - c.t1, c.lambda_width), 0.0)
    }

    pub fn lambda2(&self, t: f64) -> C64 {
        let c = &self.config;
        if !c.lambda2_on {
            return ZERO;
        }
        C64::from_polar(self.lambda2_peak * lambda_shape(t - c.lambda2_center(), c.lambda_width), c.theta)
    }

    pub fn lambda(&self, t: f64) -> C64 {
        self.lambda1(t) + self.lambda2(t)
    }

    /// Same schedule with `λ₂` at phase `theta`.
    pub fn with_theta(mut self, theta: f64) -> Self {
        self.config.theta = theta;
        self
    }

    pub fn with_pulses(mut self, omega1: bool, omega2: bool, lambda1: bool, lambda2: bool) -> Self {
        self.config = self.config.with_pulses(omega1, omega2, lambda1, lambda2);
        self
    }

    /// Same schedule with `λ₁` centered at `t1`.
    pub fn with_t1(mut self, t1: f64) -> Self {
        self.config.t1 = t1;
        self
    }

    /// Same schedule with the `Ω₂` rise (and `λ₂`) moved to `delta_t`.
    pub fn with_delta_t(mut self, delta_t: f64) -> Self {
        self.config.delta_t = delta_t;
        self
    }

    /// End of the `λ₁` pulse and `Ω₁` fall, whichever is later.
    pub fn absorption_end(&self) -> f64 {
        let c = &self.config;
        (c.t1 + c.lambda_half_support()).max(c.edge_time)
    }
}

impl Drive for PulseSchedule {
    fn controls(&self, t: f64) -> Controls {
        Controls { omega: self.omega(t), omega_phase: 0.0, lambda: self.lambda(t) }
    }

    fn max_step(&self) -> Option<f64> {
        Some(self.config.edge_time.min(self.config.lambda_width) / 8.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(config: ScheduleConfig) -> PulseSchedule {
        make_schedule(&config, &SystemParams::default()).unwrap().0
    }

    #[test]
    fn all_off_is_silent() {
        let s = build(ScheduleConfig::default());
        for k in -300..300 {
            let t = k as f64 * 1e-8;
            assert_eq!(s.omega(t), 0.0);
            assert_eq!(s.lambda(t), ZERO);
        }
    }

    #[test]
    fn omega1_falls_across_edge() {
        let cfg = ScheduleConfig::default().with_pulses(true, false, false, false);
        let s = build(cfg);
        assert_eq!(s.omega(-1e-6), cfg.omega_max);
        assert_eq!(s.omega(0.0), cfg.omega_max);
        assert!((s.omega(0.5 * cfg.edge_time) - 0.5 * cfg.omega_max).abs() < 1e-6 * cfg.omega_max);
        assert_eq!(s.omega(cfg.edge_time), 0.0);
        assert_eq!(s.omega(1e-6), 0.0);
        let mut prev = f64::INFINITY;
        for k in 0..=100 {
            let w = s.omega(k as f64 * 1e-9);
            assert!(w <= prev && w >= 0.0);
            prev = w;
        }
    }

    #[test]
    fn default_rabi_frequency_is_eight_gamma() {
        let cfg = ScheduleConfig::default();
        assert!((cfg.omega_max - 8.0 * SystemParams::default().gamma()).abs() < 1e-6);
        assert!((cfg.omega_max / MHZ_2PI - 20.8).abs() < 1e-12);
    }

    #[test]
    fn omega2_rises_and_stays() {
        let cfg = ScheduleConfig::default().with_pulses(false, true, false, false);
        let s = build(cfg);
        assert_eq!(s.omega(cfg.delta_t), 0.0);
        assert_eq!(s.omega(cfg.delta_t + cfg.edge_time), cfg.omega_max);
        assert_eq!(s.omega(cfg.delta_t + 5e-6), cfg.omega_max);
    }

    #[test]
    fn lambda_shape_is_continuous_and_truncated() {
        let w = 150e-9;
        assert_eq!(lambda_shape(0.0, w), 1.0);
        assert!((lambda_shape(0.5 * w, w) - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert_eq!(lambda_shape(4.0 * w, w), 0.0);
        assert!(lambda_shape(4.0 * w - 1e-12, w) < 1e-12);
    }

    #[test]
    fn shape_energy_matches_quadrature() {
        let w = 150e-9;
        let n = 200_000;
        let h = 8.0 * w / n as f64;
        let sum: f64 = (0..=n)
            .map(|k| {
                let u = -4.0 * w + k as f64 * h;
                let x = lambda_shape(u, w);
                if k == 0 || k == n {
                    0.5 * x * x
                } else {
                    x * x
                }
            })
            .sum::<f64>()
            * h;
        assert!(((sum - lambda_shape_energy(w)) / sum).abs() < 1e-10);
    }

    #[test]
    fn lambda2_carries_theta() {
        let cfg = ScheduleConfig { theta: 1.0, ..ScheduleConfig::default().with_pulses(false, true, false, true) };
        let s = build(cfg);
        let z = s.lambda(cfg.lambda2_center());
        assert!((z.arg() - 1.0).abs() < 1e-12);
        assert!((z.norm() - s.lambda2_peak).abs() < 1e-6);
    }

    #[test]
    fn warns_when_lambda2_misses_rise() {
        let p = SystemParams::default();
        let cfg = ScheduleConfig::default().with_pulses(false, true, false, true);
        assert!(make_schedule(&cfg, &p).unwrap().1.is_empty());
        let late = ScheduleConfig { lambda2_offset: 2e-6, ..cfg };
        let w = make_schedule(&late, &p).unwrap().1;
        assert!(matches!(w[..], [ScheduleWarning::Lambda2MissesRise { .. }]));
    }

    #[test]
    fn rejects_bad_timings() {
        let p = SystemParams::default();
        let bad = ScheduleConfig { edge_time: 0.0, ..Default::default() };
        assert!(make_schedule(&bad, &p).is_err());
        let bad = ScheduleConfig { t1: f64::NAN, ..Default::default() };
        assert!(make_schedule(&bad, &p).is_err());
    }
}
