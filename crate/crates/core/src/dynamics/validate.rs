//! Closed-form regression cases for the master-equation integrator.

use alloc::format;
use core::fmt;
use core::str::FromStr;

use super::master::{integrate_master, SolverOptions};
use super::model::Controls;
use crate::error::{Error, Result};
use crate::hilbert::{Level, State};
use crate::linalg::C64;
use crate::params::SystemParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnalyticCase {
    /// Empty cavity from `|b,n₀⟩`: `⟨a†a⟩ = n₀ e^{−2κt}`.
    CavityDecay,
    /// Resonantly driven empty cavity from vacuum:
    /// `⟨a†a⟩ = |λ/κ|² (1 − e^{−κt})²`.
    DrivenCavity,
    /// Lossless resonant exchange from `|b,1⟩`: `P_e = sin²(gt)`.
    VacuumRabi,
}

impl AnalyticCase {
    pub const ALL: [AnalyticCase; 3] = [AnalyticCase::CavityDecay, AnalyticCase::DrivenCavity, AnalyticCase::VacuumRabi];

    pub fn id(self) -> &'static str {
        match self {
            AnalyticCase::CavityDecay => "cavity-decay",
            AnalyticCase::DrivenCavity => "driven-cavity",
            AnalyticCase::VacuumRabi => "vacuum-rabi",
        }
    }

    /// Pass threshold: relative error for the cavity cases, absolute error
    /// on `P_e` for the Rabi case.
    pub fn threshold(self) -> f64 {
        match self {
            AnalyticCase::CavityDecay | AnalyticCase::DrivenCavity => 1e-6,
            AnalyticCase::VacuumRabi => 1e-4,
        }
    }
}

impl FromStr for AnalyticCase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        AnalyticCase::ALL
            .into_iter()
            .find(|c| c.id() == s)
            .ok_or_else(|| Error::invalid(format!("unknown validation case {s:?}")))
    }
}

impl fmt::Display for AnalyticCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationReport {
    pub case: AnalyticCase,
    pub max_error: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// Runs `case_id` against its closed form.
pub fn validate_analytic(case_id: &str) -> Result<ValidationReport> {
    run_case(case_id.parse()?)
}

pub fn run_case(case: AnalyticCase) -> Result<ValidationReport> {
    let base = SystemParams::default();
    let options = SolverOptions::default();
    let max_error = match case {
        AnalyticCase::CavityDecay => {
            let p = SystemParams { g: 0.0, ..base };
            let k = p.kappa();
            let n0 = 2usize;
            let run = integrate_master(&State::basis(p.space()?, Level::B, n0), &Controls::OFF, &p, (0.0, 3.0 / k), &options)?;
            let s = &run.series;
            s.t.iter()
                .zip(&s.n_cav)
                .map(|(&t, &n)| {
                    let exact = n0 as f64 * libm::exp(-2.0 * k * t);
                    ((n - exact) / exact).abs()
                })
                .fold(0.0, f64::max)
        }
        AnalyticCase::DrivenCavity => {
            let p = SystemParams { g: 0.0, fock_cutoff: 6, ..base };
            let k = p.kappa();
            let lambda = C64::new(0.12 * k, 0.16 * k);
            let steady = lambda.norm_sqr() / (k * k);
            let drive = Controls { lambda, ..Controls::OFF };
            let run = integrate_master(&State::basis(p.space()?, Level::B, 0), &drive, &p, (0.0, 25.0 / k), &options)?;
            let s = &run.series;
            s.t.iter()
                .zip(&s.n_cav)
                .filter(|(&t, _)| t * k >= 1.0)
                .map(|(&t, &n)| {
                    let r = 1.0 - libm::exp(-k * t);
                    let exact = steady * r * r;
                    ((n - exact) / exact).abs()
                })
                .fold(0.0, f64::max)
        }
        AnalyticCase::VacuumRabi => {
            let p = SystemParams {
                kappa_in: 0.0,
                kappa_out: 0.0,
                kappa_loss: 0.0,
                gamma_a: 0.0,
                gamma_b: 0.0,
                delta: 0.0,
                ..base
            };
            let g = p.g;
            let period = core::f64::consts::PI / g;
            let opts = SolverOptions { sample_dt: period / 50.0, ..options };
            let run = integrate_master(&State::basis(p.space()?, Level::B, 1), &Controls::OFF, &p, (0.0, 3.0 * period), &opts)?;
            let s = &run.series;
            s.t.iter()
                .zip(&s.p_e)
                .map(|(&t, &pe)| {
                    let x = libm::sin(g * t);
                    (pe - x * x).abs()
                })
                .fold(0.0, f64::max)
        }
    };
    let threshold = case.threshold();
    Ok(ValidationReport { case, max_error, threshold, passed: max_error < threshold })
}
