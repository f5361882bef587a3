//! Run configuration: built-in defaults, then a TOML file, then `key=value`
//! overrides. Keys are flat and carry their unit; angular rates are entered
//! as `f/(2π)` in MHz.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use cqed_core::dynamics::{SolverOptions, Tolerances};
use cqed_core::params::MHZ_2PI;
use cqed_core::protocol::{IntracavityReading, ScheduleConfig, Setup};
use cqed_core::{Level, SystemParams};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Default output directory when neither the config nor a flag names one.
pub const OUT_DIR_ENV: &str = "CQED_OUT_DIR";

/// Keys that change how a run executes but not what it computes; left out of
/// the metadata echo so outputs do not depend on them.
const EXECUTION_KEYS: [&str; 2] = ["workers", "out_dir"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub g_mhz_over_2pi: f64,
    /// Total cavity field decay.
    pub kappa_mhz_over_2pi: f64,
    /// Scatter and absorption loss; solved by calibration when absent. The
    /// rest of the decay is split evenly between the two mirrors.
    pub kappa_loss_mhz_over_2pi: Option<f64>,
    /// Total atomic dipole decay.
    pub gamma_mhz_over_2pi: f64,
    /// Fraction of spontaneous decay from `e` that lands in `a`.
    pub branching_to_a: f64,
    pub delta_mhz_over_2pi: f64,
    pub delta2_mhz_over_2pi: f64,
    pub fock_cutoff: usize,

    pub n_bar_in: f64,
    pub intracavity_target: f64,
    /// `integrated` or `peak`.
    pub intracavity_reading: String,

    pub lambda1_on: bool,
    pub omega_max_mhz_over_2pi: f64,
    pub edge_time_ns: f64,
    pub lambda_width_ns: f64,
    pub t1_ns: f64,
    pub delta_t_us: f64,
    /// `θ₀`; the fringe grid starts here.
    pub theta_rad: f64,
    pub lambda2_offset_ns: f64,
    pub lambda2_n_bar: f64,

    /// Atom level for `single-photon`: `a` or `b`.
    pub initial_level: String,
    pub t1_grid_us: Vec<f64>,
    pub theta_points: usize,
    pub windows_ns: Vec<f64>,
    pub readout_us: f64,
    pub settle_ns: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub polarization_modes: u32,

    pub sample_dt_ns: f64,
    pub atol: f64,
    pub rtol: f64,

    /// 0 uses every available core.
    pub workers: usize,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            g_mhz_over_2pi: 16.0,
            kappa_mhz_over_2pi: 3.8,
            kappa_loss_mhz_over_2pi: None,
            gamma_mhz_over_2pi: 2.6,
            branching_to_a: 0.5,
            delta_mhz_over_2pi: 10.0,
            delta2_mhz_over_2pi: 0.0,
            fock_cutoff: 4,
            n_bar_in: 1.1,
            intracavity_target: 0.68,
            intracavity_reading: "integrated".into(),
            lambda1_on: true,
            omega_max_mhz_over_2pi: 8.0 * 2.6,
            edge_time_ns: 100.0,
            lambda_width_ns: 150.0,
            t1_ns: 0.0,
            delta_t_us: 1.0,
            theta_rad: 0.0,
            lambda2_offset_ns: 0.0,
            lambda2_n_bar: 2.0,
            initial_level: "a".into(),
            t1_grid_us: vec![-2.0, -1.5, -1.0, -0.6, -0.4, -0.2, -0.1, 0.0, 0.1, 0.2, 0.4, 0.6, 1.0, 1.5, 2.0],
            theta_points: 16,
            windows_ns: vec![200.0, 1000.0],
            readout_us: 1.0,
            settle_ns: 300.0,
            n_traj: 1000,
            seed: 1,
            polarization_modes: 2,
            sample_dt_ns: 1.0,
            atol: 1e-10,
            rtol: 1e-8,
            workers: 0,
            out_dir: None,
        }
    }
}

fn parse_override(item: &str) -> Result<(String, toml::Value)> {
    let (key, value) =
        item.split_once('=').ok_or_else(|| LabError::config(format!("override {item:?} is not key=value")))?;
    let (key, value) = (key.trim(), value.trim());
    if key.is_empty() {
        return Err(LabError::config(format!("override {item:?} has an empty key")));
    }
    let value = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((key.to_string(), value))
}

impl RunConfig {
    /// Layers `file` (TOML text) and then `overrides` over the defaults.
    pub fn from_layers(file: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut table = match file {
            Some(text) => toml::from_str::<toml::Table>(text).map_err(|e| LabError::config(e.to_string()))?,
            None => toml::Table::new(),
        };
        for item in overrides {
            let (key, value) = parse_override(item)?;
            table.insert(key, value);
        }
        let text = toml::to_string(&table).map_err(|e| LabError::config(e.to_string()))?;
        let config: RunConfig = toml::from_str(&text).map_err(|e| LabError::config(e.message().to_string() + &key_hint(&e, &text)))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => Some(std::fs::read_to_string(p).map_err(|source| LabError::Io { path: p.into(), source })?),
            None => None,
        };
        Self::from_layers(text.as_deref(), overrides)
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("g_mhz_over_2pi", self.g_mhz_over_2pi),
            ("kappa_mhz_over_2pi", self.kappa_mhz_over_2pi),
            ("gamma_mhz_over_2pi", self.gamma_mhz_over_2pi),
            ("omega_max_mhz_over_2pi", self.omega_max_mhz_over_2pi),
            ("n_bar_in", self.n_bar_in),
            ("lambda2_n_bar", self.lambda2_n_bar),
            ("delta_t_us", self.delta_t_us),
            ("settle_ns", self.settle_ns),
        ];
        for (key, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(LabError::config(format!("{key} must be finite and >= 0, got {v}")));
            }
        }
        let positive = [
            ("edge_time_ns", self.edge_time_ns),
            ("lambda_width_ns", self.lambda_width_ns),
            ("intracavity_target", self.intracavity_target),
            ("readout_us", self.readout_us),
            ("sample_dt_ns", self.sample_dt_ns),
            ("atol", self.atol),
            ("rtol", self.rtol),
        ];
        for (key, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(LabError::config(format!("{key} must be finite and > 0, got {v}")));
            }
        }
        for (key, v) in [
            ("delta_mhz_over_2pi", self.delta_mhz_over_2pi),
            ("delta2_mhz_over_2pi", self.delta2_mhz_over_2pi),
            ("t1_ns", self.t1_ns),
            ("theta_rad", self.theta_rad),
            ("lambda2_offset_ns", self.lambda2_offset_ns),
        ] {
            if !v.is_finite() {
                return Err(LabError::config(format!("{key} must be finite, got {v}")));
            }
        }
        if let Some(loss) = self.kappa_loss_mhz_over_2pi {
            if !(0.0..=self.kappa_mhz_over_2pi).contains(&loss) {
                return Err(LabError::config(format!(
                    "kappa_loss_mhz_over_2pi must lie in [0, kappa_mhz_over_2pi], got {loss}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.branching_to_a) {
            return Err(LabError::config(format!("branching_to_a must lie in [0, 1], got {}", self.branching_to_a)));
        }
        if self.fock_cutoff < 1 {
            return Err(LabError::config("fock_cutoff must be >= 1"));
        }
        if self.theta_points < 4 {
            return Err(LabError::config(format!("theta_points must be >= 4, got {}", self.theta_points)));
        }
        if self.t1_grid_us.is_empty() || self.t1_grid_us.iter().any(|t| !t.is_finite()) {
            return Err(LabError::config("t1_grid_us must be a nonempty list of finite times"));
        }
        if self.windows_ns.is_empty() || self.windows_ns.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(LabError::config("windows_ns must be a nonempty list of positive durations"));
        }
        if !(1..=2).contains(&self.polarization_modes) {
            return Err(LabError::config(format!("polarization_modes must be 1 or 2, got {}", self.polarization_modes)));
        }
        self.reading()?;
        self.initial_level()?;
        Ok(())
    }

    pub fn reading(&self) -> Result<IntracavityReading> {
        self.intracavity_reading.parse().map_err(|_| {
            LabError::config(format!(
                "intracavity_reading must be \"integrated\" or \"peak\", got {:?}",
                self.intracavity_reading
            ))
        })
    }

    pub fn initial_level(&self) -> Result<Level> {
        match self.initial_level.as_str() {
            "a" => Ok(Level::A),
            "b" => Ok(Level::B),
            other => Err(LabError::config(format!("initial_level must be \"a\" or \"b\", got {other:?}"))),
        }
    }

    /// Physical parameters with mirrors split evenly around the configured
    /// loss (zero loss when it is left to calibration).
    pub fn base_params(&self) -> SystemParams {
        let kappa = self.kappa_mhz_over_2pi * MHZ_2PI;
        let loss = self.kappa_loss_mhz_over_2pi.unwrap_or(0.0) * MHZ_2PI;
        SystemParams {
            g: self.g_mhz_over_2pi * MHZ_2PI,
            delta: self.delta_mhz_over_2pi * MHZ_2PI,
            delta2: self.delta2_mhz_over_2pi * MHZ_2PI,
            fock_cutoff: self.fock_cutoff,
            ..SystemParams::default()
        }
        .with_symmetric_mirrors(kappa, loss)
        .with_branching(self.gamma_mhz_over_2pi * MHZ_2PI, self.branching_to_a)
    }

    /// Pulse timings with every toggle except `λ₁` off; each measurement
    /// switches on what it needs.
    pub fn schedule(&self) -> ScheduleConfig {
        ScheduleConfig {
            lambda1_on: self.lambda1_on,
            t1: self.t1_ns * 1e-9,
            delta_t: self.delta_t_us * 1e-6,
            theta: self.theta_rad,
            lambda2_offset: self.lambda2_offset_ns * 1e-9,
            omega_max: self.omega_max_mhz_over_2pi * MHZ_2PI,
            edge_time: self.edge_time_ns * 1e-9,
            lambda_width: self.lambda_width_ns * 1e-9,
            n_bar_1: self.n_bar_in,
            n_bar_2: self.lambda2_n_bar,
            ..ScheduleConfig::default()
        }
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            tolerances: Tolerances { atol: self.atol, rtol: self.rtol },
            sample_dt: self.sample_dt_ns * 1e-9,
            ..SolverOptions::default()
        }
    }

    pub fn setup(&self, params: SystemParams) -> Setup {
        Setup {
            params,
            schedule: self.schedule(),
            solver: self.solver(),
            readout: self.readout_us * 1e-6,
            settle: self.settle_ns * 1e-9,
        }
    }

    pub fn t1_grid(&self) -> Vec<f64> {
        self.t1_grid_us.iter().map(|t| t * 1e-6).collect()
    }

    pub fn theta_grid(&self) -> Vec<f64> {
        let n = self.theta_points;
        (0..n).map(|k| self.theta_rad + TAU * k as f64 / n as f64).collect()
    }

    pub fn windows(&self) -> Vec<f64> {
        self.windows_ns.iter().map(|w| w * 1e-9).collect()
    }

    /// Config file, then `$CQED_OUT_DIR`, then `./out`.
    pub fn out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    /// `key = value` lines of every result-relevant key, sorted by key.
    pub fn echo(&self) -> Vec<String> {
        let mut table = toml::Table::try_from(self).expect("config serializes");
        for key in EXECUTION_KEYS {
            table.remove(key);
        }
        table.iter().map(|(k, v)| format!("{k} = {v}")).collect()
    }
}

fn key_hint(err: &toml::de::Error, text: &str) -> String {
    err.span()
        .and_then(|span| text[..span.start].lines().last().map(|l| l.to_string()))
        .and_then(|line| line.split('=').next().map(|k| k.trim().to_string()))
        .filter(|k| !k.is_empty())
        .map(|k| format!(" (key `{k}`)"))
        .unwrap_or_default()
}
