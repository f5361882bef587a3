//! The measurement sequences: single-photon emission, absorption with and
//! without `Ω₁`, the `t₁` sweep and the `θ` fringe scan.
//!
//! Every driver takes the pulse timings from [`Setup::schedule`] and switches
//! pulses on or off as the measurement requires. The `λ₁` toggle is honored
//! as configured.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::schedule::{make_schedule, PulseSchedule, ScheduleConfig, ScheduleWarning};
use crate::analysis::{fit_visibility, spans_full_period, partition_coherent, place_window, window_count, FringeFit, PartitionResult};
use crate::dynamics::master::integrate_with_model;
use crate::dynamics::{
    Model, SolverOptions, TimeSeries, TrajectoryEnsemble, TrajectoryOptions, TrajectoryRecord, TrajectoryRunner,
};
use crate::error::{Error, Result};
use crate::hilbert::{Level, State};
use crate::linalg::C64;
use crate::params::SystemParams;

#[derive(Clone, Debug, PartialEq)]
pub struct Setup {
    pub params: SystemParams,
    pub schedule: ScheduleConfig,
    pub solver: SolverOptions,
    /// Photon counting window after the start of the `Ω₂` rise.
    pub readout: f64,
    /// Wait after `λ₁` and the `Ω₁` fall before the transfer is read.
    pub settle: f64,
}

impl Setup {
    /// 1 μs readout, 300 ns settling, default solver.
    pub fn new(params: SystemParams, schedule: ScheduleConfig) -> Self {
        Self { params, schedule, solver: SolverOptions::default(), readout: 1e-6, settle: 300e-9 }
    }

    fn build(&self, config: &ScheduleConfig) -> Result<PulseSchedule> {
        Ok(make_schedule(config, &self.params)?.0)
    }

    pub fn warnings(&self) -> Result<Vec<ScheduleWarning>> {
        Ok(make_schedule(&self.schedule, &self.params)?.1)
    }

    fn coarse(&self, span: (f64, f64)) -> SolverOptions {
        SolverOptions { sample_dt: span.1 - span.0, ..self.solver.clone() }
    }
}

fn run_master(model: &Model, initial: &State, schedule: &PulseSchedule, span: (f64, f64), options: &SolverOptions) -> Result<(TimeSeries, State)> {
    let run = integrate_with_model(model, initial, schedule, span, options)?;
    Ok((run.series, run.final_state))
}

/// Emitted flux of one `Ω₂` rise.
#[derive(Clone, Debug)]
pub struct EmissionRecord {
    pub series: TimeSeries,
    /// `∫ 2κ_out⟨a†a⟩ dt` over the readout.
    pub emission_probability: f64,
    /// Flux divided by its integral; all zeros when nothing is emitted.
    pub mode_shape: Vec<f64>,
    pub final_state: State,
}

/// Applies `Ω₂` alone to `initial` over `[Δt, Δt + readout]`.
pub fn run_single_photon(setup: &Setup, initial: &State) -> Result<EmissionRecord> {
    let schedule = setup.build(&setup.schedule.with_pulses(false, true, false, false))?;
    let model = Model::new(&setup.params)?;
    let dt = setup.schedule.delta_t;
    let (series, final_state) = run_master(&model, initial, &schedule, (dt, dt + setup.readout), &setup.solver)?;
    let emission_probability = window_count(&series, dt, setup.readout)?;
    let mode_shape = if emission_probability > 0.0 {
        series.flux_out.iter().map(|f| f / emission_probability).collect()
    } else {
        vec![0.0; series.len()]
    };
    Ok(EmissionRecord { series, emission_probability, mode_shape, final_state })
}

/// The absorption half of the sequence: atom in `|b,0⟩`, `λ₁` centered at
/// `t1`, `Ω₁` optional, nothing else.
#[derive(Clone, Debug)]
pub struct AbsorptionPlan {
    pub schedule: PulseSchedule,
    pub span: (f64, f64),
    pub initial: State,
    pub params: SystemParams,
}

impl AbsorptionPlan {
    pub fn new(setup: &Setup, t1: f64, omega1_on: bool) -> Result<Self> {
        let lambda1 = setup.schedule.lambda1_on;
        let config = ScheduleConfig { t1, ..setup.schedule.with_pulses(omega1_on, false, lambda1, false) };
        let schedule = setup.build(&config)?;
        let start = (t1 - config.lambda_half_support()).min(0.0);
        // populations are frozen once λ₁ and Ω₁ are over; reading at or after
        // Δt is the same measurement
        let end = config.delta_t.max(schedule.absorption_end() + setup.settle);
        let initial = State::basis(setup.params.space()?, Level::B, 0);
        Ok(Self { schedule, span: (start, end), initial, params: setup.params })
    }

    /// Measurement time: just before the `Ω₂` rise.
    pub fn readout_time(&self) -> f64 {
        self.span.1
    }

    pub fn runner(&self, options: TrajectoryOptions) -> Result<TrajectoryRunner<'_, PulseSchedule>> {
        TrajectoryRunner::new(&self.initial, &self.schedule, &self.params, self.span, options)
    }

    pub fn trajectory_options(&self, setup: &Setup) -> TrajectoryOptions {
        TrajectoryOptions { tolerances: setup.solver.tolerances, ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AbsorptionRecord {
    pub t1: f64,
    pub omega1_on: bool,
    /// `P_a` just before the `Ω₂` rise.
    pub p: f64,
    /// Photons out of `M_out` within the readout after the `Ω₂` rise.
    pub detection_prob: f64,
    pub readout_time: f64,
}

/// Clips integrator round-off (of order the tolerances) back into `[0, 1]`.
fn probability(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

/// `P_a` just before `Ω₂`, from the master equation.
pub fn transfer_probability(setup: &Setup, t1: f64, omega1_on: bool) -> Result<f64> {
    let plan = AbsorptionPlan::new(setup, t1, omega1_on)?;
    let model = Model::new(&setup.params)?;
    let (_, state) = run_master(&model, &plan.initial, &plan.schedule, plan.span, &setup.coarse(plan.span))?;
    Ok(probability(state.ground_populations().a))
}

/// Absorbs `λ₁`, then reads the transfer out with an `Ω₂` rise.
pub fn run_absorption(setup: &Setup, t1: f64, omega1_on: bool) -> Result<AbsorptionRecord> {
    let plan = AbsorptionPlan::new(setup, t1, omega1_on)?;
    let model = Model::new(&setup.params)?;
    let (_, state) = run_master(&model, &plan.initial, &plan.schedule, plan.span, &setup.coarse(plan.span))?;
    let p = probability(state.ground_populations().a);
    let t_read = plan.readout_time();
    let readout = plan.schedule.with_pulses(omega1_on, true, setup.schedule.lambda1_on, false).with_delta_t(t_read);
    let span = (t_read, t_read + setup.readout);
    let (series, _) = run_master(&model, &state, &readout, span, &setup.solver)?;
    let detection_prob = probability(window_count(&series, t_read, setup.readout)?);
    Ok(AbsorptionRecord { t1, omega1_on, p, detection_prob, readout_time: t_read })
}

/// `p_i`: transfer with `Ω₁` off. Independent of `t₁`.
pub fn incoherent_reference(setup: &Setup) -> Result<f64> {
    let p_i = transfer_probability(setup, setup.schedule.t1, false)?;
    if !(p_i > 0.0) {
        return Err(Error::DegenerateRatio(format!("incoherent transfer probability is {p_i:e}")));
    }
    Ok(p_i)
}

/// Trajectory index for trajectory `traj` of grid point `point`; keeps every
/// (point, trajectory) pair on its own random stream.
pub fn trajectory_stream(point: usize, traj: usize) -> u64 {
    ((point as u64) << 32) | traj as u64
}

/// Absorption trajectories `0..n_traj` of one sweep point.
pub fn absorption_trajectories(
    setup: &Setup,
    point: usize,
    t1: f64,
    omega1_on: bool,
    n_traj: usize,
    seed: u64,
) -> Result<TrajectoryEnsemble> {
    let plan = AbsorptionPlan::new(setup, t1, omega1_on)?;
    let runner = plan.runner(plan.trajectory_options(setup))?;
    let records = (0..n_traj)
        .map(|k| runner.run(seed, trajectory_stream(point, k)))
        .collect::<Result<Vec<TrajectoryRecord>>>()?;
    Ok(TrajectoryEnsemble { seed, checkpoint_times: Vec::new(), records })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub t1: f64,
    pub p_a: f64,
    pub partition: Option<PartitionResult>,
}

/// One `t₁` grid point: master-equation `p_a` plus, for `n_traj > 0`, the
/// trajectory partition.
pub fn sweep_point(setup: &Setup, point: usize, t1: f64, n_traj: usize, seed: u64) -> Result<SweepPoint> {
    let p_a = transfer_probability(setup, t1, true)?;
    let partition = if n_traj > 0 {
        Some(partition_coherent(&absorption_trajectories(setup, point, t1, true, n_traj, seed)?)?)
    } else {
        None
    };
    Ok(SweepPoint { t1, p_a, partition })
}

/// `r = p_a/p_i` and its partition vs `t₁`. Partition columns are NaN when
/// the sweep ran without trajectories.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub t1: Vec<f64>,
    pub p_a: Vec<f64>,
    pub p_i: f64,
    pub r: Vec<f64>,
    pub r_c: Vec<f64>,
    pub r_i: Vec<f64>,
    pub r_c_err: Vec<f64>,
    pub r_i_err: Vec<f64>,
    pub n_traj: usize,
}

impl SweepResult {
    pub fn assemble(points: &[SweepPoint], p_i: f64, n_traj: usize) -> Result<Self> {
        if !(p_i > 0.0) {
            return Err(Error::DegenerateRatio(format!("incoherent transfer probability is {p_i:e}")));
        }
        let part = |f: fn(&PartitionResult) -> f64| -> Vec<f64> {
            points.iter().map(|p| p.partition.as_ref().map_or(f64::NAN, |x| f(x) / p_i)).collect()
        };
        Ok(Self {
            t1: points.iter().map(|p| p.t1).collect(),
            p_a: points.iter().map(|p| p.p_a).collect(),
            p_i,
            r: points.iter().map(|p| p.p_a / p_i).collect(),
            r_c: part(|x| x.p_c),
            r_i: part(|x| x.p_i_component),
            r_c_err: part(|x| x.p_c_err),
            r_i_err: part(|x| x.p_i_err),
            n_traj,
        })
    }

    /// Index of the largest `r`.
    pub fn peak_index(&self) -> usize {
        self.r.iter().enumerate().fold(0, |best, (i, &x)| if x > self.r[best] { i } else { best })
    }
}

/// Sequential arrival-time sweep.
pub fn sweep_arrival(setup: &Setup, t1_grid: &[f64], n_traj: usize, seed: u64) -> Result<SweepResult> {
    if t1_grid.is_empty() {
        return Err(Error::invalid("t1 grid is empty"));
    }
    let p_i = incoherent_reference(setup)?;
    let points = t1_grid
        .iter()
        .enumerate()
        .map(|(k, &t1)| sweep_point(setup, k, t1, n_traj, seed))
        .collect::<Result<Vec<_>>>()?;
    SweepResult::assemble(&points, p_i, n_traj)
}

/// State after everything that does not depend on `θ`, shared by all points
/// of a fringe scan.
#[derive(Clone, Debug)]
pub struct FringeBranch {
    pub omega1_on: bool,
    pub schedule: PulseSchedule,
    pub state: State,
    pub span: (f64, f64),
}

/// Runs the absorption part of the fringe sequence up to the first instant
/// `λ₂` is nonzero. `longest_window` sizes the span so any window placed
/// after the `Ω₂` rise fits.
pub fn prepare_fringe(setup: &Setup, omega1_on: bool, longest_window: f64) -> Result<FringeBranch> {
    if !(longest_window > 0.0) {
        return Err(Error::invalid("detection window must be > 0"));
    }
    let c = setup.schedule;
    let config = c.with_pulses(omega1_on, true, c.lambda1_on, true);
    let schedule = setup.build(&config)?;
    let start = (c.t1 - c.lambda_half_support()).min(0.0);
    let lambda2_start = c.lambda2_center() - c.lambda_half_support();
    let branch = lambda2_start.min(c.delta_t).max(start);
    let end = (c.lambda2_center() + c.lambda_half_support()).max(c.delta_t + c.edge_time) + longest_window;
    let model = Model::new(&setup.params)?;
    let initial = State::basis(setup.params.space()?, Level::B, 0);
    let state = if branch > start {
        run_master(&model, &initial, &schedule, (start, branch), &setup.coarse((start, branch)))?.1
    } else {
        initial
    };
    Ok(FringeBranch { omega1_on, schedule, state, span: (branch, end) })
}

/// Output track for one relative phase `theta`, continuing from `branch`.
pub fn fringe_point(setup: &Setup, branch: &FringeBranch, theta: f64) -> Result<TimeSeries> {
    let model = Model::new(&setup.params)?;
    Ok(run_master(&model, &branch.state, &branch.schedule.with_theta(theta), branch.span, &setup.solver)?.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FringeScan {
    pub omega1_on: bool,
    pub theta: Vec<f64>,
    pub window_start: f64,
    pub window_length: f64,
    /// `n(θ)`: photons out of `M_out` in the window.
    pub counts: Vec<f64>,
    /// `R(θ) = n(θ)/n(θ₀)`, `θ₀` the first grid phase.
    pub ratio: Vec<f64>,
    pub fit: FringeFit,
}

/// Time of the output-flux maximum at or after `after`.
pub fn flux_peak_time(series: &TimeSeries, after: f64) -> f64 {
    let mut best = None::<(f64, f64)>;
    for (&t, &f) in series.t.iter().zip(&series.flux_out) {
        if t >= after && best.is_none_or(|(_, b)| f > b) {
            best = Some((t, f));
        }
    }
    best.map_or(after, |(t, _)| t)
}

/// Places a window of `window_length` on the emission peak of the `θ₀` track
/// (never before the `Ω₂` rise), counts photons in every track and fits.
pub fn scan_from_series(setup: &Setup, omega1_on: bool, theta: &[f64], series: &[TimeSeries], window_length: f64) -> Result<FringeScan> {
    if theta.len() != series.len() || series.is_empty() {
        return Err(Error::invalid("one track per phase required"));
    }
    let first = &series[0];
    let (lo, hi) = (first.t[0], *first.t.last().expect("nonempty"));
    let rise = setup.schedule.delta_t;
    let center = flux_peak_time(first, rise);
    let window_start = place_window(center, window_length, rise.max(lo), hi);
    let counts = series.iter().map(|s| window_count(s, window_start, window_length)).collect::<Result<Vec<_>>>()?;
    if !(counts[0] > 0.0) {
        return Err(Error::DegenerateRatio("no photons at the reference phase".into()));
    }
    let ratio: Vec<f64> = counts.iter().map(|n| n / counts[0]).collect();
    let fit = fit_visibility(theta, &ratio)?;
    Ok(FringeScan { omega1_on, theta: theta.to_vec(), window_start, window_length, counts, ratio, fit })
}

fn check_theta(theta: &[f64]) -> Result<()> {
    let n = theta.len();
    if n < 4 {
        return Err(Error::invalid("need at least 4 phases"));
    }
    if !spans_full_period(theta) {
        return Err(Error::invalid("theta grid must span 2π"));
    }
    Ok(())
}

/// Sequential fringe scan for several windows from the same tracks.
pub fn run_fringe_windows(setup: &Setup, theta: &[f64], windows: &[f64], omega1_on: bool) -> Result<Vec<FringeScan>> {
    check_theta(theta)?;
    let longest = windows.iter().copied().fold(0.0, f64::max);
    let branch = prepare_fringe(setup, omega1_on, longest)?;
    let series = theta.iter().map(|&th| fringe_point(setup, &branch, th)).collect::<Result<Vec<_>>>()?;
    windows.iter().map(|&w| scan_from_series(setup, omega1_on, theta, &series, w)).collect()
}

pub fn run_fringe(setup: &Setup, theta: &[f64], window: f64, omega1_on: bool) -> Result<FringeScan> {
    Ok(run_fringe_windows(setup, theta, &[window], omega1_on)?.remove(0))
}

/// Adiabatic and incoherent curves for one window.
#[derive(Clone, Debug, PartialEq)]
pub struct FringeResult {
    pub theta: Vec<f64>,
    pub window: f64,
    pub n_a: Vec<f64>,
    pub n_i: Vec<f64>,
    pub r_a: Vec<f64>,
    pub r_i: Vec<f64>,
    pub fit_a: FringeFit,
    pub fit_i: FringeFit,
}

impl FringeResult {
    pub fn new(adiabatic: &FringeScan, incoherent: &FringeScan) -> Result<Self> {
        if adiabatic.theta != incoherent.theta || adiabatic.window_length != incoherent.window_length {
            return Err(Error::invalid("scans differ in phases or window"));
        }
        Ok(Self {
            theta: adiabatic.theta.clone(),
            window: adiabatic.window_length,
            n_a: adiabatic.counts.clone(),
            n_i: incoherent.counts.clone(),
            r_a: adiabatic.ratio.clone(),
            r_i: incoherent.ratio.clone(),
            fit_a: adiabatic.fit,
            fit_i: incoherent.fit,
        })
    }
}

/// Output fields `√(2κ_out)⟨a⟩` of the two halves of the fringe sequence run
/// separately: `alpha` from `Ω₂` acting on the absorbed state, `beta` from
/// `λ₂` with the atom in F=4.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapFields {
    pub t: Vec<f64>,
    pub alpha: Vec<C64>,
    pub beta: Vec<C64>,
}

pub fn overlap_fields(setup: &Setup, branch: &FringeBranch) -> Result<OverlapFields> {
    let model = Model::new(&setup.params)?;
    let c = &branch.schedule.config;
    let alpha_schedule = branch.schedule.with_pulses(c.omega1_on, true, c.lambda1_on, false);
    let beta_schedule = branch.schedule.with_pulses(false, false, false, true);
    let (a, _) = run_master(&model, &branch.state, &alpha_schedule, branch.span, &setup.solver)?;
    let ground = State::basis(setup.params.space()?, Level::B, 0);
    let (b, _) = run_master(&model, &ground, &beta_schedule, branch.span, &setup.solver)?;
    let s = libm::sqrt(2.0 * setup.params.kappa_out);
    Ok(OverlapFields {
        t: a.t,
        alpha: a.field.iter().map(|z| z * s).collect(),
        beta: b.field.iter().map(|z| z * s).collect(),
    })
}
