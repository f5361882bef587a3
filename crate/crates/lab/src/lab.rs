//! Runs the measurements for one resolved configuration on a worker pool and
//! turns the results into tables and summaries.

use std::fmt::Write as _;
use std::path::PathBuf;

use cqed_core::analysis::{overlap_visibility, partition_coherent};
use cqed_core::dynamics::validate::run_case;
use cqed_core::dynamics::{
    integrate_master, AnalyticCase, TimeSeries, TrajectoryEnsemble, TrajectoryRecord, ValidationReport,
};
use cqed_core::params::MHZ_2PI;
use cqed_core::protocol::{
    calibrate_input, efficiency_budget, fringe_point, incoherent_reference, prepare_fringe, overlap_fields,
    run_absorption, run_single_photon, scan_from_series, trajectory_stream, transfer_efficiency,
    transfer_probability, AbsorptionPlan, AbsorptionRecord, Calibration, EmissionRecord, FringeResult, FringeScan,
    Setup, SweepPoint, SweepResult,
};
use cqed_core::{State, SystemParams};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{Context, LabError, Result};
use crate::output::{fmt_f64, write_atomic, CsvTable};

pub const SWEEP_SCHEMA: &str = "sweep/1";
pub const FRINGE_SCHEMA: &str = "fringe/1";
pub const EMISSION_SCHEMA: &str = "emission/1";
pub const TIMESERIES_SCHEMA: &str = "timeseries/1";

/// One detection window of a fringe scan.
#[derive(Clone, Debug)]
pub struct FringeWindow {
    pub result: FringeResult,
    pub adiabatic: FringeScan,
    pub incoherent: FringeScan,
    /// Visibility expected from the overlap of the separately run `α`, `β`
    /// fields over the same window.
    pub overlap: f64,
}

#[derive(Clone, Debug)]
pub struct AbsorbReport {
    pub adiabatic: AbsorptionRecord,
    pub incoherent: AbsorptionRecord,
    pub r: f64,
    pub zeta: f64,
    /// Adiabatic absorption track up to the readout time.
    pub series: TimeSeries,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EfficiencyReport {
    pub polarization_modes: u32,
    /// Symmetric lossless mirrors.
    pub budget_lossless: f64,
    /// Mirror rates in use.
    pub budget: f64,
    /// Same rates, one polarization mode.
    pub budget_single_mode: f64,
    pub p_a: f64,
    pub zeta: f64,
}

/// Resolved parameters plus the worker pool.
pub struct Lab {
    pub config: RunConfig,
    pub params: SystemParams,
    pub calibration: Option<Calibration>,
    pool: rayon::ThreadPool,
}

impl Lab {
    /// Validates `config` and calibrates the scatter loss when it is not given.
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let base = config.base_params();
        let calibration = match config.kappa_loss_mhz_over_2pi {
            Some(_) => None,
            None => Some(
                calibrate_input(
                    config.n_bar_in,
                    config.intracavity_target,
                    config.reading()?,
                    config.lambda_width_ns * 1e-9,
                    &base,
                )
                .context("calibration")?,
            ),
        };
        let params = calibration.map_or(base, |c| c.params);
        params.validate().context("parameters")?;
        config.setup(params).warnings().context("schedule")?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| LabError::config(format!("workers: {e}")))?;
        Ok(Self { config, params, calibration, pool })
    }

    pub fn setup(&self) -> Setup {
        self.config.setup(self.params)
    }

    /// Quantities computed from the config rather than given in it.
    pub fn derived(&self) -> Vec<(String, f64)> {
        let p = &self.params;
        let mut d = vec![
            ("kappa_in_mhz_over_2pi".to_string(), p.kappa_in / MHZ_2PI),
            ("kappa_out_mhz_over_2pi".to_string(), p.kappa_out / MHZ_2PI),
            ("kappa_loss_mhz_over_2pi".to_string(), p.kappa_loss / MHZ_2PI),
        ];
        if let Some(c) = &self.calibration {
            d.push(("calibrated_content".to_string(), c.content));
        }
        d
    }

    fn table(&self, schema: &str, columns: Vec<&'static str>) -> CsvTable {
        CsvTable::new(schema, self.config.seed, &self.derived(), &self.config.echo(), columns)
    }

    pub fn validate(&self) -> Result<Vec<ValidationReport>> {
        self.pool.install(|| AnalyticCase::ALL.par_iter().map(|&c| run_case(c).context("validation")).collect())
    }

    pub fn single_photon(&self) -> Result<EmissionRecord> {
        let space = self.params.space().context("parameters")?;
        let initial = State::basis(space, self.config.initial_level()?, 0);
        run_single_photon(&self.setup(), &initial).context("single-photon")
    }

    pub fn absorb(&self) -> Result<AbsorbReport> {
        let setup = self.setup();
        let t1 = setup.schedule.t1;
        let (adiabatic, incoherent) = self.pool.install(|| {
            rayon::join(|| run_absorption(&setup, t1, true), || run_absorption(&setup, t1, false))
        });
        let (adiabatic, incoherent) = (adiabatic.context("absorption")?, incoherent.context("absorption")?);
        if !(incoherent.p > 0.0) {
            return Err(cqed_core::Error::DegenerateRatio("incoherent transfer probability is 0".into()))
                .context("absorption");
        }
        let plan = AbsorptionPlan::new(&setup, t1, true).context("absorption")?;
        let run = integrate_master(&plan.initial, &plan.schedule, &plan.params, plan.span, &setup.solver)
            .context("absorption")?;
        Ok(AbsorbReport {
            r: adiabatic.p / incoherent.p,
            zeta: transfer_efficiency(adiabatic.p, self.config.n_bar_in).unwrap_or(f64::NAN),
            adiabatic,
            incoherent,
            series: run.series,
        })
    }

    /// `p_a(t₁)` on the grid, the incoherent reference and, for `n_traj > 0`,
    /// the trajectory partition. Every (point, trajectory) pair has its own
    /// random stream, so the result does not depend on the worker count.
    pub fn sweep(&self) -> Result<SweepResult> {
        let setup = self.setup();
        let grid = self.config.t1_grid();
        let (n_traj, seed) = (self.config.n_traj, self.config.seed);
        self.pool.install(|| {
            let p_i = incoherent_reference(&setup).context("sweep")?;
            let p_a = grid
                .par_iter()
                .map(|&t1| transfer_probability(&setup, t1, true).context("sweep"))
                .collect::<Result<Vec<f64>>>()?;
            let partitions = if n_traj > 0 {
                let plans = grid
                    .iter()
                    .map(|&t1| AbsorptionPlan::new(&setup, t1, true))
                    .collect::<cqed_core::Result<Vec<_>>>()
                    .context("sweep")?;
                let runners = plans
                    .iter()
                    .map(|p| p.runner(p.trajectory_options(&setup)))
                    .collect::<cqed_core::Result<Vec<_>>>()
                    .context("sweep")?;
                let records = (0..grid.len() * n_traj)
                    .into_par_iter()
                    .map(|j| {
                        let (point, traj) = (j / n_traj, j % n_traj);
                        runners[point].run(seed, trajectory_stream(point, traj)).context("trajectories")
                    })
                    .collect::<Result<Vec<TrajectoryRecord>>>()?;
                records
                    .chunks(n_traj)
                    .map(|c| {
                        let ensemble = TrajectoryEnsemble { seed, checkpoint_times: Vec::new(), records: c.to_vec() };
                        partition_coherent(&ensemble).map(Some).context("partition")
                    })
                    .collect::<Result<Vec<_>>>()?
            } else {
                vec![None; grid.len()]
            };
            let points: Vec<SweepPoint> = grid
                .iter()
                .zip(p_a)
                .zip(partitions)
                .map(|((&t1, p_a), partition)| SweepPoint { t1, p_a, partition })
                .collect();
            SweepResult::assemble(&points, p_i, n_traj).context("sweep")
        })
    }

    /// Adiabatic and incoherent fringes for every configured window.
    pub fn fringe(&self) -> Result<Vec<FringeWindow>> {
        let setup = self.setup();
        let theta = self.config.theta_grid();
        let windows = self.config.windows();
        let longest = windows.iter().copied().fold(0.0, f64::max);
        let n = theta.len();
        self.pool.install(|| {
            let branches = [true, false]
                .par_iter()
                .map(|&on| prepare_fringe(&setup, on, longest).context("fringe"))
                .collect::<Result<Vec<_>>>()?;
            let series = (0..2 * n)
                .into_par_iter()
                .map(|j| fringe_point(&setup, &branches[j / n], theta[j % n]).context("fringe"))
                .collect::<Result<Vec<TimeSeries>>>()?;
            let fields = overlap_fields(&setup, &branches[0]).context("overlap")?;
            windows
                .iter()
                .map(|&w| {
                    let adiabatic = scan_from_series(&setup, true, &theta, &series[..n], w).context("fringe")?;
                    let incoherent = scan_from_series(&setup, false, &theta, &series[n..], w).context("fringe")?;
                    let result = FringeResult::new(&adiabatic, &incoherent).context("fringe")?;
                    let overlap =
                        overlap_visibility(&fields.t, &fields.alpha, &fields.beta, adiabatic.window_start, w)
                            .context("overlap")?;
                    Ok(FringeWindow { result, adiabatic, incoherent, overlap })
                })
                .collect()
        })
    }

    pub fn efficiency(&self) -> Result<EfficiencyReport> {
        let p = &self.params;
        let modes = self.config.polarization_modes;
        let mirrors = p.kappa_in + p.kappa_out;
        let budget_lossless = efficiency_budget(0.5 * mirrors, 0.5 * mirrors, 0.0, modes).context("efficiency")?;
        let budget = efficiency_budget(p.kappa_in, p.kappa_out, p.kappa_loss, modes).context("efficiency")?;
        let budget_single_mode = efficiency_budget(p.kappa_in, p.kappa_out, p.kappa_loss, 1).context("efficiency")?;
        let p_a = transfer_probability(&self.setup(), self.setup().schedule.t1, true).context("efficiency")?;
        let zeta = transfer_efficiency(p_a, self.config.n_bar_in).context("efficiency")?;
        Ok(EfficiencyReport { polarization_modes: modes, budget_lossless, budget, budget_single_mode, p_a, zeta })
    }

    pub fn sweep_table(&self, s: &SweepResult) -> CsvTable {
        let mut t = self.table(SWEEP_SCHEMA, vec!["t1_s", "r", "r_c", "r_i", "r_c_err", "r_i_err"]);
        for i in 0..s.t1.len() {
            t.push(vec![s.t1[i], s.r[i], s.r_c[i], s.r_i[i], s.r_c_err[i], s.r_i_err[i]]);
        }
        t.footer("p_i", s.p_i);
        t.footer("n_traj", s.n_traj as f64);
        t
    }

    pub fn fringe_table(&self, w: &FringeWindow) -> CsvTable {
        let r = &w.result;
        let mut t = self.table(FRINGE_SCHEMA, vec!["theta_rad", "n_a", "n_i", "R_a", "R_i"]);
        for i in 0..r.theta.len() {
            t.push(vec![r.theta[i], r.n_a[i], r.n_i[i], r.r_a[i], r.r_i[i]]);
        }
        t.footer("v", r.fit_a.v);
        t.footer("phi", r.fit_a.phi);
        t.footer("sigma_v", r.fit_a.sigma_v);
        t.footer("rms_residual", r.fit_a.rms_residual);
        t.footer("v_i", r.fit_i.v);
        t.footer("sigma_v_i", r.fit_i.sigma_v);
        t.footer("v_est", w.overlap);
        t.footer("window_start_s", w.adiabatic.window_start);
        t.footer("window_s", r.window);
        t
    }

    pub fn emission_table(&self, e: &EmissionRecord) -> CsvTable {
        let s = &e.series;
        let mut t = self.table(EMISSION_SCHEMA, vec!["t_s", "flux_out_per_s", "P_a", "P_b", "P_e", "n_cav"]);
        for i in 0..s.len() {
            t.push(vec![s.t[i], s.flux_out[i], s.p_a[i], s.p_b[i], s.p_e[i], s.n_cav[i]]);
        }
        t.footer("emission_probability", e.emission_probability);
        t
    }

    pub fn timeseries_table(&self, s: &TimeSeries) -> CsvTable {
        let mut t =
            self.table(TIMESERIES_SCHEMA, vec!["t_s", "P_a", "P_b", "P_e", "n_cav", "flux_out_per_s", "re_a", "im_a"]);
        for i in 0..s.len() {
            t.push(vec![s.t[i], s.p_a[i], s.p_b[i], s.p_e[i], s.n_cav[i], s.flux_out[i], s.field[i].re, s.field[i].im]);
        }
        t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Validate,
    SinglePhoton,
    Absorb,
    Sweep,
    Fringe,
    Efficiency,
}

/// What a command printed and wrote.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub summary: String,
    pub files: Vec<PathBuf>,
}

struct Summary(String);

impl Summary {
    fn new(title: &str, lab: &Lab) -> Self {
        let mut s = Summary(String::new());
        writeln!(s.0, "{title}").unwrap();
        writeln!(s.0, "{}", "=".repeat(title.chars().count())).unwrap();
        for (k, v) in lab.derived() {
            s.line(&k, v);
        }
        s
    }

    fn line(&mut self, key: &str, value: f64) {
        writeln!(self.0, "{key:<28} {}", fmt_f64(value)).unwrap();
    }

    fn text(&mut self, key: &str, value: &str) {
        writeln!(self.0, "{key:<28} {value}").unwrap();
    }
}

/// Runs `command`, writes its artifacts into the output directory and
/// returns the summary.
pub fn run(command: Command, config: RunConfig) -> Result<Outcome> {
    let lab = Lab::new(config)?;
    let dir = lab.config.out_dir();
    let mut files = Vec::new();
    let mut write = |name: &str, text: String| -> Result<()> {
        files.push(write_atomic(&dir.join(name), &text)?);
        Ok(())
    };
    let summary = match command {
        Command::Validate => {
            let reports = lab.validate()?;
            let mut s = Summary::new("analytic validation", &lab);
            let mut failed = Vec::new();
            for r in &reports {
                let verdict = if r.passed { "PASS" } else { "FAIL" };
                s.text(r.case.id(), &format!("{verdict}  max_error {} (threshold {})", fmt_f64(r.max_error), fmt_f64(r.threshold)));
                if !r.passed {
                    failed.push(r.case.id());
                }
            }
            write("summary.txt", s.0.clone())?;
            if !failed.is_empty() {
                return Err(LabError::Validation(failed.join(", ")));
            }
            s.0
        }
        Command::SinglePhoton => {
            let e = lab.single_photon()?;
            write("emission.csv", lab.emission_table(&e).render())?;
            let mut s = Summary::new("single-photon emission", &lab);
            s.text("initial_level", &lab.config.initial_level);
            s.line("emission_probability", e.emission_probability);
            write("summary.txt", s.0.clone())?;
            s.0
        }
        Command::Absorb => {
            let a = lab.absorb()?;
            write("timeseries.csv", lab.timeseries_table(&a.series).render())?;
            let mut s = Summary::new("absorption", &lab);
            s.line("t1_s", a.adiabatic.t1);
            s.line("p_a", a.adiabatic.p);
            s.line("p_i", a.incoherent.p);
            s.line("r", a.r);
            s.line("detection_prob_adiabatic", a.adiabatic.detection_prob);
            s.line("detection_prob_incoherent", a.incoherent.detection_prob);
            s.line("zeta", a.zeta);
            write("summary.txt", s.0.clone())?;
            s.0
        }
        Command::Sweep => {
            let r = lab.sweep()?;
            write("sweep.csv", lab.sweep_table(&r).render())?;
            let mut s = Summary::new("arrival-time sweep", &lab);
            let k = r.peak_index();
            s.line("p_i", r.p_i);
            s.line("r_max", r.r[k]);
            s.line("t1_at_r_max_s", r.t1[k]);
            s.line("r_c_at_r_max", r.r_c[k]);
            s.line("r_i_at_r_max", r.r_i[k]);
            s.line("n_traj", r.n_traj as f64);
            write("summary.txt", s.0.clone())?;
            s.0
        }
        Command::Fringe => {
            let windows = lab.fringe()?;
            let mut s = Summary::new("fringe scan", &lab);
            for (i, (w, ns)) in windows.iter().zip(&lab.config.windows_ns).enumerate() {
                let tag = format!("{}ns", fmt_f64(*ns));
                let name = if i == 0 { "fringe.csv".to_string() } else { format!("fringe_{tag}.csv") };
                write(&name, lab.fringe_table(w).render())?;
                s.line(&format!("v_a[{tag}]"), w.result.fit_a.v);
                s.line(&format!("sigma_v_a[{tag}]"), w.result.fit_a.sigma_v);
                s.line(&format!("v_i[{tag}]"), w.result.fit_i.v);
                s.line(&format!("v_est[{tag}]"), w.overlap);
            }
            write("summary.txt", s.0.clone())?;
            s.0
        }
        Command::Efficiency => {
            let e = lab.efficiency()?;
            let mut s = Summary::new("transfer efficiency", &lab);
            s.line("polarization_modes", e.polarization_modes as f64);
            s.line("zeta_max_lossless", e.budget_lossless);
            s.line("zeta_max", e.budget);
            s.line("zeta_max_single_mode", e.budget_single_mode);
            s.line("p_a", e.p_a);
            s.line("zeta", e.zeta);
            write("summary.txt", s.0.clone())?;
            s.0
        }
    };
    Ok(Outcome { summary, files })
}
