//! Time-dependent Lindblad master equation integration.

use alloc::vec::Vec;

use super::model::{Drive, Model};
use super::ode::{DormandPrince, Tolerances};
use crate::error::{Error, Result};
use crate::hilbert::{Populations, State};
use crate::linalg::{Matrix, C64, ZERO};
use crate::params::SystemParams;

/// Trace drift beyond this aborts an integration.
pub const TRACE_FAILURE_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub tolerances: Tolerances,
    /// Spacing of the output grid (s).
    pub sample_dt: f64,
    /// Overrides the drive's own step bound.
    pub max_step: Option<f64>,
    /// Record the smallest eigenvalue of ρ at every sample.
    pub check_positivity: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tolerances: Tolerances::default(), sample_dt: 1e-9, max_step: None, check_positivity: false }
    }
}

/// Sampled expectation values of one master-equation run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub p_a: Vec<f64>,
    pub p_b: Vec<f64>,
    pub p_e: Vec<f64>,
    /// `⟨a†a⟩`
    pub n_cav: Vec<f64>,
    /// `2κ_out ⟨a†a⟩`, photons per second through the output mirror.
    pub flux_out: Vec<f64>,
    /// Coherent intracavity amplitude `⟨a⟩`.
    pub field: Vec<C64>,
    /// `|Tr ρ − 1|`
    pub trace_residual: Vec<f64>,
    /// `max |ρ − ρ†|`
    pub hermiticity_residual: Vec<f64>,
    pub min_eigenvalue: Option<Vec<f64>>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Index of the sample closest to `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        match self.t.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i >= self.t.len() => self.t.len() - 1,
            Err(i) => {
                if (self.t[i] - t).abs() < (t - self.t[i - 1]).abs() {
                    i
                } else {
                    i - 1
                }
            }
        }
    }

    pub fn populations_at(&self, i: usize) -> Populations {
        Populations { a: self.p_a[i], b: self.p_b[i], e: self.p_e[i] }
    }

    pub fn max_trace_residual(&self) -> f64 {
        self.trace_residual.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_hermiticity_residual(&self) -> f64 {
        self.hermiticity_residual.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_eigenvalue_overall(&self) -> Option<f64> {
        self.min_eigenvalue.as_ref().map(|v| v.iter().copied().fold(f64::INFINITY, f64::min))
    }

    fn push(&mut self, t: f64, model: &Model, rho: &[C64], check_positivity: bool) {
        let d = model.dim();
        let f = model.space().fock_dim();
        let mut p = [0.0; 3];
        let mut n_cav = 0.0;
        let mut trace = 0.0;
        let numbers = model.photon_number_diag();
        for i in 0..d {
            let x = rho[i * d + i].re;
            p[i / f] += x;
            n_cav += x * numbers[i];
            trace += x;
        }
        // ⟨a⟩ = Σ a_ij ρ_ji
        let mut field = ZERO;
        for &(i, j, v) in model.annihilation_sparse().entries() {
            field += v * rho[j * d + i];
        }
        let mut herm = 0.0f64;
        for i in 0..d {
            for j in i..d {
                herm = herm.max((rho[i * d + j] - rho[j * d + i].conj()).norm());
            }
        }
        self.t.push(t);
        self.p_a.push(p[0]);
        self.p_b.push(p[1]);
        self.p_e.push(p[2]);
        self.n_cav.push(n_cav);
        self.flux_out.push(2.0 * model.params().kappa_out * n_cav);
        self.field.push(field);
        self.trace_residual.push((trace - 1.0).abs());
        self.hermiticity_residual.push(herm);
        if check_positivity {
            let m = Matrix::from_row_major(d, rho.to_vec()).expect("square");
            self.min_eigenvalue.get_or_insert_with(Vec::new).push(m.hermitian_eigenvalues()[0]);
        }
    }
}

#[derive(Clone, Debug)]
pub struct MasterRun {
    pub series: TimeSeries,
    pub final_state: State,
}

/// Uniform grid `t0, t0+dt, …` ending exactly at `t1`.
pub fn sample_grid(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    let n = libm::ceil((t1 - t0) / dt - 1e-9).max(1.0) as usize;
    let mut grid: Vec<f64> = (0..n).map(|k| t0 + k as f64 * dt).collect();
    grid.push(t1);
    grid
}

pub(crate) fn step_bound<D: Drive + ?Sized>(drive: &D, override_step: Option<f64>, span: f64) -> f64 {
    override_step.or_else(|| drive.max_step()).unwrap_or(span / 10.0).min(span).max(f64::MIN_POSITIVE)
}

/// Integrates `dρ/dt` from `t_span.0` to `t_span.1`, sampling on a uniform
/// grid. The trace is never renormalized; its drift is recorded per sample.
pub fn integrate_master<D: Drive + ?Sized>(
    initial: &State,
    drive: &D,
    params: &SystemParams,
    t_span: (f64, f64),
    options: &SolverOptions,
) -> Result<MasterRun> {
    let model = Model::new(params)?;
    integrate_with_model(&model, initial, drive, t_span, options)
}

pub(crate) fn integrate_with_model<D: Drive + ?Sized>(
    model: &Model,
    initial: &State,
    drive: &D,
    (t0, t1): (f64, f64),
    options: &SolverOptions,
) -> Result<MasterRun> {
    if initial.space() != model.space() {
        return Err(Error::invalid("initial state space does not match params.fock_cutoff"));
    }
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::invalid("t_span must be finite and increasing"));
    }
    if !(options.sample_dt > 0.0) {
        return Err(Error::invalid("sample_dt must be > 0"));
    }
    let d = model.dim();
    let mut rho = initial.to_density_matrix().into_vec();
    let mut stepper = DormandPrince::new(d * d, options.tolerances, step_bound(drive, options.max_step, t1 - t0));
    let mut rhs = |t: f64, y: &[C64], dy: &mut [C64]| model.lindblad_rhs_into(&drive.controls(t), y, dy);

    let grid = sample_grid(t0, t1, options.sample_dt);
    let mut series = TimeSeries::default();
    let mut t = t0;
    for &ts in &grid {
        stepper.integrate_to(&mut rhs, &mut t, &mut rho, ts)?;
        series.push(ts, model, &rho, options.check_positivity);
        let residual = *series.trace_residual.last().expect("pushed");
        if residual > TRACE_FAILURE_THRESHOLD {
            return Err(Error::AccuracyFailure { t: ts, residual });
        }
    }
    let final_state =
        State::density(model.space(), Matrix::from_row_major(d, rho).expect("square")).expect("dimension checked");
    Ok(MasterRun { series, final_state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::dynamics::model::Controls;
    use crate::hilbert::Level;

    #[test]
    fn grid_shape() {
        let g = sample_grid(0.0, 1.0, 0.25);
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = sample_grid(0.0, 1.0, 0.3);
        assert_eq!(g.len(), 5);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rejects_bad_span() {
        let p = SystemParams::default();
        let s = p.space().unwrap();
        let r = integrate_master(&State::basis(s, Level::B, 0), &Controls::OFF, &p, (1.0, 0.0), &SolverOptions::default());
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn nearest_index_lookup() {
        let ts = TimeSeries { t: vec![0.0, 1.0, 2.0], ..Default::default() };
        assert_eq!(ts.nearest_index(-1.0), 0);
        assert_eq!(ts.nearest_index(0.4), 0);
        assert_eq!(ts.nearest_index(0.6), 1);
        assert_eq!(ts.nearest_index(2.0), 2);
        assert_eq!(ts.nearest_index(9.0), 2);
    }
}
