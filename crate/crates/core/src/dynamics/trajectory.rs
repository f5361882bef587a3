//! Monte-Carlo wavefunction unraveling of the master equation.
//!
//! Each trajectory evolves an unnormalized ket under `H_eff = H − (i/2)ΣL†L`
//! until its squared norm drops below a uniform random threshold. The jump
//! time is then refined by bisection, a channel is drawn in proportion to
//! `‖L_c ψ‖²`, the jump is applied and the ket renormalized.
//!
//! Trajectory `k` draws from the ChaCha stream `k` of a generator seeded with
//! the ensemble seed, so any subset of trajectories can be recomputed
//! independently and in any order.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::master::step_bound;
use super::model::{Channel, Drive, Model};
use super::ode::{DormandPrince, Tolerances};
use crate::error::{Error, Result};
use crate::hilbert::{Populations, State};
use crate::linalg::{C64, ZERO};
use crate::params::SystemParams;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jump {
    pub t: f64,
    pub channel: Channel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub index: u64,
    pub final_populations: Populations,
    pub jumps: Vec<Jump>,
    /// Normalized populations at [`TrajectoryOptions::checkpoints`].
    pub checkpoints: Vec<Populations>,
}

impl TrajectoryRecord {
    pub fn count(&self, channel: Channel) -> usize {
        self.jumps.iter().filter(|j| j.channel == channel).count()
    }

    pub fn spontaneous_jumps(&self) -> usize {
        self.jumps.iter().filter(|j| j.channel.is_spontaneous()).count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryEnsemble {
    pub seed: u64,
    pub checkpoint_times: Vec<f64>,
    pub records: Vec<TrajectoryRecord>,
}

/// Sample mean and standard error of the mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
}

impl MeanEstimate {
    pub fn from_samples(xs: impl Iterator<Item = f64> + Clone) -> Self {
        let n = xs.clone().count();
        if n == 0 {
            return Self { mean: f64::NAN, std_err: f64::NAN };
        }
        let mean = xs.clone().sum::<f64>() / n as f64;
        let var = if n > 1 { xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        Self { mean, std_err: libm::sqrt(var / n as f64) }
    }
}

impl TrajectoryEnsemble {
    pub fn n_traj(&self) -> usize {
        self.records.len()
    }

    /// Ensemble mean of the final `(P_a, P_b, P_e)` with standard errors.
    pub fn final_populations(&self) -> [MeanEstimate; 3] {
        let r = &self.records;
        [
            MeanEstimate::from_samples(r.iter().map(|x| x.final_populations.a)),
            MeanEstimate::from_samples(r.iter().map(|x| x.final_populations.b)),
            MeanEstimate::from_samples(r.iter().map(|x| x.final_populations.e)),
        ]
    }

    pub fn checkpoint_populations(&self, k: usize) -> [MeanEstimate; 3] {
        let r = &self.records;
        [
            MeanEstimate::from_samples(r.iter().map(|x| x.checkpoints[k].a)),
            MeanEstimate::from_samples(r.iter().map(|x| x.checkpoints[k].b)),
            MeanEstimate::from_samples(r.iter().map(|x| x.checkpoints[k].e)),
        ]
    }

    /// Fraction of trajectories with at least one jump on `channel`.
    pub fn fraction_with(&self, channel: Channel) -> f64 {
        self.records.iter().filter(|r| r.count(channel) > 0).count() as f64 / self.records.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryOptions {
    pub tolerances: Tolerances,
    pub max_step: Option<f64>,
    /// Times (within the span, ascending) at which populations are recorded.
    pub checkpoints: Vec<f64>,
    /// Jump-time resolution; defaults to `1e-3/κ` (or `1e-3/γ` without a cavity).
    pub jump_time_tol: Option<f64>,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self { tolerances: Tolerances::default(), max_step: None, checkpoints: Vec::new(), jump_time_tol: None }
    }
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Per-trajectory generator: stream `index` of the seeded ChaCha8 generator.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Shared setup for trajectories of one run; cheap to reuse across indices.
pub struct TrajectoryRunner<'a, D: ?Sized> {
    model: Model,
    initial: Vec<C64>,
    drive: &'a D,
    span: (f64, f64),
    options: TrajectoryOptions,
    jump_tol: f64,
}

impl<'a, D: Drive + ?Sized> TrajectoryRunner<'a, D> {
    pub fn new(
        initial: &State,
        drive: &'a D,
        params: &SystemParams,
        span: (f64, f64),
        options: TrajectoryOptions,
    ) -> Result<Self> {
        let model = Model::new(params)?;
        let ket = initial.as_ket().ok_or_else(|| Error::invalid("trajectories need a pure initial state"))?;
        if initial.space() != model.space() {
            return Err(Error::invalid("initial state space does not match params.fock_cutoff"));
        }
        if !(span.1 > span.0) {
            return Err(Error::invalid("t_span must be increasing"));
        }
        if options.checkpoints.iter().any(|&t| t < span.0 || t > span.1)
            || options.checkpoints.windows(2).any(|w| w[1] < w[0])
        {
            return Err(Error::invalid("checkpoints must be ascending and inside the span"));
        }
        let jump_tol = options.jump_time_tol.unwrap_or_else(|| {
            let k = params.kappa();
            let rate = if k > 0.0 { k } else { params.gamma() };
            if rate > 0.0 {
                1e-3 / rate
            } else {
                f64::INFINITY
            }
        });
        let norm = libm::sqrt(norm_sqr(ket));
        let initial = ket.iter().map(|z| z / norm).collect();
        Ok(Self { model, initial, drive, span, options, jump_tol })
    }

    pub fn run(&self, seed: u64, index: u64) -> Result<TrajectoryRecord> {
        let model = &self.model;
        let drive = self.drive;
        let d = model.dim();
        let (t0, t1) = self.span;
        let mut rng = trajectory_rng(seed, index);
        let mut psi = self.initial.clone();
        let mut saved = vec![ZERO; d];
        let mut trial = vec![ZERO; d];
        let mut scratch = vec![ZERO; d];
        let mut stepper = DormandPrince::new(d, self.options.tolerances, step_bound(drive, self.options.max_step, t1 - t0));
        let mut rhs = |t: f64, y: &[C64], dy: &mut [C64]| model.effective_rhs_into(&drive.controls(t), y, dy);
        let dissipative = model.has_dissipation();

        let checkpoints = &self.options.checkpoints;
        let mut next_ck = 0;
        let mut record = TrajectoryRecord {
            index,
            final_populations: Populations::default(),
            jumps: Vec::new(),
            checkpoints: Vec::with_capacity(checkpoints.len()),
        };
        let mut threshold: f64 = rng.random();
        let mut t = t0;
        loop {
            while next_ck < checkpoints.len() && t >= checkpoints[next_ck] {
                record.checkpoints.push(normalized_populations(model, &psi));
                next_ck += 1;
            }
            if t >= t1 {
                break;
            }
            let t_stop = checkpoints.get(next_ck).copied().unwrap_or(t1).min(t1);
            saved.copy_from_slice(&psi);
            let t_prev = t;
            t = stepper.advance(&mut rhs, t, &mut psi, t_stop)?;
            if !dissipative || norm_sqr(&psi) > threshold {
                continue;
            }

            // bisect the crossing inside (t_prev, t]
            let (mut lo, mut hi) = (t_prev, t);
            while hi - lo > self.jump_tol {
                let mid = 0.5 * (lo + hi);
                stepper.single_step(&mut rhs, t_prev, &saved, mid - t_prev, &mut trial);
                if norm_sqr(&trial) <= threshold {
                    hi = mid;
                    psi.copy_from_slice(&trial);
                } else {
                    lo = mid;
                }
            }
            t = hi;

            let rates = model.jump_rates(&psi);
            let total: f64 = rates.iter().sum();
            if total > 0.0 {
                let mut pick = rng.random::<f64>() * total;
                let mut channel = Channel::ALL[4];
                for (c, r) in Channel::ALL.into_iter().zip(rates) {
                    if r > 0.0 {
                        channel = c;
                        if pick < r {
                            break;
                        }
                        pick -= r;
                    }
                }
                model.apply_jump(channel, &mut psi, &mut scratch);
                record.jumps.push(Jump { t, channel });
            }
            let norm = libm::sqrt(norm_sqr(&psi));
            psi.iter_mut().for_each(|z| *z /= norm);
            threshold = rng.random();
            stepper.invalidate();
        }
        record.final_populations = normalized_populations(model, &psi);
        Ok(record)
    }
}

fn normalized_populations(model: &Model, psi: &[C64]) -> Populations {
    let f = model.space().fock_dim();
    let norm = norm_sqr(psi);
    let mut p = [0.0; 3];
    for (i, z) in psi.iter().enumerate() {
        p[i / f] += z.norm_sqr() / norm;
    }
    Populations { a: p[0], b: p[1], e: p[2] }
}

/// Runs trajectories `0..n_traj` sequentially, ordered by index.
pub fn run_trajectories<D: Drive + ?Sized>(
    initial: &State,
    drive: &D,
    params: &SystemParams,
    t_span: (f64, f64),
    n_traj: usize,
    seed: u64,
    options: &TrajectoryOptions,
) -> Result<TrajectoryEnsemble> {
    if n_traj < 1 {
        return Err(Error::invalid("n_traj must be >= 1"));
    }
    let runner = TrajectoryRunner::new(initial, drive, params, t_span, options.clone())?;
    let records = (0..n_traj as u64).map(|k| runner.run(seed, k)).collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryEnsemble { seed, checkpoint_times: options.checkpoints.clone(), records })
}
