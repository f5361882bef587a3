//! Hamiltonian and dissipators of the driven atom-cavity system.
//!
//! In the frame rotating at both drive frequencies,
//!
//! ```text
//! H = −Δ σ_ee + δ₂ σ_aa + g (a σ_eb + a† σ_be)
//!     + (Ω/2)(e^{iφ} σ_ea + e^{−iφ} σ_ae) + λ a† + λ* a
//! ```
//!
//! with `Δ > 0` for blue detuning. Jump operators are `√(2κ_c) a` for each
//! cavity channel `c ∈ {out, in, loss}` and `√(2γ_a) σ_ae`, `√(2γ_b) σ_be`
//! for spontaneous emission.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::hilbert::{Level, Space, State};
use crate::linalg::{Matrix, SparseMatrix, C64, I, ONE, ZERO};
use crate::params::SystemParams;

/// Instantaneous classical controls.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Controls {
    /// Rabi frequency of the classical field on `a ↔ e` (rad/s).
    pub omega: f64,
    /// Phase of the classical field (rad).
    pub omega_phase: f64,
    /// Cavity drive amplitude (rad/s).
    pub lambda: C64,
}

impl Controls {
    pub const OFF: Controls = Controls { omega: 0.0, omega_phase: 0.0, lambda: ZERO };
}

/// Time-dependent source of [`Controls`].
pub trait Drive {
    fn controls(&self, t: f64) -> Controls;

    /// Longest step the integrator may take without skipping over features of
    /// the drive.
    fn max_step(&self) -> Option<f64> {
        None
    }
}

impl Drive for Controls {
    fn controls(&self, _t: f64) -> Controls {
        *self
    }
}

/// Adapts a closure into a [`Drive`] with an explicit step bound.
pub struct FnDrive<F> {
    pub f: F,
    pub max_step: Option<f64>,
}

impl<F: Fn(f64) -> Controls> Drive for FnDrive<F> {
    fn controls(&self, t: f64) -> Controls {
        (self.f)(t)
    }

    fn max_step(&self) -> Option<f64> {
        self.max_step
    }
}

/// Dissipation channel tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    /// Photon leaves through the output mirror.
    Out,
    /// Photon leaves back through the input mirror.
    In,
    /// Photon scattered or absorbed in a mirror.
    Loss,
    /// Spontaneous emission `e → a`.
    SpontA,
    /// Spontaneous emission `e → b`.
    SpontB,
}

impl Channel {
    pub const ALL: [Channel; 5] = [Channel::Out, Channel::In, Channel::Loss, Channel::SpontA, Channel::SpontB];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Out => "out",
            Channel::In => "in",
            Channel::Loss => "loss",
            Channel::SpontA => "spont_a",
            Channel::SpontB => "spont_b",
        }
    }

    pub fn is_spontaneous(self) -> bool {
        matches!(self, Channel::SpontA | Channel::SpontB)
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Channel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Channel::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::invalid(alloc::format!("unknown channel {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Coef {
    Static,
    OmegaUp,
    OmegaDown,
    LambdaUp,
    LambdaDown,
}

/// Precomputed operator structure for one [`SystemParams`].
#[derive(Clone, Debug)]
pub struct Model {
    params: SystemParams,
    space: Space,
    pattern: Vec<(usize, usize, Coef, C64)>,
    /// Diagonal of `½ Σ_c L_c† L_c = κ a†a + γ σ_ee`.
    decay: Vec<f64>,
    photon_number: Vec<f64>,
    annihilation: SparseMatrix,
    sigma_ae: SparseMatrix,
    sigma_be: SparseMatrix,
}

impl Model {
    pub fn new(params: &SystemParams) -> Result<Self> {
        params.validate()?;
        let space = params.space()?;
        let n_max = space.fock_cutoff();
        let mut pattern = Vec::new();
        for n in 0..=n_max {
            pattern.push((space.index(Level::E, n), space.index(Level::E, n), Coef::Static, C64::new(-params.delta, 0.0)));
            if params.delta2 != 0.0 {
                pattern.push((space.index(Level::A, n), space.index(Level::A, n), Coef::Static, C64::new(params.delta2, 0.0)));
            }
        }
        if params.g != 0.0 {
            for n in 1..=n_max {
                let v = C64::new(params.g * libm::sqrt(n as f64), 0.0);
                let e = space.index(Level::E, n - 1);
                let b = space.index(Level::B, n);
                pattern.push((e, b, Coef::Static, v));
                pattern.push((b, e, Coef::Static, v));
            }
        }
        for n in 0..=n_max {
            let e = space.index(Level::E, n);
            let a = space.index(Level::A, n);
            pattern.push((e, a, Coef::OmegaUp, C64::new(0.5, 0.0)));
            pattern.push((a, e, Coef::OmegaDown, C64::new(0.5, 0.0)));
        }
        for level in Level::ALL {
            for n in 0..n_max {
                let v = C64::new(libm::sqrt((n + 1) as f64), 0.0);
                let lo = space.index(level, n);
                let hi = space.index(level, n + 1);
                pattern.push((hi, lo, Coef::LambdaUp, v));
                pattern.push((lo, hi, Coef::LambdaDown, v));
            }
        }

        let d = space.total_dim();
        let mut decay = vec![0.0; d];
        let mut photon_number = vec![0.0; d];
        for (i, slot) in decay.iter_mut().enumerate() {
            let (level, n) = space.basis(i);
            photon_number[i] = n as f64;
            *slot = params.kappa() * n as f64 + if level == Level::E { params.gamma() } else { 0.0 };
        }

        Ok(Self {
            params: *params,
            space,
            pattern,
            decay,
            photon_number,
            annihilation: SparseMatrix::from_dense(&space.annihilation()),
            sigma_ae: SparseMatrix::from_dense(&space.sigma(Level::A, Level::E)),
            sigma_be: SparseMatrix::from_dense(&space.sigma(Level::B, Level::E)),
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    fn coefficient(coef: Coef, c: &Controls) -> C64 {
        match coef {
            Coef::Static => ONE,
            Coef::OmegaUp => C64::from_polar(c.omega, c.omega_phase),
            Coef::OmegaDown => C64::from_polar(c.omega, -c.omega_phase),
            Coef::LambdaUp => c.lambda,
            Coef::LambdaDown => c.lambda.conj(),
        }
    }

    /// Dense `H/ħ` at the given controls.
    pub fn hamiltonian(&self, c: &Controls) -> Matrix {
        let mut h = Matrix::zeros(self.dim());
        for &(i, j, coef, base) in &self.pattern {
            h[(i, j)] += base * Self::coefficient(coef, c);
        }
        h
    }

    /// Jump operators with their rates, `L_c = √rate · op`.
    pub fn jump_operators(&self) -> [(Channel, f64, &SparseMatrix); 5] {
        let p = &self.params;
        [
            (Channel::Out, 2.0 * p.kappa_out, &self.annihilation),
            (Channel::In, 2.0 * p.kappa_in, &self.annihilation),
            (Channel::Loss, 2.0 * p.kappa_loss, &self.annihilation),
            (Channel::SpontA, 2.0 * p.gamma_a, &self.sigma_ae),
            (Channel::SpontB, 2.0 * p.gamma_b, &self.sigma_be),
        ]
    }

    /// Writes `dρ/dt` for a row-major density matrix.
    ///
    /// Computes `K = −i H_eff ρ + ½ Σ L ρ L†` and returns `K + K†`, which is
    /// the Lindblad generator for Hermitian `ρ` and is exactly Hermitian in
    /// floating point.
    pub fn lindblad_rhs_into(&self, c: &Controls, rho: &[C64], out: &mut [C64]) {
        let n = self.dim();
        debug_assert_eq!(rho.len(), n * n);
        out.iter_mut().for_each(|x| *x = ZERO);
        for &(i, j, coef, base) in &self.pattern {
            let v = base * Self::coefficient(coef, c);
            if v == ZERO {
                continue;
            }
            let m = -I * v;
            let src = &rho[j * n..(j + 1) * n];
            let dst = &mut out[i * n..(i + 1) * n];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += m * s;
            }
        }
        for i in 0..n {
            let di = self.decay[i];
            if di != 0.0 {
                for j in 0..n {
                    out[i * n + j] -= rho[i * n + j] * di;
                }
            }
        }
        let p = &self.params;
        let kappa = p.kappa();
        if kappa > 0.0 {
            self.annihilation.sandwich_add(kappa, rho, out);
        }
        if p.gamma_a > 0.0 {
            self.sigma_ae.sandwich_add(p.gamma_a, rho, out);
        }
        if p.gamma_b > 0.0 {
            self.sigma_be.sandwich_add(p.gamma_b, rho, out);
        }
        for i in 0..n {
            out[i * n + i] = C64::new(2.0 * out[i * n + i].re, 0.0);
            for j in i + 1..n {
                let x = out[i * n + j] + out[j * n + i].conj();
                out[i * n + j] = x;
                out[j * n + i] = x.conj();
            }
        }
    }

    /// Writes `dψ/dt = −i H_eff ψ` with `H_eff = H − (i/2) Σ L†L`.
    pub fn effective_rhs_into(&self, c: &Controls, psi: &[C64], out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = -psi[i] * self.decay[i];
        }
        for &(i, j, coef, base) in &self.pattern {
            let v = base * Self::coefficient(coef, c);
            out[i] += -I * v * psi[j];
        }
    }

    /// `‖L_c ψ‖²` for every channel, in [`Channel::ALL`] order.
    pub fn jump_rates(&self, psi: &[C64]) -> [f64; 5] {
        let f = self.space.fock_dim();
        let n_mean: f64 = psi.iter().zip(&self.photon_number).map(|(z, n)| z.norm_sqr() * n).sum();
        let pe: f64 = psi[2 * f..3 * f].iter().map(|z| z.norm_sqr()).sum();
        let p = &self.params;
        [
            2.0 * p.kappa_out * n_mean,
            2.0 * p.kappa_in * n_mean,
            2.0 * p.kappa_loss * n_mean,
            2.0 * p.gamma_a * pe,
            2.0 * p.gamma_b * pe,
        ]
    }

    /// Applies `L_c` (without the rate prefactor) to `psi` in place.
    pub fn apply_jump(&self, channel: Channel, psi: &mut [C64], scratch: &mut [C64]) {
        let op = match channel {
            Channel::Out | Channel::In | Channel::Loss => &self.annihilation,
            Channel::SpontA => &self.sigma_ae,
            Channel::SpontB => &self.sigma_be,
        };
        op.apply_into(psi, scratch);
        psi.copy_from_slice(scratch);
    }

    pub fn has_dissipation(&self) -> bool {
        self.params.kappa() > 0.0 || self.params.gamma() > 0.0
    }

    pub(crate) fn photon_number_diag(&self) -> &[f64] {
        &self.photon_number
    }

    pub(crate) fn annihilation_sparse(&self) -> &SparseMatrix {
        &self.annihilation
    }
}

/// Dense `H/ħ` for `params` at `controls`.
pub fn hamiltonian_at(params: &SystemParams, controls: &Controls) -> Result<Matrix> {
    Ok(Model::new(params)?.hamiltonian(controls))
}

/// `dρ/dt` of the Lindblad master equation at `state` (kets are promoted).
pub fn lindblad_rhs(state: &State, params: &SystemParams, controls: &Controls) -> Result<Matrix> {
    let model = Model::new(params)?;
    if state.space() != model.space() {
        return Err(Error::invalid("state space does not match params.fock_cutoff"));
    }
    let rho = state.to_density_matrix();
    let d = model.dim();
    let mut out = vec![ZERO; d * d];
    model.lindblad_rhs_into(controls, rho.as_slice(), &mut out);
    Ok(Matrix::from_row_major(d, out).expect("square"))
}
