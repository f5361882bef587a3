//! Composite space of one three-level atom and one truncated cavity mode.
//!
//! Level labels follow the cesium D2 scheme: `a` is the `F=3` ground
//! manifold, `b` the `F=4` ground manifold and `e` the `F=3′` excited
//! manifold. The cavity couples `b ↔ e`, the classical field drives `a ↔ e`.
//!
//! Basis ordering is atom-major: `index = level · (N_max + 1) + n`, with
//! `a = 0`, `b = 1`, `e = 2`. Every dense operator, state vector and
//! serialized matrix in this workspace uses this ordering.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, C64, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    /// `F=3` ground manifold.
    A = 0,
    /// `F=4` ground manifold.
    B = 1,
    /// `F=3′` excited manifold.
    E = 2,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::A, Level::B, Level::E];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn label(self) -> char {
        match self {
            Level::A => 'a',
            Level::B => 'b',
            Level::E => 'e',
        }
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" | "A" => Ok(Level::A),
            "b" | "B" => Ok(Level::B),
            "e" | "E" => Ok(Level::E),
            other => Err(Error::invalid(format!("unknown atomic level label {other:?}"))),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Shape of the atom ⊗ Fock space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Space {
    fock_cutoff: usize,
}

impl Space {
    pub const ATOM_DIM: usize = 3;

    /// `fock_cutoff` is the highest photon number kept; it must be at least 1
    /// so that `|b,1⟩` is representable.
    pub fn new(fock_cutoff: usize) -> Result<Self> {
        if fock_cutoff < 1 {
            return Err(Error::invalid("fock_cutoff must be >= 1"));
        }
        Ok(Self { fock_cutoff })
    }

    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_cutoff + 1
    }

    pub fn total_dim(&self) -> usize {
        Self::ATOM_DIM * self.fock_dim()
    }

    pub fn index(&self, level: Level, n: usize) -> usize {
        assert!(n <= self.fock_cutoff, "photon number {n} above cutoff {}", self.fock_cutoff);
        level.index() * self.fock_dim() + n
    }

    pub fn basis(&self, index: usize) -> (Level, usize) {
        let level = Level::from_index(index / self.fock_dim()).expect("index out of range");
        (level, index % self.fock_dim())
    }

    /// Cavity annihilation operator `a`, identity on the atom.
    pub fn annihilation(&self) -> Matrix {
        let mut m = Matrix::zeros(self.total_dim());
        for level in Level::ALL {
            for n in 1..=self.fock_cutoff {
                m[(self.index(level, n - 1), self.index(level, n))] = C64::new(libm::sqrt(n as f64), 0.0);
            }
        }
        m
    }

    pub fn creation(&self) -> Matrix {
        self.annihilation().adjoint()
    }

    /// Photon number `a†a`.
    pub fn number(&self) -> Matrix {
        let mut m = Matrix::zeros(self.total_dim());
        for level in Level::ALL {
            for n in 0..=self.fock_cutoff {
                let i = self.index(level, n);
                m[(i, i)] = C64::new(n as f64, 0.0);
            }
        }
        m
    }

    /// `σ_ij = |i⟩⟨j| ⊗ 1_Fock`.
    pub fn sigma(&self, i: Level, j: Level) -> Matrix {
        let mut m = Matrix::zeros(self.total_dim());
        for n in 0..=self.fock_cutoff {
            m[(self.index(i, n), self.index(j, n))] = ONE;
        }
        m
    }

    /// `σ_ij` with string labels, e.g. `("e", "a")`.
    pub fn sigma_by_label(&self, i: &str, j: &str) -> Result<Matrix> {
        Ok(self.sigma(i.parse()?, j.parse()?))
    }

    pub fn identity(&self) -> Matrix {
        Matrix::identity(self.total_dim())
    }

    /// Unit vector `|level, n⟩`.
    pub fn basis_ket(&self, level: Level, n: usize) -> Vec<C64> {
        let mut v = vec![ZERO; self.total_dim()];
        v[self.index(level, n)] = ONE;
        v
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Repr {
    Ket(Vec<C64>),
    Density(Matrix),
}

/// Pure or mixed state on a [`Space`].
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    space: Space,
    repr: Repr,
}

/// Atomic populations summed over photon number.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Populations {
    pub a: f64,
    pub b: f64,
    pub e: f64,
}

impl Populations {
    pub fn total(&self) -> f64 {
        self.a + self.b + self.e
    }
}

/// `⟨O⟩` split into its real part and the imaginary residue, which vanishes
/// for Hermitian `O`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Expectation {
    pub value: f64,
    pub imag_residual: f64,
}

impl State {
    pub fn basis(space: Space, level: Level, n: usize) -> Self {
        Self { space, repr: Repr::Ket(space.basis_ket(level, n)) }
    }

    /// Normalizes `amplitudes` into a ket.
    pub fn ket(space: Space, mut amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(Error::invalid(format!(
                "ket has {} amplitudes, space needs {}",
                amplitudes.len(),
                space.total_dim()
            )));
        }
        let norm = libm::sqrt(amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>());
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::invalid("ket has zero or non-finite norm"));
        }
        amplitudes.iter_mut().for_each(|z| *z /= norm);
        Ok(Self { space, repr: Repr::Ket(amplitudes) })
    }

    /// Superposition `Σ c_k |level_k, n_k⟩`, normalized.
    pub fn superposition(space: Space, terms: &[(C64, Level, usize)]) -> Result<Self> {
        let mut v = vec![ZERO; space.total_dim()];
        for &(c, level, n) in terms {
            if n > space.fock_cutoff() {
                return Err(Error::invalid(format!("photon number {n} above cutoff")));
            }
            v[space.index(level, n)] += c;
        }
        Self::ket(space, v)
    }

    /// Wraps a density matrix without renormalizing it.
    pub fn density(space: Space, rho: Matrix) -> Result<Self> {
        if rho.dim() != space.total_dim() {
            return Err(Error::invalid(format!(
                "density matrix is {0}x{0}, space needs {1}",
                rho.dim(),
                space.total_dim()
            )));
        }
        Ok(Self { space, repr: Repr::Density(rho) })
    }

    pub fn maximally_mixed(space: Space) -> Self {
        let d = space.total_dim();
        let rho = Matrix::identity(d).scale(C64::new(1.0 / d as f64, 0.0));
        Self { space, repr: Repr::Density(rho) }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn repr(&self) -> &Repr {
        &self.repr
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, Repr::Ket(_))
    }

    pub fn as_ket(&self) -> Option<&[C64]> {
        match &self.repr {
            Repr::Ket(v) => Some(v),
            Repr::Density(_) => None,
        }
    }

    pub fn as_density(&self) -> Option<&Matrix> {
        match &self.repr {
            Repr::Density(m) => Some(m),
            Repr::Ket(_) => None,
        }
    }

    /// Density matrix view of this state (kets are promoted to `|ψ⟩⟨ψ|`).
    pub fn to_density_matrix(&self) -> Matrix {
        match &self.repr {
            Repr::Ket(v) => Matrix::outer(v, v),
            Repr::Density(m) => m.clone(),
        }
    }

    pub fn into_density(self) -> Self {
        let rho = self.to_density_matrix();
        Self { space: self.space, repr: Repr::Density(rho) }
    }

    /// `‖ψ‖²` for kets, `Tr ρ` for density matrices.
    pub fn trace(&self) -> f64 {
        match &self.repr {
            Repr::Ket(v) => v.iter().map(|z| z.norm_sqr()).sum(),
            Repr::Density(m) => m.trace().re,
        }
    }

    pub fn hermiticity_residual(&self) -> f64 {
        match &self.repr {
            Repr::Ket(_) => 0.0,
            Repr::Density(m) => m.hermiticity_residual(),
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match &self.repr {
            Repr::Ket(_) => 0.0,
            Repr::Density(m) => m.hermitian_eigenvalues()[0],
        }
    }

    /// `⟨ψ|O|ψ⟩` or `Tr(ρ O)`.
    pub fn expectation(&self, op: &Matrix) -> Result<Expectation> {
        let d = self.space.total_dim();
        if op.dim() != d {
            return Err(Error::invalid(format!("operator is {}x{0}, state dimension is {d}", op.dim())));
        }
        let z: C64 = match &self.repr {
            Repr::Ket(v) => {
                let ov = op.apply(v);
                v.iter().zip(&ov).map(|(a, b)| a.conj() * b).sum()
            }
            Repr::Density(rho) => {
                let mut acc = ZERO;
                for i in 0..d {
                    for j in 0..d {
                        acc += rho[(i, j)] * op[(j, i)];
                    }
                }
                acc
            }
        };
        Ok(Expectation { value: z.re, imag_residual: z.im })
    }

    pub fn ground_populations(&self) -> Populations {
        let f = self.space.fock_dim();
        let mut p = [0.0f64; 3];
        match &self.repr {
            Repr::Ket(v) => {
                for (i, z) in v.iter().enumerate() {
                    p[i / f] += z.norm_sqr();
                }
            }
            Repr::Density(m) => {
                for i in 0..m.dim() {
                    p[i / f] += m[(i, i)].re;
                }
            }
        }
        Populations { a: p[0], b: p[1], e: p[2] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use libm::sqrt;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn space_dimensions() {
        assert_eq!(Space::new(1).unwrap().total_dim(), 6);
        assert_eq!(Space::new(4).unwrap().total_dim(), 15);
        assert!(matches!(Space::new(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn index_map_is_bijective() {
        let s = Space::new(5).unwrap();
        let mut seen = vec![false; s.total_dim()];
        for level in Level::ALL {
            for n in 0..=5 {
                let i = s.index(level, n);
                assert!(!seen[i]);
                seen[i] = true;
                assert_eq!(s.basis(i), (level, n));
            }
        }
        assert!(seen.iter().all(|&x| x));
    }

    #[test]
    fn ladder_elements() {
        let s = Space::new(4).unwrap();
        let a = s.annihilation();
        assert_eq!(a[(s.index(Level::B, 0), s.index(Level::B, 1))], ONE);
        assert!(close(a[(s.index(Level::A, 1), s.index(Level::A, 2))].re, sqrt(2.0), 1e-12));
        for level in Level::ALL {
            let out = a.apply(&s.basis_ket(level, 0));
            assert!(out.iter().all(|z| *z == ZERO));
        }
        // nothing off the ladder
        for i in 0..s.total_dim() {
            for j in 0..s.total_dim() {
                let (li, ni) = s.basis(i);
                let (lj, nj) = s.basis(j);
                if li != lj || ni + 1 != nj {
                    assert_eq!(a[(i, j)], ZERO);
                }
            }
        }
    }

    #[test]
    fn projector_algebra() {
        let s = Space::new(3).unwrap();
        let sum = &(&s.sigma(Level::A, Level::A) + &s.sigma(Level::B, Level::B)) + &s.sigma(Level::E, Level::E);
        assert_eq!(sum, s.identity());
        assert_eq!(&s.sigma(Level::E, Level::B) * &s.sigma(Level::B, Level::E), s.sigma(Level::E, Level::E));
        assert_eq!(s.sigma(Level::E, Level::A).adjoint(), s.sigma(Level::A, Level::E));
        assert!(s.sigma_by_label("e", "x").is_err());
        assert_eq!(s.sigma_by_label("e", "a").unwrap(), s.sigma(Level::E, Level::A));
    }

    #[test]
    fn restricted_commutator_is_identity() {
        let s = Space::new(4).unwrap();
        let a = s.annihilation();
        let c = a.commutator(&s.creation());
        for i in 0..s.total_dim() {
            for j in 0..s.total_dim() {
                let (_, ni) = s.basis(i);
                let (_, nj) = s.basis(j);
                if ni < 4 && nj < 4 {
                    let expect = if i == j { ONE } else { ZERO };
                    assert!((c[(i, j)] - expect).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn number_spectrum() {
        let s = Space::new(4).unwrap();
        let n = &s.creation() * &s.annihilation();
        assert!(n.max_abs_diff(&s.number()) < 1e-12);
        let eig = n.hermitian_eigenvalues();
        for (k, e) in eig.iter().enumerate() {
            assert!(close(*e, (k / 3) as f64, 1e-12), "{eig:?}");
        }
    }

    #[test]
    fn expectations() {
        let s = Space::new(4).unwrap();
        let n = s.number();
        assert!(close(State::basis(s, Level::B, 1).expectation(&n).unwrap().value, 1.0, 1e-15));
        let see = s.sigma(Level::E, Level::E);
        assert!(close(State::basis(s, Level::E, 0).expectation(&see).unwrap().value, 1.0, 1e-15));
        let sup = State::superposition(s, &[(ONE, Level::A, 0), (ONE, Level::B, 1)]).unwrap();
        let e = sup.expectation(&n).unwrap();
        assert!(close(e.value, 0.5, 1e-15) && e.imag_residual.abs() < 1e-15);
        let e = sup.clone().into_density().expectation(&n).unwrap();
        assert!(close(e.value, 0.5, 1e-15));
        assert!(sup.expectation(&Matrix::identity(3)).is_err());
    }

    #[test]
    fn populations() {
        let s = Space::new(4).unwrap();
        let p = State::basis(s, Level::B, 0).ground_populations();
        assert_eq!((p.a, p.b, p.e), (0.0, 1.0, 0.0));
        let sup = State::superposition(s, &[(ONE, Level::A, 0), (ONE, Level::B, 1)]).unwrap();
        let p = sup.ground_populations();
        assert!(close(p.a, 0.5, 1e-15) && close(p.b, 0.5, 1e-15) && p.e == 0.0);
        let p = State::maximally_mixed(s).ground_populations();
        for x in [p.a, p.b, p.e] {
            assert!(close(x, 1.0 / 3.0, 1e-14));
        }
        assert!(close(p.total(), 1.0, 1e-12));
    }

    #[test]
    fn ket_validation() {
        let s = Space::new(1).unwrap();
        assert!(State::ket(s, vec![ZERO; 6]).is_err());
        assert!(State::ket(s, vec![ONE; 5]).is_err());
        let k = State::ket(s, vec![ONE; 6]).unwrap();
        assert!(close(k.trace(), 1.0, 1e-15));
    }
}
