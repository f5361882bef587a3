//! Reduction of simulated tracks to measured quantities: windowed photon
//! counts, fringe fits, the coherent/incoherent partition and the α/β pulse
//! overlap.

mod fit;
mod partition;

pub use fit::{fit_visibility, FringeFit};
pub(crate) use fit::spans_full_period;
pub use partition::{partition_coherent, PartitionResult};

use alloc::format;
use core::ops::{Add, Mul};

use crate::dynamics::TimeSeries;
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::params::SystemParams;

/// Trapezoid integral of the piecewise-linear interpolant of `(t, y(i))`
/// over `[start, end]`. Additive over adjacent windows.
pub(crate) fn trapezoid_window<T, F>(t: &[f64], y: F, start: f64, end: f64) -> Result<T>
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
    F: Fn(usize) -> T,
{
    let n = t.len();
    if n < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    if !(start <= end) || !start.is_finite() || !end.is_finite() {
        return Err(Error::invalid(format!("bad window [{start:e}, {end:e}]")));
    }
    let slack = 1e-9 * (t[n - 1] - t[0]);
    if start < t[0] - slack || end > t[n - 1] + slack {
        return Err(Error::invalid(format!(
            "window [{start:e}, {end:e}] outside the sampled span [{:e}, {:e}]",
            t[0],
            t[n - 1]
        )));
    }
    let (start, end) = (start.max(t[0]), end.min(t[n - 1]));
    let lerp = |i: usize, x: f64| {
        let w = (x - t[i]) / (t[i + 1] - t[i]);
        y(i) * (1.0 - w) + y(i + 1) * w
    };
    let first = t.partition_point(|&x| x <= start).saturating_sub(1).min(n - 2);
    let mut acc = T::default();
    for i in first..n - 1 {
        if t[i] >= end {
            break;
        }
        let a = start.max(t[i]);
        let b = end.min(t[i + 1]);
        if b > a {
            acc = acc + (lerp(i, a) + lerp(i, b)) * (0.5 * (b - a));
        }
    }
    Ok(acc)
}

/// Photons leaving through the output mirror during
/// `[window_start, window_start + window_length]`.
pub fn window_count(series: &TimeSeries, window_start: f64, window_length: f64) -> Result<f64> {
    if !(window_length >= 0.0) {
        return Err(Error::invalid("window length must be >= 0"));
    }
    trapezoid_window(&series.t, |i| series.flux_out[i], window_start, window_start + window_length)
}

/// Start of a window of length `len` centered on `center`, shifted to lie
/// inside `[lo, hi]`.
pub fn place_window(center: f64, len: f64, lo: f64, hi: f64) -> f64 {
    (center - 0.5 * len).min(hi - len).max(lo)
}

/// Fringe visibility expected from two independent fields:
/// `2|∫α*β| / (∫|α|² + ∫|β|²)` over the window.
pub fn overlap_visibility(t: &[f64], alpha: &[C64], beta: &[C64], window_start: f64, window_length: f64) -> Result<f64> {
    if alpha.len() != t.len() || beta.len() != t.len() {
        return Err(Error::invalid("envelopes must be sampled on the time grid"));
    }
    let end = window_start + window_length;
    let cross: C64 = trapezoid_window(t, |i| alpha[i].conj() * beta[i], window_start, end)?;
    let ea: f64 = trapezoid_window(t, |i| alpha[i].norm_sqr(), window_start, end)?;
    let eb: f64 = trapezoid_window(t, |i| beta[i].norm_sqr(), window_start, end)?;
    if !(ea + eb > 0.0) {
        return Err(Error::invalid("both envelopes vanish on the window"));
    }
    Ok((2.0 * cross.norm() / (ea + eb)).min(1.0))
}

/// Excitation balance of a run without cavity drive:
/// `∫2κ⟨a†a⟩ + ∫2γ_b P_e + (P_a + P_e + ⟨a†a⟩)(t_end)`.
///
/// `a†a + σ_ee + σ_aa` commutes with the undriven Hamiltonian; it drops by one
/// on every cavity jump and every `e → b` decay, and is unchanged by `e → a`.
/// Starting from `|a,0⟩` the balance is 1.
pub fn excitation_balance(series: &TimeSeries, params: &SystemParams) -> Result<f64> {
    let (t0, t1) = match (series.t.first(), series.t.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::invalid("empty series")),
    };
    let k = params.kappa();
    let gb = params.gamma_b;
    let lost: f64 = trapezoid_window(&series.t, |i| 2.0 * k * series.n_cav[i] + 2.0 * gb * series.p_e[i], t0, t1)?;
    let last = series.len() - 1;
    Ok(lost + series.p_a[last] + series.p_e[last] + series.n_cav[last])
}
