//! Dormand–Prince 5(4) embedded Runge–Kutta stepper on complex vectors.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub atol: f64,
    pub rtol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { atol: 1e-10, rtol: 1e-8 }
    }
}

/// Adaptive stepper. Keeps its step size and the first-same-as-last stage
/// between calls, so repeated [`advance`](Self::advance) calls are cheap.
pub struct DormandPrince {
    tol: Tolerances,
    h: f64,
    h_max: f64,
    h_min: f64,
    k: [Vec<C64>; 7],
    stage: Vec<C64>,
    y_new: Vec<C64>,
    fsal: bool,
}

impl DormandPrince {
    pub fn new(dim: usize, tol: Tolerances, h_max: f64) -> Self {
        assert!(h_max > 0.0 && h_max.is_finite());
        Self {
            tol,
            h: h_max * 1e-3,
            h_max,
            h_min: h_max * 1e-12,
            k: core::array::from_fn(|_| vec![ZERO; dim]),
            stage: vec![ZERO; dim],
            y_new: vec![ZERO; dim],
            fsal: false,
        }
    }

    /// Forget the cached derivative, e.g. after `y` was modified externally.
    pub fn invalidate(&mut self) {
        self.fsal = false;
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    /// One trial step of size `h` from `(t, y)` into `self.y_new`. Returns the
    /// scaled error norm (accept when ≤ 1).
    fn attempt<F>(&mut self, f: &mut F, t: f64, y: &[C64], h: f64) -> f64
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        if !self.fsal {
            f(t, y, &mut self.k[0]);
            self.fsal = true;
        }
        for s in 1..7 {
            for i in 0..y.len() {
                let mut acc = ZERO;
                for (j, a) in A[s][..s].iter().enumerate() {
                    if *a != 0.0 {
                        acc += self.k[j][i] * *a;
                    }
                }
                self.stage[i] = y[i] + acc * h;
            }
            f(t + C[s] * h, &self.stage, &mut self.k[s]);
        }
        // stage 6 evaluated at the fifth-order solution
        self.y_new.copy_from_slice(&self.stage);

        let mut sum = 0.0;
        for i in 0..y.len() {
            let mut err = ZERO;
            for (j, e) in E.iter().enumerate() {
                if *e != 0.0 {
                    err += self.k[j][i] * *e;
                }
            }
            err *= h;
            let sc_re = self.tol.atol + self.tol.rtol * y[i].re.abs().max(self.y_new[i].re.abs());
            let sc_im = self.tol.atol + self.tol.rtol * y[i].im.abs().max(self.y_new[i].im.abs());
            sum += (err.re / sc_re) * (err.re / sc_re) + (err.im / sc_im) * (err.im / sc_im);
        }
        libm::sqrt(sum / (2 * y.len()) as f64)
    }

    /// Takes one accepted step from `t` towards `t_stop` (never past it),
    /// updating `y` in place. Returns the new time.
    pub fn advance<F>(&mut self, f: &mut F, t: f64, y: &mut [C64], t_stop: f64) -> Result<f64>
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        loop {
            let remaining = t_stop - t;
            let mut h = self.h.min(self.h_max);
            let clamped = h >= remaining;
            if clamped {
                h = remaining;
            }
            let err = self.attempt(f, t, y, h);
            if err <= 1.0 && err.is_finite() {
                let factor = if err == 0.0 { 5.0 } else { (0.9 * libm::pow(err, -0.2)).clamp(0.2, 5.0) };
                // a step shortened to land on t_stop says nothing about the natural size
                if !clamped || h * factor > self.h {
                    self.h = (h * factor).min(self.h_max);
                }
                y.copy_from_slice(&self.y_new);
                self.k.swap(0, 6);
                return Ok(if clamped { t_stop } else { t + h });
            }
            let factor = if err.is_finite() { (0.9 * libm::pow(err, -0.2)).clamp(0.1, 0.9) } else { 0.1 };
            self.h = h * factor;
            if self.h < self.h_min {
                return Err(Error::IntegrationFailure { t });
            }
        }
    }

    /// Advances `y` from `t` to exactly `t_end`.
    pub fn integrate_to<F>(&mut self, f: &mut F, t: &mut f64, y: &mut [C64], t_end: f64) -> Result<()>
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        while *t < t_end {
            *t = self.advance(f, *t, y, t_end)?;
        }
        Ok(())
    }

    /// A single unchecked fifth-order step of size `h`, written to `out`.
    /// Leaves the cached derivative invalid.
    pub fn single_step<F>(&mut self, f: &mut F, t: f64, y: &[C64], h: f64, out: &mut [C64])
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        self.fsal = false;
        self.attempt(f, t, y, h);
        out.copy_from_slice(&self.y_new);
        self.fsal = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_and_rotation() {
        // y' = (−0.3 + 2i) y  → y(t) = e^{(−0.3+2i)t}
        let rate = C64::new(-0.3, 2.0);
        let mut f = |_t: f64, y: &[C64], dy: &mut [C64]| dy[0] = rate * y[0];
        let mut dp = DormandPrince::new(1, Tolerances { atol: 1e-12, rtol: 1e-10 }, 0.5);
        let mut y = [C64::new(1.0, 0.0)];
        let mut t = 0.0;
        dp.integrate_to(&mut f, &mut t, &mut y, 5.0).unwrap();
        assert_eq!(t, 5.0);
        let exact = (rate * 5.0).exp();
        assert!((y[0] - exact).norm() < 1e-9, "{} vs {}", y[0], exact);
    }

    #[test]
    fn time_dependent_forcing() {
        // y' = cos t → y = sin t
        let mut f = |t: f64, _y: &[C64], dy: &mut [C64]| dy[0] = C64::new(libm::cos(t), 0.0);
        let mut dp = DormandPrince::new(1, Tolerances::default(), 0.1);
        let mut y = [ZERO];
        let mut t = 0.0;
        for k in 1..=20 {
            let target = 0.5 * k as f64;
            dp.integrate_to(&mut f, &mut t, &mut y, target).unwrap();
            assert!((y[0].re - libm::sin(target)).abs() < 1e-8);
        }
    }

    #[test]
    fn step_underflow_is_reported() {
        // blows up in finite time at t = 1
        let mut f = |_t: f64, y: &[C64], dy: &mut [C64]| dy[0] = y[0] * y[0];
        let mut dp = DormandPrince::new(1, Tolerances::default(), 0.1);
        let mut y = [C64::new(1.0, 0.0)];
        let mut t = 0.0;
        let err = dp.integrate_to(&mut f, &mut t, &mut y, 2.0).unwrap_err();
        match err {
            Error::IntegrationFailure { t } => assert!(t > 0.9 && t < 1.001, "t = {t}"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
