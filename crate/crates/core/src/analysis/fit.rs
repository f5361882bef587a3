use alloc::format;

use crate::error::{Error, Result};

/// Least-squares fit of `A (1 + v cos(θ − φ))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FringeFit {
    pub v: f64,
    pub phi: f64,
    /// Offset `A`.
    pub offset: f64,
    pub sigma_v: f64,
    /// Undefined (NaN) when the fitted fringe amplitude is exactly zero.
    pub sigma_phi: f64,
    pub rms_residual: f64,
}

impl FringeFit {
    /// Fringe amplitude `A·v`.
    pub fn amplitude(&self) -> f64 {
        self.offset * self.v
    }
}

/// True if the grid, extended by one mean spacing, covers 2π.
pub(crate) fn spans_full_period(theta: &[f64]) -> bool {
    let n = theta.len();
    if n < 2 {
        return false;
    }
    let (lo, hi) = theta.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let extended = (hi - lo) * n as f64 / (n - 1) as f64;
    extended >= core::f64::consts::TAU * (1.0 - 1e-12)
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    if d.abs() < 1e-300 {
        return None;
    }
    let mut x = [0.0; 3];
    for (k, xk) in x.iter_mut().enumerate() {
        let mut mk = m;
        for r in 0..3 {
            mk[r][k] = b[r];
        }
        *xk = det(&mk) / d;
    }
    Some(x)
}

/// Fits `A + B cos θ + C sin θ` by linear least squares and reports
/// `v = √(B² + C²)/A`, `φ = atan2(C, B)`. Standard errors propagate the
/// parameter covariance `σ² (XᵀX)⁻¹` with `σ² = RSS/(n − 3)`.
pub fn fit_visibility(theta: &[f64], values: &[f64]) -> Result<FringeFit> {
    let n = theta.len();
    if n != values.len() {
        return Err(Error::invalid("theta and values differ in length"));
    }
    if n < 4 {
        return Err(Error::invalid(format!("need at least 4 points, got {n}")));
    }
    if !spans_full_period(theta) {
        return Err(Error::invalid("theta grid must span a full period"));
    }
    let row = |th: f64| [1.0, libm::cos(th), libm::sin(th)];
    let mut xtx = [[0.0; 3]; 3];
    let mut xty = [0.0; 3];
    for (&th, &y) in theta.iter().zip(values) {
        let r = row(th);
        for i in 0..3 {
            xty[i] += r[i] * y;
            for j in 0..3 {
                xtx[i][j] += r[i] * r[j];
            }
        }
    }
    let [a, b, c] = solve3(xtx, xty).ok_or_else(|| Error::DegenerateFit("singular design matrix".into()))?;
    if !(a > 0.0) {
        return Err(Error::DegenerateFit(format!("fitted offset {a:e} is not positive")));
    }
    let rss: f64 = theta
        .iter()
        .zip(values)
        .map(|(&th, &y)| {
            let r = row(th);
            let e = y - (a * r[0] + b * r[1] + c * r[2]);
            e * e
        })
        .sum();
    let sigma2 = if n > 3 { rss / (n - 3) as f64 } else { 0.0 };
    let mut cov = [[0.0; 3]; 3];
    for k in 0..3 {
        let mut e = [0.0; 3];
        e[k] = 1.0;
        let col = solve3(xtx, e).expect("already inverted once");
        for r in 0..3 {
            cov[r][k] = sigma2 * col[r];
        }
    }
    let amp = libm::sqrt(b * b + c * c);
    let v = amp / a;
    let quad = |g: [f64; 3]| {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += g[i] * cov[i][j] * g[j];
            }
        }
        libm::sqrt(s.max(0.0))
    };
    let (sigma_v, sigma_phi) = if amp > 0.0 {
        (quad([-v / a, b / (a * amp), c / (a * amp)]), quad([0.0, -c / (amp * amp), b / (amp * amp)]))
    } else {
        (libm::sqrt(0.5 * (cov[1][1] + cov[2][2]).max(0.0)) / a, f64::NAN)
    };
    Ok(FringeFit {
        v,
        phi: libm::atan2(c, b),
        offset: a,
        sigma_v,
        sigma_phi,
        rms_residual: libm::sqrt(rss / n as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use core::f64::consts::TAU;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|k| TAU * k as f64 / n as f64).collect()
    }

    #[test]
    fn exact_cosine() {
        let th = grid(16);
        let y: Vec<f64> = th.iter().map(|&x| 1.0 + 0.5 * libm::cos(x)).collect();
        let f = fit_visibility(&th, &y).unwrap();
        assert!((f.v - 0.5).abs() < 1e-10);
        assert!(f.phi.abs() < 1e-10);
        assert!((f.offset - 1.0).abs() < 1e-10);
        assert!(f.rms_residual < 1e-12);
    }

    #[test]
    fn constant_values_have_no_visibility() {
        let th = grid(8);
        let f = fit_visibility(&th, &[2.0; 8]).unwrap();
        assert!(f.v < 1e-14);
    }

    #[test]
    fn rejects_short_or_narrow_grids() {
        assert!(fit_visibility(&[0.0, 1.0, 2.0], &[1.0; 3]).is_err());
        assert!(fit_visibility(&[0.0, 0.5, 1.0, 1.5], &[1.0; 4]).is_err());
    }

    #[test]
    fn negative_offset_is_degenerate() {
        let th = grid(8);
        assert!(matches!(fit_visibility(&th, &[-1.0; 8]), Err(Error::DegenerateFit(_))));
    }
}
