//! Natural cubic spline through tabulated samples.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // std float methods shadow it when std is linked
use num_traits::Float;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::InvalidParameter {
                name: "samples",
                reason: "need at least two (t, f) pairs of equal length",
            });
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "samples",
                reason: "times must be finite and strictly increasing",
            });
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior second derivatives
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            let mut upper = vec![0.0; k];
            for i in 0..k {
                let h0 = x[i + 1] - x[i];
                let h1 = x[i + 2] - x[i + 1];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
            }
            for i in 1..k {
                let lower = x[i + 1] - x[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        Ok(Self { x, y, m })
    }

    pub fn start(&self) -> f64 {
        self.x[0]
    }

    pub fn end(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    fn locate(&self, t: f64) -> Result<usize> {
        if !(t >= self.start() && t <= self.end()) {
            return Err(Error::OutOfRange { t, start: self.start(), end: self.end() });
        }
        let i = self.x.partition_point(|&v| v <= t);
        Ok(i.saturating_sub(1).min(self.x.len() - 2))
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let i = self.locate(t)?;
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        Ok(a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0)
    }

    /// Exact integral of the spline from the first knot to `t`.
    pub fn integral(&self, t: f64) -> Result<f64> {
        let i = self.locate(t)?;
        let mut acc = 0.0;
        for j in 0..i {
            let h = self.x[j + 1] - self.x[j];
            acc += 0.5 * h * (self.y[j] + self.y[j + 1]) - h * h * h * (self.m[j] + self.m[j + 1]) / 24.0;
        }
        let h = self.x[i + 1] - self.x[i];
        let s = t - self.x[i];
        let b = s / h;
        // ∫_0^s of the cubic on segment i
        let lin = self.y[i] * (s - s * s / (2.0 * h)) + self.y[i + 1] * s * s / (2.0 * h);
        let a_int = |u: f64| -> f64 {
            // ∫ (a³ − a) dx with a = 1 − x/h, from 0 to u
            let a0 = 1.0;
            let a1 = 1.0 - u / h;
            -h * ((a1.powi(4) - a0) / 4.0 - (a1 * a1 - a0) / 2.0)
        };
        let b_int = h * (b.powi(4) / 4.0 - b * b / 2.0);
        acc += lin + (self.m[i] * a_int(s) + self.m[i + 1] * b_int) * h * h / 6.0;
        Ok(acc)
    }
}
