//! Chebyshev interpolation of smooth vector-valued functions on an interval.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // std float methods shadow it when std is linked
use num_traits::Float;

use crate::Result;

/// `width` functions sharing one Chebyshev grid of `degree + 1` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevTable {
    lo: f64,
    hi: f64,
    width: usize,
    // coeffs[j * width + c]: coefficient of T_j for component c
    coeffs: Vec<f64>,
    degree: usize,
}

impl ChebyshevTable {
    /// Samples `f` at Chebyshev points of the first kind; `f` writes `width` values.
    pub fn build<F: FnMut(f64, &mut [f64]) -> Result<()>>(
        lo: f64,
        hi: f64,
        degree: usize,
        width: usize,
        mut f: F,
    ) -> Result<Self> {
        let n = degree + 1;
        let mut samples = vec![0.0; n * width];
        for k in 0..n {
            let theta = PI * (k as f64 + 0.5) / n as f64;
            let x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * theta.cos();
            f(x, &mut samples[k * width..(k + 1) * width])?;
        }
        let mut coeffs = vec![0.0; n * width];
        for j in 0..n {
            let scale = if j == 0 { 1.0 } else { 2.0 } / n as f64;
            for k in 0..n {
                let c = (PI * j as f64 * (k as f64 + 0.5) / n as f64).cos() * scale;
                for w in 0..width {
                    coeffs[j * width + w] += c * samples[k * width + w];
                }
            }
        }
        Ok(Self { lo, hi, width, coeffs, degree })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Magnitude of the trailing coefficients, a proxy for the interpolation error.
    pub fn tail(&self) -> f64 {
        let mut m = 0.0f64;
        for j in self.degree.saturating_sub(1)..=self.degree {
            for w in 0..self.width {
                m = m.max(self.coeffs[j * self.width + w].abs());
            }
        }
        m
    }

    /// Clenshaw evaluation of every component at `x`.
    pub fn eval(&self, x: f64, out: &mut [f64]) {
        let u = (2.0 * x - self.lo - self.hi) / (self.hi - self.lo);
        let w = self.width;
        for c in 0..w {
            let mut b1 = 0.0;
            let mut b2 = 0.0;
            for j in (1..=self.degree).rev() {
                let b0 = 2.0 * u * b1 - b2 + self.coeffs[j * w + c];
                b2 = b1;
                b1 = b0;
            }
            out[c] = u * b1 - b2 + self.coeffs[c];
        }
    }
}
