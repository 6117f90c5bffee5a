//! Gauss–Legendre rules and a globally adaptive panel integrator.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;
#[allow(unused_imports)] // std float methods shadow it when std is linked
use num_traits::Float;

use crate::{Error, Result};

/// Values that can be accumulated by a quadrature rule.
pub trait Integrand: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Integrand for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "Gauss-Legendre rule needs at least two nodes");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate<T: Integrand, F: FnMut(f64) -> T>(&self, mut f: F, a: f64, b: f64) -> T {
        let mut acc = T::zero();
        for (x, w) in self.mapped(a, b) {
            acc = acc + f(x) * w;
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub panels: usize,
}

/// Adaptive panel integrator.
///
/// Every panel is integrated once and again as two halves; the difference
/// bounds the error of the coarse value, and the refined value is kept.
/// Panels whose difference exceeds their share of the tolerance are split.
#[derive(Debug, Clone)]
pub struct Adaptive {
    rule: GaussLegendre,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub initial_panels: usize,
    pub max_panels: usize,
}

impl Default for Adaptive {
    fn default() -> Self {
        Self::new(16, 1e-12)
    }
}

impl Adaptive {
    pub fn new(points: usize, abs_tol: f64) -> Self {
        Self {
            rule: GaussLegendre::new(points),
            abs_tol,
            rel_tol: 0.0,
            initial_panels: 1,
            max_panels: 1 << 14,
        }
    }

    pub fn with_panels(mut self, n: usize) -> Self {
        self.initial_panels = n.max(1);
        self
    }

    pub fn with_rel_tol(mut self, rel: f64) -> Self {
        self.rel_tol = rel;
        self
    }

    pub fn integrate<T: Integrand, F: FnMut(f64) -> T>(
        &self,
        mut f: F,
        a: f64,
        b: f64,
    ) -> Result<Estimate<T>> {
        if a == b {
            return Ok(Estimate { value: T::zero(), error: 0.0, panels: 0 });
        }
        let len = b - a;
        let n0 = self.initial_panels;
        let mut stack: Vec<(f64, f64, T)> = Vec::with_capacity(64);
        let mut coarse_total = T::zero();
        for i in (0..n0).rev() {
            let lo = a + len * i as f64 / n0 as f64;
            let hi = a + len * (i + 1) as f64 / n0 as f64;
            let v = self.rule.integrate(&mut f, lo, hi);
            coarse_total = coarse_total + v;
            stack.push((lo, hi, v));
        }
        let tol = self.abs_tol.max(self.rel_tol * coarse_total.magnitude());
        let mut value = T::zero();
        let mut error = 0.0;
        let mut panels = n0;
        while let Some((lo, hi, coarse)) = stack.pop() {
            let mid = 0.5 * (lo + hi);
            let left = self.rule.integrate(&mut f, lo, mid);
            let right = self.rule.integrate(&mut f, mid, hi);
            let fine = left + right;
            let diff = (fine - coarse).magnitude();
            if !diff.is_finite() {
                return Err(Error::NonFinite("quadrature integrand"));
            }
            let share = tol * ((hi - lo) / len).abs();
            let tiny = (hi - lo).abs() <= 1e-12 * len.abs();
            if diff <= share || tiny || panels >= self.max_panels {
                value = value + fine;
                error += diff;
            } else {
                panels += 1;
                stack.push((mid, hi, right));
                stack.push((lo, mid, left));
            }
        }
        if error > tol && error > 64.0 * f64::EPSILON * value.magnitude() {
            return Err(Error::Quadrature { estimate: error, tolerance: tol });
        }
        Ok(Estimate { value, error, panels })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        for n in [2usize, 5, 8, 16, 24] {
            let g = GaussLegendre::new(n);
            let wsum: f64 = g.weights().iter().sum();
            assert!((wsum - 2.0).abs() < 1e-14, "n={n}");
            let deg = 2 * n - 1;
            let v: f64 = g.integrate(|x| x.powi(deg as i32 - 1), 0.0, 1.0);
            assert!((v - 1.0 / (deg as f64)).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn adaptive_handles_oscillation() {
        let q = Adaptive::new(16, 1e-13).with_panels(4);
        let e = q.integrate(|x: f64| (40.0 * x).sin().powi(2), 0.0, 3.0).unwrap();
        let exact = 1.5 - (240.0f64).sin() / 160.0;
        assert!((e.value - exact).abs() < 1e-12);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let q = Adaptive::new(16, 1e-10);
        let e = q.integrate(|x: f64| x.sqrt(), 0.0, 1.0).unwrap();
        assert!((e.value - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn complex_integrand() {
        let q = Adaptive::new(16, 1e-13);
        let e = q
            .integrate(|x: f64| Complex64::new(0.0, 3.0 * x).exp(), 0.0, 2.0)
            .unwrap();
        let exact = (Complex64::new(0.0, 6.0).exp() - 1.0) / Complex64::new(0.0, 3.0);
        assert!((e.value - exact).norm() < 1e-13);
    }
}
