//! Dormand–Prince 5(4) with embedded error control and FSAL.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // std float methods shadow it when std is linked
use num_traits::Float;

use crate::{Error, Result};

pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Sum of the accepted local error estimates (max norm, absolute).
    pub local_error: f64,
    pub smallest_step: f64,
}

#[derive(Debug, Clone)]
pub struct DormandPrince {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl DormandPrince {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, h_init: None, h_max: f64::INFINITY, max_steps: 5_000_000 }
    }

    pub fn with_max_step(mut self, h: f64) -> Self {
        self.h_max = h;
        self
    }
}

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
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

impl DormandPrince {
    fn initial_step<S: OdeSystem>(
        &self,
        sys: &mut S,
        t0: f64,
        y0: &[f64],
        f0: &[f64],
        dir: f64,
    ) -> Result<f64> {
        let n = y0.len();
        let sc = |i: usize| self.atol + self.rtol * y0[i].abs();
        let mut d0 = 0.0f64;
        let mut d1 = 0.0f64;
        for i in 0..n {
            d0 = d0.max((y0[i] / sc(i)).abs());
            d1 = d1.max((f0[i] / sc(i)).abs());
        }
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(self.h_max);
        let y1: Vec<f64> = (0..n).map(|i| y0[i] + dir * h0 * f0[i]).collect();
        let mut f1 = vec![0.0; n];
        sys.rhs(t0 + dir * h0, &y1, &mut f1)?;
        let mut d2 = 0.0f64;
        for i in 0..n {
            d2 = d2.max(((f1[i] - f0[i]) / sc(i)).abs() / h0);
        }
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        Ok((100.0 * h0).min(h1).min(self.h_max))
    }

    /// Integrates from `t0` through every time in `outputs` (monotone, same
    /// direction), landing exactly on each and calling `on_output` there.
    pub fn integrate<S: OdeSystem, O: FnMut(f64, &[f64]) -> Result<()>>(
        &self,
        sys: &mut S,
        t0: f64,
        y0: &[f64],
        outputs: &[f64],
        mut on_output: O,
    ) -> Result<IntegrationStats> {
        let n = sys.dim();
        assert_eq!(y0.len(), n);
        let mut stats = IntegrationStats { smallest_step: f64::INFINITY, ..Default::default() };
        let Some(&t_end) = outputs.last() else {
            return Ok(stats);
        };
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let mut y = y0.to_vec();
        let mut t = t0;
        let mut k: [Vec<f64>; 7] = core::array::from_fn(|_| vec![0.0; n]);
        let mut ytmp = vec![0.0; n];
        let mut ynew = vec![0.0; n];
        sys.rhs(t, &y, &mut k[0])?;
        stats.evaluations += 1;
        let mut h = match self.h_init {
            Some(h) => h.abs(),
            None => self.initial_step(sys, t, &y, &k[0], dir)?,
        };
        let mut out_idx = 0;
        while out_idx < outputs.len() && (outputs[out_idx] - t) * dir <= 0.0 {
            on_output(outputs[out_idx], &y)?;
            out_idx += 1;
        }
        let mut fac_max = 5.0;
        while out_idx < outputs.len() {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::StepBudget(t));
            }
            let target = outputs[out_idx];
            let remaining = (target - t).abs();
            h = h.min(self.h_max);
            let mut landing = false;
            if h >= remaining * (1.0 - 1e-12) {
                h = remaining;
                landing = true;
            }
            if h <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow(t));
            }
            let hs = dir * h;
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = 0.0;
                    for j in 0..s {
                        acc += A[s][j] * k[j][i];
                    }
                    ytmp[i] = y[i] + hs * acc;
                }
                sys.rhs(t + C[s] * hs, &ytmp, &mut k[s])?;
            }
            stats.evaluations += 6;
            // stage 7 was evaluated at the fifth-order solution (ytmp after s = 6)
            ynew.copy_from_slice(&ytmp);
            let mut err = 0.0f64;
            let mut err_abs = 0.0f64;
            for i in 0..n {
                let mut e = 0.0;
                for j in 0..7 {
                    e += E[j] * k[j][i];
                }
                let e = (hs * e).abs();
                let sc = self.atol + self.rtol * y[i].abs().max(ynew[i].abs());
                err = err.max(e / sc);
                err_abs = err_abs.max(e);
            }
            if !err.is_finite() {
                h *= 0.25;
                stats.rejected += 1;
                continue;
            }
            if err <= 1.0 {
                t = if landing { target } else { t + hs };
                core::mem::swap(&mut y, &mut ynew);
                k.swap(0, 6);
                stats.accepted += 1;
                stats.local_error += err_abs;
                stats.smallest_step = stats.smallest_step.min(h);
                let fac = if err == 0.0 { fac_max } else { (0.9 * err.powf(-0.2)).clamp(0.2, fac_max) };
                fac_max = 5.0;
                if landing {
                    h = (h * fac).max(h);
                } else {
                    h *= fac;
                }
                while out_idx < outputs.len() && (outputs[out_idx] - t) * dir <= 0.0 {
                    on_output(outputs[out_idx], &y)?;
                    out_idx += 1;
                }
            } else {
                stats.rejected += 1;
                fac_max = 1.0;
                h *= (0.9 * err.powf(-0.2)).max(0.2);
            }
        }
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Oscillator {
        w: f64,
    }

    impl OdeSystem for Oscillator {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&mut self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
            dy[0] = y[1];
            dy[1] = -self.w * self.w * y[0];
            Ok(())
        }
    }

    #[test]
    fn harmonic_oscillator_hits_outputs() {
        let mut sys = Oscillator { w: 3.0 };
        let outs: Vec<f64> = (1..=10).map(|i| i as f64 * 0.7).collect();
        let mut seen = Vec::new();
        DormandPrince::new(1e-11, 1e-13)
            .integrate(&mut sys, 0.0, &[1.0, 0.0], &outs, |t, y| {
                seen.push(t);
                assert!((y[0] - (3.0 * t).cos()).abs() < 1e-8, "t={t}");
                Ok(())
            })
            .unwrap();
        assert_eq!(seen, outs);
    }

    #[test]
    fn error_scales_with_tolerance() {
        let run = |tol: f64| {
            let mut sys = Oscillator { w: 1.0 };
            let mut last = 0.0;
            DormandPrince::new(tol, tol * 1e-2)
                .integrate(&mut sys, 0.0, &[1.0, 0.0], &[20.0], |_, y| {
                    last = y[0];
                    Ok(())
                })
                .unwrap();
            (last - 20.0f64.cos()).abs()
        };
        let e1 = run(1e-6);
        let e2 = run(1e-10);
        assert!(e2 < e1 * 1e-2, "{e1} {e2}");
    }

    #[test]
    fn integrates_backwards() {
        let mut sys = Oscillator { w: 1.0 };
        let mut last = 0.0;
        DormandPrince::new(1e-11, 1e-13)
            .integrate(&mut sys, 0.0, &[1.0, 0.0], &[-2.0], |_, y| {
                last = y[0];
                Ok(())
            })
            .unwrap();
        assert!((last - 2.0f64.cos()).abs() < 1e-9);
    }
}
