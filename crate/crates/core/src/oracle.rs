//! Direct integration of the coupled equations for α̃, β̃ without expanding in ε.
//!
//! ```text
//! dα̃/dt = X α̃ + Y β̃*,   dβ̃/dt = X β̃ + Y α̃*,   dΘ_k/dt = ω_k(a(t))
//! X_kk″ = G_[kk″] e^{i(Θ_k−Θ_k″)},   Y_kk″ = G_(kk″) e^{i(Θ_k+Θ_k″)}
//! ```
//!
//! Each transverse sector is integrated on its own with Dormand–Prince.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use num_complex::Complex64;

use crate::bogoliubov::ModeSet;
use crate::coupling::{velocity_coupling_matrix, CouplingSource};
use crate::geometry::{mirror_position, MirrorMotion, ModeIndex};
use crate::modes::ModeSolver;
use crate::numeric::{ChebyshevTable, DormandPrince, IntegrationStats, OdeSystem};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions {
    pub rtol: f64,
    pub atol: f64,
    pub t0: f64,
    /// Closed form evaluates g(a) directly; quadrature goes through a
    /// Chebyshev table in a, built once per sector.
    pub source: CouplingSource,
    pub table_degree: usize,
    pub max_step: Option<f64>,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, t0: 0.0, source: CouplingSource::ClosedForm, table_degree: 16, max_step: None }
    }
}

/// α̃, β̃ and Θ of one sector at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleBlock {
    pub range: Range<usize>,
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Complex64>,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSample {
    pub t: f64,
    pub blocks: Vec<OracleBlock>,
    pub unitarity_defect: f64,
}

impl OracleSample {
    fn locate(&self, i: usize, j: usize) -> Option<(&OracleBlock, usize, usize)> {
        let b = self.blocks.iter().find(|b| b.range.contains(&i))?;
        if !b.range.contains(&j) {
            return None;
        }
        Some((b, i - b.range.start, j - b.range.start))
    }

    pub fn alpha_at(&self, i: usize, j: usize) -> Complex64 {
        match self.locate(i, j) {
            Some((b, p, q)) => b.alpha[p * b.range.len() + q],
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn beta_at(&self, i: usize, j: usize) -> Complex64 {
        match self.locate(i, j) {
            Some((b, p, q)) => b.beta[p * b.range.len() + q],
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn theta_at(&self, i: usize) -> Option<f64> {
        let b = self.blocks.iter().find(|b| b.range.contains(&i))?;
        Some(b.theta[i - b.range.start])
    }

    /// Σ_k′ |β̃_kk′|².
    pub fn beta_row_norm_sq(&self, i: usize) -> f64 {
        match self.blocks.iter().find(|b| b.range.contains(&i)) {
            Some(b) => {
                let n = b.range.len();
                let p = i - b.range.start;
                b.beta[p * n..(p + 1) * n].iter().map(|z| z.norm_sqr()).sum()
            }
            None => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRun {
    pub modes: ModeSet,
    pub options: OracleOptions,
    pub epsilon: f64,
    pub samples: Vec<OracleSample>,
    pub stats: IntegrationStats,
}

impl OracleRun {
    pub fn sample(&self, t: f64) -> Option<&OracleSample> {
        self.samples.iter().find(|s| s.t == t)
    }

    pub fn index_of(&self, k: &ModeIndex) -> Result<usize> {
        self.modes.index_of(k).ok_or(Error::UnknownMode(*k))
    }

    pub fn max_unitarity_defect(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.unitarity_defect))
    }
}

/// max_k |Σ_k″ (|α̃_kk″|² − |β̃_kk″|²) − 1| for one K×K block.
pub fn unitarity_defect(alpha: &[Complex64], beta: &[Complex64], size: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..size {
        let row = i * size..(i + 1) * size;
        let s: f64 = alpha[row.clone()].iter().zip(&beta[row]).map(|(a, b)| a.norm_sqr() - b.norm_sqr()).sum();
        worst = worst.max((s - 1.0).abs());
    }
    worst
}

enum CouplingEval<'a> {
    Closed { modes: &'a [ModeIndex], solver: &'a ModeSolver },
    Table(ChebyshevTable),
    Frozen(Vec<f64>),
}

struct SectorSystem<'a> {
    n: usize,
    motion: &'a MirrorMotion,
    solver: &'a ModeSolver,
    eval: CouplingEval<'a>,
    // scratch: g (n²) followed by ω (n)
    buf: Vec<f64>,
    phase: Vec<Complex64>,
}

impl SectorSystem<'_> {
    fn couplings(&mut self, a: f64) -> Result<()> {
        let n = self.n;
        match &self.eval {
            CouplingEval::Closed { modes, solver } => {
                let g = velocity_coupling_matrix(modes, a, solver, CouplingSource::ClosedForm)?;
                self.buf[..n * n].copy_from_slice(&g);
                for (i, k) in modes.iter().enumerate() {
                    self.buf[n * n + i] = solver.frequency(k, a)?;
                }
            }
            CouplingEval::Table(t) => {
                let (lo, hi) = t.domain();
                t.eval(a.clamp(lo, hi), &mut self.buf);
            }
            CouplingEval::Frozen(v) => self.buf.copy_from_slice(v),
        }
        Ok(())
    }
}

impl OdeSystem for SectorSystem<'_> {
    fn dim(&self) -> usize {
        4 * self.n * self.n + self.n
    }

    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let n = self.n;
        let nn = n * n;
        let s = mirror_position(t, self.motion, self.solver.cavity())?;
        self.couplings(s.a)?;
        let (g, omega) = self.buf.split_at(nn);
        dy[4 * nn..].copy_from_slice(omega);
        let theta = &y[4 * nn..];
        for i in 0..n {
            self.phase[i] = Complex64::from_polar(1.0, theta[i]);
        }
        let alpha = |i: usize, j: usize| Complex64::new(y[2 * (i * n + j)], y[2 * (i * n + j) + 1]);
        let beta = |i: usize, j: usize| Complex64::new(y[2 * nn + 2 * (i * n + j)], y[2 * nn + 2 * (i * n + j) + 1]);
        dy[..4 * nn].iter_mut().for_each(|v| *v = 0.0);
        if s.a_dot == 0.0 {
            return Ok(());
        }
        for i in 0..n {
            for m in 0..n {
                let (gim, gmi) = (g[i * n + m], g[m * n + i]);
                let anti = if i == m { 0.0 } else { 0.5 * (gim - gmi) * s.a_dot };
                let sym = 0.5 * (gim + gmi) * s.a_dot;
                let x = self.phase[i] * self.phase[m].conj() * anti;
                let yv = self.phase[i] * self.phase[m] * sym;
                for j in 0..n {
                    let (am, bm) = (alpha(m, j), beta(m, j));
                    let da = x * am + yv * bm.conj();
                    let db = x * bm + yv * am.conj();
                    let e = 2 * (i * n + j);
                    dy[e] += da.re;
                    dy[e + 1] += da.im;
                    dy[2 * nn + e] += db.re;
                    dy[2 * nn + e + 1] += db.im;
                }
            }
        }
        Ok(())
    }
}

fn table_for(modes: &[ModeIndex], solver: &ModeSolver, motion: &MirrorMotion, degree: usize) -> Result<ChebyshevTable> {
    let a0 = solver.a0();
    let reach = motion.epsilon().abs() * motion.sup_abs_f() * a0;
    let (lo, hi) = (a0 - 1.01 * reach, a0 + 1.01 * reach);
    let n = modes.len();
    ChebyshevTable::build(lo, hi, degree, n * n + n, |a, out| {
        let g = velocity_coupling_matrix(modes, a, solver, CouplingSource::Quadrature)?;
        out[..n * n].copy_from_slice(&g);
        for (i, k) in modes.iter().enumerate() {
            out[n * n + i] = solver.frequency(k, a)?;
        }
        Ok(())
    })
}

/// Integrates one sector; returns a block per output time and the integrator statistics.
pub fn integrate_sector(
    opts: &OracleOptions,
    modes: &[ModeIndex],
    range: Range<usize>,
    t_grid: &[f64],
    motion: &MirrorMotion,
    solver: &ModeSolver,
) -> Result<(Vec<OracleBlock>, IntegrationStats)> {
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::InvalidParameter { name: "tolerance", reason: "must be positive" });
    }
    if t_grid.iter().any(|&t| t < opts.t0) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter { name: "t_grid", reason: "must be non-decreasing from t0" });
    }
    let n = modes.len();
    let nn = n * n;
    let eval = if motion.epsilon() == 0.0 {
        let mut v = vec![0.0; nn + n];
        for (i, k) in modes.iter().enumerate() {
            v[nn + i] = solver.frequency(k, solver.a0())?;
        }
        CouplingEval::Frozen(v)
    } else {
        match opts.source {
            CouplingSource::ClosedForm => CouplingEval::Closed { modes, solver },
            CouplingSource::Quadrature => CouplingEval::Table(table_for(modes, solver, motion, opts.table_degree)?),
        }
    };
    let mut sys = SectorSystem {
        n,
        motion,
        solver,
        eval,
        buf: vec![0.0; nn + n],
        phase: vec![Complex64::new(0.0, 0.0); n],
    };
    let mut y0 = vec![0.0; 4 * nn + n];
    for i in 0..n {
        y0[2 * (i * n + i)] = 1.0;
    }
    let mut dp = DormandPrince::new(opts.rtol, opts.atol);
    if let Some(h) = opts.max_step {
        dp = dp.with_max_step(h);
    }
    let mut blocks = Vec::with_capacity(t_grid.len());
    let stats = dp.integrate(&mut sys, opts.t0, &y0, t_grid, |_, y| {
        let unpack = |off: usize| (0..nn).map(|e| Complex64::new(y[off + 2 * e], y[off + 2 * e + 1])).collect::<Vec<_>>();
        blocks.push(OracleBlock { range: range.clone(), alpha: unpack(0), beta: unpack(2 * nn), theta: y[4 * nn..].to_vec() });
        Ok(())
    })?;
    log::debug!("oracle sector {:?}: {} steps, {} rejected", range, stats.accepted, stats.rejected);
    Ok((blocks, stats))
}

/// Integrates every sector of `modes` and collects samples at `t_grid`.
pub fn integrate_exact(
    opts: &OracleOptions,
    modes: &ModeSet,
    t_grid: &[f64],
    motion: &MirrorMotion,
    solver: &ModeSolver,
) -> Result<OracleRun> {
    let mut per_sector = Vec::new();
    for r in modes.sectors() {
        per_sector.push(integrate_sector(opts, &modes.modes()[r.clone()], r, t_grid, motion, solver)?);
    }
    Ok(assemble(opts, modes, t_grid, motion, per_sector))
}

/// Builds a run from per-sector results given in sector order.
pub fn assemble(
    opts: &OracleOptions,
    modes: &ModeSet,
    t_grid: &[f64],
    motion: &MirrorMotion,
    per_sector: Vec<(Vec<OracleBlock>, IntegrationStats)>,
) -> OracleRun {
    let mut stats = IntegrationStats { smallest_step: f64::INFINITY, ..Default::default() };
    let mut columns = Vec::with_capacity(per_sector.len());
    for (blocks, s) in per_sector {
        stats.accepted += s.accepted;
        stats.rejected += s.rejected;
        stats.evaluations += s.evaluations;
        stats.local_error = stats.local_error.max(s.local_error);
        stats.smallest_step = stats.smallest_step.min(s.smallest_step);
        columns.push(blocks.into_iter());
    }
    let samples = t_grid
        .iter()
        .map(|&t| {
            let blocks: Vec<OracleBlock> = columns.iter_mut().filter_map(|c| c.next()).collect();
            let unitarity_defect =
                blocks.iter().map(|b| unitarity_defect(&b.alpha, &b.beta, b.range.len())).fold(0.0, f64::max);
            OracleSample { t, blocks, unitarity_defect }
        })
        .collect();
    OracleRun { modes: modes.clone(), options: opts.clone(), epsilon: motion.epsilon(), samples, stats }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bogoliubov::{solve_perturbative, PerturbativeOptions};
    use crate::coupling::phase_theta;
    use crate::geometry::{CavityConfig, MetricOrder, MetricParams};
    use crate::modes::SolverOptions;

    fn solver(metric: MetricParams, order: MetricOrder) -> ModeSolver {
        ModeSolver::new(CavityConfig::new(1.0).unwrap(), metric, order, SolverOptions::default()).unwrap()
    }

    #[test]
    fn static_mirror_is_identity() {
        let s = solver(MetricParams::FLAT, MetricOrder::First);
        let m = MirrorMotion::sine(0.0, 3.0).unwrap();
        let set = ModeSet::sector(1, 1, 4).unwrap();
        let run = integrate_exact(&OracleOptions::default(), &set, &[0.0, 2.0], &m, &s).unwrap();
        for smp in &run.samples {
            assert_eq!(smp.unitarity_defect, 0.0);
            for i in 0..4 {
                for j in 0..4 {
                    let id = if i == j { 1.0 } else { 0.0 };
                    assert_eq!(smp.alpha_at(i, j), Complex64::new(id, 0.0));
                    assert_eq!(smp.beta_at(i, j), Complex64::new(0.0, 0.0));
                }
            }
        }
        let w = s.frequency(&set.modes()[2], 1.0).unwrap();
        assert!((run.samples[1].theta_at(2).unwrap() - 2.0 * w).abs() < 1e-12 * w);
    }

    #[test]
    fn defect_is_zero_at_start_and_small_later() {
        let s = solver(MetricParams::FLAT, MetricOrder::First);
        let w = s.frequency(&ModeIndex::FUNDAMENTAL, 1.0).unwrap();
        let m = MirrorMotion::sine(1e-3, 2.0 * w).unwrap();
        let set = ModeSet::sector(1, 1, 4).unwrap();
        let run = integrate_exact(&OracleOptions::default(), &set, &[0.0, 5.0], &m, &s).unwrap();
        assert_eq!(run.samples[0].unitarity_defect, 0.0);
        assert!(run.samples[1].unitarity_defect < 1e-8, "{}", run.samples[1].unitarity_defect);
    }

    #[test]
    fn theta_matches_quadrature() {
        let s = solver(MetricParams::FLAT, MetricOrder::First);
        let m = MirrorMotion::sine(1e-2, 7.0).unwrap();
        let set = ModeSet::sector(1, 1, 2).unwrap();
        let run = integrate_exact(&OracleOptions::default(), &set, &[1.3], &m, &s).unwrap();
        for i in 0..2 {
            let th = phase_theta(&set.modes()[i], 0.0, 1.3, &m, &s).unwrap();
            assert!((run.samples[0].theta_at(i).unwrap() - th).abs() < 1e-8 * th);
        }
    }

    #[test]
    fn agrees_with_first_order_reconstruction() {
        let s = solver(MetricParams::FLAT, MetricOrder::First);
        let w = s.frequency(&ModeIndex::FUNDAMENTAL, 1.0).unwrap();
        let set = ModeSet::sector(1, 1, 3).unwrap();
        let gap = |eps: f64| {
            let m = MirrorMotion::sine(eps, 2.0 * w).unwrap();
            let run = integrate_exact(&OracleOptions::default(), &set, &[4.0], &m, &s).unwrap();
            let pert =
                solve_perturbative(&PerturbativeOptions { phases: false, ..Default::default() }, &set, &[4.0], &m, &s)
                    .unwrap();
            (run.samples[0].beta_at(0, 0) - pert[0].beta_order_at(1, 0, 0) * eps).norm()
        };
        let (g1, g2) = (gap(1e-3), gap(5e-4));
        let slope = (g1 / g2).log2();
        assert!((slope - 2.0).abs() < 0.2, "slope {slope}");
    }

    #[test]
    fn second_order_reconstruction_gains_an_order() {
        let s = solver(MetricParams::FLAT, MetricOrder::First);
        let w = s.frequency(&ModeIndex::FUNDAMENTAL, 1.0).unwrap();
        let set = ModeSet::sector(1, 1, 3).unwrap();
        let opts = PerturbativeOptions { phases: false, max_order: 2, ..Default::default() };
        let gap = |eps: f64| {
            let m = MirrorMotion::sine(eps, 2.0 * w).unwrap();
            let tight = OracleOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() };
            let run = integrate_exact(&tight, &set, &[6.0], &m, &s).unwrap();
            let pert = solve_perturbative(&opts, &set, &[6.0], &m, &s).unwrap();
            let mut sum = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    sum += (run.samples[0].beta_at(i, j) - pert[0].beta_at(i, j, eps)).norm_sqr();
                }
            }
            sum.sqrt()
        };
        let slope = (gap(2e-3) / gap(1e-3)).log2();
        assert!((slope - 3.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn tighter_tolerance_stays_within_estimate() {
        let s = solver(MetricParams::FLAT, MetricOrder::First);
        let w = s.frequency(&ModeIndex::FUNDAMENTAL, 1.0).unwrap();
        let m = MirrorMotion::sine(1e-3, 2.0 * w).unwrap();
        let set = ModeSet::sector(1, 1, 3).unwrap();
        let loose = OracleOptions { rtol: 1e-8, atol: 1e-10, ..Default::default() };
        let tight = OracleOptions { rtol: 5e-9, atol: 5e-11, ..Default::default() };
        let a = integrate_exact(&loose, &set, &[3.0], &m, &s).unwrap();
        let b = integrate_exact(&tight, &set, &[3.0], &m, &s).unwrap();
        let diff = (a.samples[0].beta_at(0, 0) - b.samples[0].beta_at(0, 0)).norm();
        let budget = a.stats.local_error * (a.stats.accepted as f64);
        assert!(diff <= budget, "{diff} vs {budget}");
    }

    #[test]
    fn output_grid_independence() {
        let s = solver(MetricParams::FLAT, MetricOrder::First);
        let m = MirrorMotion::sine(1e-3, 9.0).unwrap();
        let set = ModeSet::sector(1, 1, 3).unwrap();
        let o = OracleOptions::default();
        let a = integrate_exact(&o, &set, &[2.0], &m, &s).unwrap();
        let b = integrate_exact(&o, &set, &[0.5, 1.0, 1.7, 2.0], &m, &s).unwrap();
        let d = (a.samples[0].beta_at(0, 1) - b.samples[3].beta_at(0, 1)).norm();
        assert!(d < 1e-9, "{d}");
    }

    #[test]
    fn tabulated_couplings_match_closed_form() {
        let s = solver(MetricParams::FLAT, MetricOrder::First);
        let m = MirrorMotion::sine(1e-3, 11.0).unwrap();
        let set = ModeSet::sector(1, 1, 3).unwrap();
        let a = integrate_exact(&OracleOptions::default(), &set, &[1.5], &m, &s).unwrap();
        let q = OracleOptions { source: CouplingSource::Quadrature, ..Default::default() };
        let b = integrate_exact(&q, &set, &[1.5], &m, &s).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let d = (a.samples[0].beta_at(i, j) - b.samples[0].beta_at(i, j)).norm();
                assert!(d < 1e-9, "{i}{j}: {d}");
            }
        }
    }

    #[test]
    fn second_order_metric_runs() {
        let metric = MetricParams::from_gamma_a0(1e-3, 1e-2, 1.0).unwrap();
        let s = solver(metric, MetricOrder::Second);
        let w = s.frequency(&ModeIndex::FUNDAMENTAL, 1.0).unwrap();
        let m = MirrorMotion::sine(1e-3, 2.0 * w).unwrap();
        let set = ModeSet::sector(1, 1, 3).unwrap();
        let q = OracleOptions { source: CouplingSource::Quadrature, ..Default::default() };
        let run = integrate_exact(&q, &set, &[3.0], &m, &s).unwrap();
        assert!(run.samples[0].unitarity_defect < 1e-8);
        assert!(run.samples[0].beta_row_norm_sq(0) > 0.0);
    }

    #[test]
    fn sectors_stay_decoupled() {
        let s = solver(MetricParams::FLAT, MetricOrder::First);
        let m = MirrorMotion::sine(1e-3, 9.0).unwrap();
        let set = ModeSet::new(2, 1, 2).unwrap();
        let run = integrate_exact(&OracleOptions::default(), &set, &[1.0], &m, &s).unwrap();
        assert_eq!(run.samples[0].beta_at(0, 2), Complex64::new(0.0, 0.0));
        assert!(run.samples[0].beta_at(2, 3).norm() > 0.0);
    }
}
