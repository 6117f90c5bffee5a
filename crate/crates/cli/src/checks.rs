//! Invariant checks behind `validate`, also used by the acceptance target.

use std::time::{Duration, Instant};

use dce_core::bogoliubov::{self, ModeSet, PerturbativeOptions};
use dce_core::coupling::{lambda_xi_closed_form, lambda_xi_numeric, velocity_coupling, velocity_coupling_closed, CouplingSource};
use dce_core::geometry::{
    from_proper_units, to_proper_units, CavityConfig, MetricOrder, MetricParams, MirrorMotion, ModeIndex,
};
use dce_core::modes::{inner_product, ModeSolver, SolverOptions};
use dce_core::observables::{n_final, n_first_order, n_first_order_resonant, n_fundamental, proper_time_for};
use dce_core::oracle::{self, OracleOptions};
use dce_core::Result;
use rayon::prelude::*;

use crate::config::{gamma_a0_from_proper, RunConfig, Suite};
use crate::CliResult;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub suite: &'static str,
    pub passed: bool,
    pub measured: f64,
    pub bound: String,
}

impl Check {
    fn at_most(name: &'static str, suite: &'static str, measured: f64, bound: f64) -> Self {
        Self { name, suite, passed: measured <= bound, measured, bound: format!("<= {bound:e}") }
    }

    fn within(name: &'static str, suite: &'static str, measured: f64, lo: f64, hi: f64) -> Self {
        Self { name, suite, passed: (lo..=hi).contains(&measured), measured, bound: format!("{lo}..{hi}") }
    }

    fn negative(name: &'static str, suite: &'static str, measured: f64) -> Self {
        Self { name, suite, passed: measured < 0.0, measured, bound: "< 0".into() }
    }
}

pub fn solver(a0: f64, chi: f64, gamma_a0: f64, order: MetricOrder) -> Result<ModeSolver> {
    let metric = MetricParams::from_gamma_a0(chi, gamma_a0, a0)?;
    ModeSolver::new(CavityConfig::new(a0)?, metric, order, SolverOptions::default())
}

pub fn flat_solver() -> ModeSolver {
    solver(1.0, 0.0, 0.0, MetricOrder::First).expect("flat unit cavity")
}

fn axial_modes(nz_max: u32) -> Vec<ModeIndex> {
    (1..=nz_max).map(|z| ModeIndex::new(1, 1, z).expect("positive")).collect()
}

/// max |⟨u_i, u_j⟩ − δ_ij| over the sector (1,1,1..=nz_max) at rest.
pub fn orthonormality(s: &ModeSolver, nz_max: u32) -> Result<f64> {
    let modes = axial_modes(nz_max).iter().map(|k| s.mode(k, s.a0())).collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    for (i, u) in modes.iter().enumerate() {
        for (j, w) in modes.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((inner_product(u, w, s.options())? - target).abs());
        }
    }
    Ok(worst)
}

/// max over the sector of |ζ(0)|, |ζ(a₀)| relative to max|ζ|.
pub fn boundary(s: &ModeSolver, nz_max: u32) -> Result<f64> {
    let a = s.a0();
    let mut worst = 0.0f64;
    for k in axial_modes(nz_max) {
        let u = s.mode(&k, a)?;
        let peak = (0..=400).map(|i| u.axial(a * i as f64 / 400.0).abs()).fold(0.0, f64::max);
        worst = worst.max(u.axial(0.0).abs().max(u.axial(a).abs()) / peak);
    }
    Ok(worst)
}

/// Largest relative gap between closed-form and ε-differentiated Λ⁽¹⁾ over
/// sector pairs with n_z, n_z′ ≤ `nz_max`, sampled at (j + ½)T/`samples` over
/// one drive period T of a resonant drive.
pub fn lambda_agreement(nz_max: u32, samples: usize) -> Result<f64> {
    let s = flat_solver();
    let varpi = 2.0 * s.frequency(&ModeIndex::FUNDAMENTAL, 1.0)?;
    let motion = MirrorMotion::sine(1e-3, varpi)?;
    let period = 2.0 * std::f64::consts::PI / varpi;
    let modes = axial_modes(nz_max);
    let pairs: Vec<(ModeIndex, ModeIndex)> = modes.iter().flat_map(|k| modes.iter().map(move |kp| (*k, *kp))).collect();
    let worst = pairs
        .par_iter()
        .map(|(k, kp)| -> Result<f64> {
            let mut w = 0.0f64;
            for j in 0..samples {
                let t = (j as f64 + 0.5) * period / samples as f64;
                let c = lambda_xi_closed_form(k, kp, 0.0, t, &motion, &s)?.lambda;
                let q = lambda_xi_numeric(k, kp, 0.0, t, 1, &motion, &s, 1e-7)?.lambda;
                let scale = c.norm().max(1e-300);
                if c.norm() > 0.0 || q.norm() > 1e-14 {
                    w = w.max((c - q).norm() / scale);
                }
            }
            Ok(w)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

/// Largest relative gap between closed-form and quadrature couplings g_kk′(a₀).
pub fn coupling_agreement(nz_max: u32) -> Result<f64> {
    let s = flat_solver();
    let modes = axial_modes(nz_max);
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for k in &modes {
        for kp in &modes {
            let c = velocity_coupling_closed(k, kp, 1.0, &s)?;
            let q = velocity_coupling(k, kp, 1.0, &s)?;
            worst = worst.max((c - q).abs());
            scale = scale.max(c.abs());
        }
    }
    Ok(worst / scale)
}

/// Cross-sector couplings, which vanish identically.
pub fn cross_sector_coupling() -> Result<f64> {
    let s = flat_solver();
    let (a, b) = (ModeIndex::new(1, 1, 1)?, ModeIndex::new(2, 1, 2)?);
    Ok(velocity_coupling(&a, &b, 1.0, &s)?.abs().max(velocity_coupling_closed(&a, &b, 1.0, &s)?.abs()))
}

/// max over n_z ≤ `nz_max` of |ω_root − (1 − 2χ + γa₀)|k||/ω, divided by (γa₀)².
pub fn quantization_ratio(gamma_a0: f64, nz_max: u32) -> Result<f64> {
    let s = solver(1.0, 0.0, gamma_a0, MetricOrder::Second)?;
    let mut worst = 0.0f64;
    for k in axial_modes(nz_max) {
        let approx = s.closed_form_frequency(&k, 1.0);
        let root = s.frequency(&k, 1.0)?;
        worst = worst.max((root - approx).abs() / approx);
    }
    Ok(worst / (gamma_a0 * gamma_a0))
}

/// Relative round-trip error of the first-order proper-unit conversion.
pub fn proper_round_trip(chi: f64) -> Result<f64> {
    let p = MetricParams::new(chi, 0.0)?;
    let u = to_proper_units(1.3, 7.0, &p, MetricOrder::First);
    let (a0, t) = from_proper_units(u.a_p, u.t_p, &p, MetricOrder::First);
    Ok(((a0 - 1.3) / 1.3).abs().max(((t - 7.0) / 7.0).abs()))
}

/// Resonant first-order 𝒩 of (1,1,nz) at fixed proper length and time, for a given χ.
pub fn resonant_in_proper_units(chi: f64, nz: u32, eps: f64, t_p: f64, a_p: f64) -> Result<f64> {
    let p = MetricParams::new(chi, 0.0)?;
    let (a0, t) = from_proper_units(a_p, t_p, &p, MetricOrder::First);
    let k = ModeIndex::new(1, 1, nz)?;
    Ok(n_first_order_resonant(&k, &k, eps, t, &p, a0))
}

/// Flat cavity of unit length driven at 2ω₁ with amplitude `eps`.
pub fn flat_resonant(eps: f64) -> Result<(ModeSolver, MirrorMotion)> {
    let s = flat_solver();
    let w = s.frequency(&ModeIndex::FUNDAMENTAL, 1.0)?;
    Ok((s, MirrorMotion::sine(eps, 2.0 * w)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timed {
    pub value: f64,
    pub elapsed: Duration,
}

/// Pipeline 𝒩₁ in flat space, resonant drive, first order in ε.
pub fn pipeline_fundamental(nz_max: u32, tau_p: f64, eps: f64, rwa: bool) -> Result<Timed> {
    let start = Instant::now();
    let (s, m) = flat_resonant(eps)?;
    let t = proper_time_for(tau_p, eps, 1.0);
    let opts = PerturbativeOptions { rwa, source: CouplingSource::ClosedForm, phases: false, ..Default::default() };
    let set = ModeSet::sector(1, 1, nz_max)?;
    let st = bogoliubov::solve_perturbative(&opts, &set, &[t], &m, &s)?;
    let value = st[0].beta_row_norm_sq(0, eps);
    Ok(Timed { value, elapsed: start.elapsed() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleFundamental {
    pub n: f64,
    pub defect: f64,
    pub elapsed: Duration,
}

/// Oracle 𝒩₁ and unitarity defect in flat space under resonant drive.
pub fn oracle_fundamental(nz_max: u32, tau_p: f64, eps: f64, opts: &OracleOptions) -> Result<OracleFundamental> {
    let start = Instant::now();
    let (s, m) = flat_resonant(eps)?;
    let t = proper_time_for(tau_p, eps, 1.0);
    let run = oracle::integrate_exact(opts, &ModeSet::sector(1, 1, nz_max)?, &[t], &m, &s)?;
    let smp = &run.samples[0];
    Ok(OracleFundamental { n: smp.beta_row_norm_sq(0), defect: smp.unitarity_defect, elapsed: start.elapsed() })
}

pub fn tight_oracle() -> OracleOptions {
    OracleOptions { rtol: 1e-12, atol: 1e-14, ..Default::default() }
}

/// Frobenius norm over the sector of β̃_oracle − ε β̃⁽¹⁾ at time `t`.
pub fn first_order_gap(eps: f64, t: f64, nz_max: u32) -> Result<f64> {
    let (s, m) = flat_resonant(eps)?;
    let set = ModeSet::sector(1, 1, nz_max)?;
    let run = oracle::integrate_exact(&tight_oracle(), &set, &[t], &m, &s)?;
    let opts = PerturbativeOptions { source: CouplingSource::ClosedForm, phases: false, ..Default::default() };
    let pert = bogoliubov::solve_perturbative(&opts, &set, &[t], &m, &s)?;
    let n = set.len();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            sum += (run.samples[0].beta_at(i, j) - pert[0].beta_order_at(1, i, j) * eps).norm_sqr();
        }
    }
    Ok(sum.sqrt())
}

/// Least-squares slope of log y against log x.
pub fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

/// Largest relative gap between the fundamental formula and the general
/// formula at (1,1,1) over a `n`×`n` grid of (χ, γa_p) ∈ [0, 1e-2]×[0, 1e-1].
pub fn fundamental_vs_final(n: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let chi = 1e-2 * i as f64 / (n - 1) as f64;
            let g = 1e-1 * j as f64 / (n - 1) as f64;
            let a = n_fundamental(0.1, chi, g);
            let b = n_final(&ModeIndex::FUNDAMENTAL, 0.1, chi, g);
            worst = worst.max((a - b).abs() / a);
        }
    }
    worst
}

/// General-formula values along (1,1,1..=3) at τ_p = 0.1/|n|.
pub fn transverse_trend(chi: f64, gamma_a_p: f64) -> Result<Vec<f64>> {
    (1..=3)
        .map(|z| {
            let k = ModeIndex::new(1, 1, z)?;
            Ok(n_final(&k, 0.1 / k.norm(), chi, gamma_a_p))
        })
        .collect()
}

/// Largest successive difference of a sequence (negative when strictly decreasing).
pub fn largest_step(v: &[f64]) -> f64 {
    v.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
}

/// General closed form at (1,1,1) against the order-2 pipeline (parametric, rotating-wave) for one γa_p.
pub fn final_vs_pipeline(gamma_a_p: f64, tau_p: f64, eps: f64, nz_max: u32) -> Result<(f64, f64)> {
    let chi = 0.0;
    let ga0 = gamma_a0_from_proper(gamma_a_p, chi);
    let s = solver(1.0, chi, ga0, MetricOrder::Second)?;
    let k = ModeIndex::FUNDAMENTAL;
    let varpi = 2.0 * s.frequency(&k, 1.0)?;
    let m = MirrorMotion::sine(eps, varpi)?;
    let a_p = 1.0 / (1.0 + chi + 0.5 * gamma_a_p);
    let t_p = proper_time_for(tau_p, eps, 1.0);
    let (_, t) = from_proper_units(a_p, t_p, s.metric(), MetricOrder::Second);
    let opts = PerturbativeOptions { rwa: true, phases: false, ..Default::default() };
    let st = bogoliubov::solve_perturbative(&opts, &ModeSet::sector(1, 1, nz_max)?, &[t], &m, &s)?;
    Ok((n_final(&k, tau_p, chi, gamma_a_p), st[0].beta_row_norm_sq(0, eps)))
}

/// Pipeline against the closed-form series over the same cutoff, flat, off-resonant time.
pub fn pipeline_vs_series(nz_max: u32) -> Result<f64> {
    let eps = 1e-3;
    let (s, m) = flat_resonant(eps)?;
    let varpi = m.varpi().unwrap_or_default();
    let t = 10.0;
    let opts = PerturbativeOptions { source: CouplingSource::ClosedForm, phases: false, ..Default::default() };
    let st = bogoliubov::solve_perturbative(&opts, &ModeSet::sector(1, 1, nz_max)?, &[t], &m, &s)?;
    let p = st[0].beta_row_norm_sq(0, eps);
    let c = n_first_order(&ModeIndex::FUNDAMENTAL, eps, varpi, t, s.metric(), 1.0, nz_max)?;
    Ok((p - c).abs() / c)
}

fn second_order_gamma(cfg: &RunConfig) -> f64 {
    if cfg.gamma_a0 > 0.0 {
        cfg.gamma_a0
    } else {
        1e-2
    }
}

fn core_suite(cfg: &RunConfig) -> CliResult<Vec<Check>> {
    const S: &str = "core";
    let ga = second_order_gamma(cfg);
    let first = solver(1.0, cfg.chi, 0.0, MetricOrder::First)?;
    let second = solver(1.0, cfg.chi, ga, MetricOrder::Second)?;
    let mut out = vec![
        Check::at_most("orthonormality_order1", S, orthonormality(&first, 8)?, 1e-6),
        Check::at_most("orthonormality_order2", S, orthonormality(&second, 8)?, 1e-6),
        Check::at_most("boundary_order1", S, boundary(&first, 8)?, 1e-10),
        Check::at_most("boundary_order2", S, boundary(&second, 8)?, 1e-10),
        Check::at_most("coupling_closed_vs_quadrature", S, coupling_agreement(8)?, 1e-6),
        Check::at_most("expansion_closed_vs_numeric", S, lambda_agreement(4, 5)?, 1e-6),
        Check::at_most("selection_rule", S, cross_sector_coupling()?, 0.0),
        Check::at_most("quantization_root", S, quantization_ratio(ga, 4)?, 10.0),
        Check::at_most("proper_units_round_trip", S, proper_round_trip(cfg.chi)?, 1e-14),
        Check::at_most("pipeline_vs_series", S, pipeline_vs_series(8)?, 1e-8),
    ];
    let eps = [1e-3, 5e-4, 2.5e-4];
    let gaps = eps.iter().map(|&e| first_order_gap(e, 10.0, 4)).collect::<Result<Vec<_>>>()?;
    out.push(Check::within("epsilon_scaling_slope", S, log_slope(&eps, &gaps), 1.8, 2.2));
    let o = oracle_fundamental(8, 0.05, 1e-3, &OracleOptions { rtol: cfg.rtol, atol: cfg.atol, ..Default::default() })?;
    out.push(Check::at_most("unitarity_defect", S, o.defect, 1e-6));
    let a = resonant_in_proper_units(0.0, 1, 1e-3, 20.0, 1.0)?;
    let b = resonant_in_proper_units(1e-3, 1, 1e-3, 20.0, 1.0)?;
    out.push(Check::at_most("first_order_chi_invariance", S, (a - b).abs() / a, 1e-8));
    let n1: Vec<f64> = (0..=20).map(|i| n_fundamental(0.1, 0.0, 0.01 * i as f64)).collect();
    out.push(Check::negative("fundamental_decreasing_in_gradient", S, largest_step(&n1)));
    Ok(out)
}

fn formulas_suite(cfg: &RunConfig) -> CliResult<Vec<Check>> {
    const S: &str = "formulas";
    let mut out = vec![Check::at_most("fundamental_equals_general_formula", S, fundamental_vs_final(5), 1e-12)];
    let p = pipeline_fundamental(16, 0.1, 1e-3, true)?;
    out.push(Check::at_most("pipeline_fundamental_vs_tau_sq", S, (p.value - 0.01).abs() / 0.01, 1e-2));
    let o = oracle_fundamental(16, 0.05, 1e-3, &OracleOptions { rtol: cfg.rtol, atol: cfg.atol, ..Default::default() })?;
    out.push(Check::at_most("oracle_fundamental_vs_tau_sq", S, (o.n - 0.0025).abs() / 0.0025, 2e-2));
    let trend = [0.0, 0.05, 0.1]
        .iter()
        .map(|&g| transverse_trend(0.0, g).map(|v| largest_step(&v)))
        .collect::<Result<Vec<_>>>()?;
    out.push(Check::negative("general_formula_decreasing_in_n", S, trend.into_iter().fold(f64::NEG_INFINITY, f64::max)));
    let mut worst = 0.0f64;
    for g in [1e-3, 1e-2] {
        let (c, p) = final_vs_pipeline(g, 0.05, 1e-3, 16)?;
        worst = worst.max((c - p).abs() / c);
    }
    out.push(Check::at_most("general_formula_vs_order2_pipeline", S, worst, 2e-2));
    let d = [4, 8, 16]
        .iter()
        .map(|&nz| oracle_fundamental(nz, 0.05, 1e-3, &tight_oracle()).map(|o| o.defect))
        .collect::<Result<Vec<_>>>()?;
    out.push(Check::negative("defect_decreases_with_cutoff", S, largest_step(&d)));
    Ok(out)
}

pub fn run(cfg: &RunConfig) -> CliResult<Vec<Check>> {
    let mut out = Vec::new();
    if matches!(cfg.suite, Suite::Core | Suite::All) {
        out.extend(core_suite(cfg)?);
    }
    if matches!(cfg.suite, Suite::Formulas | Suite::All) {
        out.extend(formulas_suite(cfg)?);
    }
    Ok(out)
}
