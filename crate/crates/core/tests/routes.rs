//! The perturbative pipeline and the exact truncated integration, driven through
//! the public API only.

use dce_core::bogoliubov::{self, ModeSet, PerturbativeOptions};
use dce_core::coupling::CouplingSource;
use dce_core::geometry::{CavityConfig, MetricOrder, MetricParams, MirrorMotion, ModeIndex};
use dce_core::modes::{ModeSolver, SolverOptions};
use dce_core::oracle::{self, OracleOptions};

fn solver(chi: f64, gamma_a0: f64, order: MetricOrder) -> ModeSolver {
    let metric = MetricParams::from_gamma_a0(chi, gamma_a0, 1.0).unwrap();
    ModeSolver::new(CavityConfig::new(1.0).unwrap(), metric, order, SolverOptions::default()).unwrap()
}

fn resonant(s: &ModeSolver, eps: f64) -> MirrorMotion {
    let w = s.frequency(&ModeIndex::FUNDAMENTAL, 1.0).unwrap();
    MirrorMotion::sine(eps, 2.0 * w).unwrap()
}

fn compare(s: &ModeSolver, opts: &PerturbativeOptions, eps: f64, t: f64, nz: u32) -> (f64, f64) {
    let m = resonant(s, eps);
    let set = ModeSet::sector(1, 1, nz).unwrap();
    let pert = bogoliubov::solve_perturbative(opts, &set, &[t], &m, s).unwrap();
    let oo = OracleOptions { source: opts.source, ..Default::default() };
    let run = oracle::integrate_exact(&oo, &set, &[t], &m, s).unwrap();
    (pert[0].beta_row_norm_sq(0, eps), run.samples[0].beta_row_norm_sq(0))
}

#[test]
fn pipeline_matches_oracle_in_flat_space() {
    let s = solver(0.0, 0.0, MetricOrder::First);
    let opts = PerturbativeOptions { source: CouplingSource::ClosedForm, phases: false, ..Default::default() };
    let (p, o) = compare(&s, &opts, 1e-3, 20.0, 6);
    assert!((p - o).abs() <= 1e-2 * o, "pipeline {p:e} oracle {o:e}");
}

#[test]
fn second_order_routes_agree_under_a_gradient() {
    let s = solver(1e-3, 1e-2, MetricOrder::Second);
    let opts = PerturbativeOptions { max_order: 2, phases: false, ..Default::default() };
    let (p, o) = compare(&s, &opts, 1e-3, 10.0, 4);
    assert!((p - o).abs() <= 1e-2 * o, "pipeline {p:e} oracle {o:e}");
}

#[test]
fn stationary_mirror_creates_nothing() {
    let s = solver(1e-3, 0.0, MetricOrder::First);
    let set = ModeSet::sector(1, 1, 4).unwrap();
    let m = MirrorMotion::stationary();
    let run = oracle::integrate_exact(&OracleOptions::default(), &set, &[5.0], &m, &s).unwrap();
    assert_eq!(run.samples[0].beta_row_norm_sq(0), 0.0);
    let pert = bogoliubov::solve_perturbative(&PerturbativeOptions::default(), &set, &[5.0], &m, &s).unwrap();
    assert_eq!(pert[0].beta_row_norm_sq(0, 0.0), 0.0);
}

#[test]
fn sectors_do_not_mix_in_flat_space() {
    let s = solver(0.0, 0.0, MetricOrder::First);
    let m = resonant(&s, 1e-3);
    let set = ModeSet::new(2, 1, 3).unwrap();
    let run = oracle::integrate_exact(&OracleOptions::default(), &set, &[8.0], &m, &s).unwrap();
    let a = set.index_of(&ModeIndex::FUNDAMENTAL).unwrap();
    let b = set.index_of(&ModeIndex::new(2, 1, 1).unwrap()).unwrap();
    assert_eq!(run.samples[0].beta_at(a, b).norm(), 0.0);
    assert!(run.samples[0].beta_row_norm_sq(a) > 0.0);
}
