//! Mean particle numbers and the closed-form results for them.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // std float methods shadow it when std is linked
use num_traits::Float;

use crate::bogoliubov::BogoliubovState;
use crate::coupling::velocity_coupling;
use crate::geometry::{MetricOrder, MetricParams, ModeIndex};
use crate::modes::ModeSolver;
use crate::oracle::OracleSample;
use crate::{Error, Result};

/// Detunings below this fraction of the pair frequency use the resonant limit.
pub const RESONANCE_THRESHOLD: f64 = 1e-9;
/// Above this τ_p the short-time closed forms are flagged.
pub const TAU_P_WARNING: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    ClosedForm,
    Perturbative,
    Oracle,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::Perturbative => "perturbative",
            Method::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ParameterSnapshot {
    pub chi: f64,
    pub gamma_a_p: f64,
    pub epsilon: f64,
    pub varpi: f64,
    pub tau_p: f64,
}

/// Particle numbers from a single method.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    method: Method,
    entries: Vec<(ModeIndex, f64)>,
    pub params: ParameterSnapshot,
}

impl SpectrumResult {
    pub fn new(method: Method, params: ParameterSnapshot) -> Self {
        Self { method, entries: Vec::new(), params }
    }

    pub fn push(&mut self, k: ModeIndex, n: f64) -> Result<()> {
        if !(n >= 0.0) {
            return Err(Error::NonFinite("mean particle number must be a non-negative number"));
        }
        self.entries.push((k, n));
        Ok(())
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn entries(&self) -> &[(ModeIndex, f64)] {
        &self.entries
    }

    pub fn get(&self, k: &ModeIndex) -> Option<f64> {
        self.entries.iter().find(|(m, _)| m == k).map(|&(_, n)| n)
    }
}

/// 𝒩_k ≃ ε² Σ_k′ |β̃⁽¹⁾_kk′|² from a perturbative state.
pub fn mean_number_perturbative(state: &BogoliubovState, k: &ModeIndex, eps: f64) -> Result<f64> {
    let i = state.modes().index_of(k).ok_or(Error::UnknownMode(*k))?;
    let s: f64 = (0..state.modes().len()).map(|j| state.beta_order_at(1, i, j).norm_sqr()).sum();
    Ok(eps * eps * s)
}

/// 𝒩_k = Σ_k′ |β̃_kk′|² from an oracle sample (`i` is the mode's position).
pub fn mean_number_oracle(sample: &OracleSample, i: usize) -> f64 {
    sample.beta_row_norm_sq(i)
}

/// Pair frequency ω_{n,n′} = c π(|n| + |n′|)/a₀, zero across sectors. The first
/// order uses the exact flat speed √((1−2χ)/(1+2χ)), the second 1 − 2χ + γa₀.
pub fn pair_frequency(n: &ModeIndex, np: &ModeIndex, metric: &MetricParams, a0: f64, order: MetricOrder) -> f64 {
    if !n.same_sector(np) {
        return 0.0;
    }
    let chi = metric.chi();
    let speed = match order {
        MetricOrder::First => ((1.0 - 2.0 * chi) / (1.0 + 2.0 * chi)).sqrt(),
        MetricOrder::Second => 1.0 - 2.0 * chi + metric.gamma() * a0,
    };
    speed * PI / a0 * (n.norm() + np.norm())
}

fn sinc_term(detuning: f64, scale: f64, t: f64) -> Complex64 {
    let x = detuning * t;
    if detuning.abs() < RESONANCE_THRESHOLD * scale || x == 0.0 {
        return Complex64::new(0.0, 1.0);
    }
    if x.abs() < 1e-4 {
        // (e^{ix} − 1)/x = −x/2 + x³/24 + i(1 − x²/6) + O(x⁴)
        return Complex64::new(-x / 2.0 + x * x * x / 24.0, 1.0 - x * x / 6.0);
    }
    (Complex64::new(0.0, x).exp() - 1.0) / x
}

/// f = (e^{i(ω−ϖ)t} − 1)/((ω−ϖ)t) + (e^{i(ω+ϖ)t} − 1)/((ω+ϖ)t) for pair frequency ω.
pub fn f_factor(omega_pair: f64, varpi: f64, t: f64) -> Complex64 {
    let scale = omega_pair.abs().max(varpi.abs());
    sinc_term(omega_pair - varpi, scale, t) + sinc_term(omega_pair + varpi, scale, t)
}

/// |f_{n,n′}(ϖ, t)| with the pair frequency at the given metric order.
pub fn f_factor_modes(
    n: &ModeIndex,
    np: &ModeIndex,
    varpi: f64,
    t: f64,
    metric: &MetricParams,
    a0: f64,
    order: MetricOrder,
) -> f64 {
    if !n.same_sector(np) {
        return 0.0;
    }
    f_factor(pair_frequency(n, np, metric, a0, order), varpi, t).norm()
}

/// 𝒞_{n,n′} of the first-order result.
pub fn coupling_constant_first(n: &ModeIndex, np: &ModeIndex) -> f64 {
    if !n.same_sector(np) {
        return 0.0;
    }
    let (z, zp) = (n.nz() as f64, np.nz() as f64);
    if n.nz() == np.nz() {
        let q = z * z / n.norm_sq();
        return 0.25 * q * q;
    }
    let d = zp * zp - z * z;
    let (m, mp) = (n.norm(), np.norm());
    z * z * zp * zp / (d * d) * (m - mp) * (m - mp) / (m * mp)
}

/// 𝒩_k = ¼ Σ_n′ ε²ϖ²t² 𝒞_{n,n′} |f_{n,n′}|² over n′ = (n_x, n_y, 1..=nz_max).
pub fn n_first_order(
    k: &ModeIndex,
    eps: f64,
    varpi: f64,
    t: f64,
    metric: &MetricParams,
    a0: f64,
    nz_max: u32,
) -> Result<f64> {
    let mut sum = 0.0;
    for z in 1..=nz_max {
        let kp = k.with_nz(z)?;
        let f = f_factor_modes(k, &kp, varpi, t, metric, a0, MetricOrder::First);
        sum += coupling_constant_first(k, &kp) * f * f;
    }
    Ok(0.25 * (eps * varpi * t).powi(2) * sum)
}

/// Resonant limit ¼ 𝒞 (ε ω_{n,n′} t)².
pub fn n_first_order_resonant(k: &ModeIndex, kp: &ModeIndex, eps: f64, t: f64, metric: &MetricParams, a0: f64) -> f64 {
    let w = pair_frequency(k, kp, metric, a0, MetricOrder::First);
    0.25 * coupling_constant_first(k, kp) * (eps * w * t).powi(2)
}

/// Resonant limit in proper units, 𝒞 (ε π(|n|+|n′|) t_p / (2a_p))².
pub fn n_first_order_resonant_proper(k: &ModeIndex, kp: &ModeIndex, eps: f64, t_p: f64, a_p: f64) -> f64 {
    if !k.same_sector(kp) {
        return 0.0;
    }
    coupling_constant_first(k, kp) * (eps * PI / (2.0 * a_p) * (k.norm() + kp.norm()) * t_p).powi(2)
}

/// 𝒞⁽²⁾_{n,n} ≃ ¼(n_z²/|n|² − γa₀)² under parametric drive.
pub fn coupling_constant_second_parametric(n: &ModeIndex, gamma_a0: f64) -> f64 {
    let d = n.axial_fraction() - gamma_a0;
    if gamma_a0 > crate::geometry::WEAK_FIELD_LIMIT {
        log::warn!("γa₀ = {gamma_a0} is outside the weak-field range");
    }
    0.25 * d * d
}

/// 𝒞⁽²⁾_{n,n′} = (a₀ g_(kk′)(a₀))² from the quadrature couplings of `solver`.
pub fn coupling_constant_quadrature(k: &ModeIndex, kp: &ModeIndex, solver: &ModeSolver) -> Result<f64> {
    if !k.same_sector(kp) {
        return Ok(0.0);
    }
    let a0 = solver.a0();
    let g = 0.5 * (velocity_coupling(k, kp, a0, solver)? + velocity_coupling(kp, k, a0, solver)?);
    Ok((a0 * g).powi(2))
}

/// Second-order 𝒩_k = ¼ Σ_n′ ε²ϖ²t² 𝒞⁽²⁾_{n,n′} |f_{n,n′}|², with 𝒞⁽²⁾ by quadrature
/// and the γ-shifted pair frequencies.
pub fn n_second_order(k: &ModeIndex, eps: f64, varpi: f64, t: f64, solver: &ModeSolver, nz_max: u32) -> Result<f64> {
    let mut sum = 0.0;
    for z in 1..=nz_max {
        let kp = k.with_nz(z)?;
        let f = f_factor_modes(k, &kp, varpi, t, solver.metric(), solver.a0(), MetricOrder::Second);
        sum += coupling_constant_quadrature(k, &kp, solver)? * f * f;
    }
    Ok(0.25 * (eps * varpi * t).powi(2) * sum)
}

/// Parametric second-order result in coordinate units, (εω_k(0)t/2)²(γa₀ − n_z²/|n|²)².
pub fn n_second_order_parametric(k: &ModeIndex, eps: f64, omega0: f64, t: f64, gamma_a0: f64) -> f64 {
    (eps * omega0 * t / 2.0).powi(2) * (gamma_a0 - k.axial_fraction()).powi(2)
}

/// τ_p = επ t_p / (2a₀).
pub fn tau_p(eps: f64, t_p: f64, a0: f64) -> f64 {
    eps * PI * t_p / (2.0 * a0)
}

/// Proper time reaching a given τ_p.
pub fn proper_time_for(tau_p: f64, eps: f64, a0: f64) -> f64 {
    2.0 * a0 * tau_p / (eps * PI)
}

fn check_tau(tau_p: f64) {
    if tau_p > TAU_P_WARNING {
        log::warn!("τ_p = {tau_p} is beyond the short-time range of the closed forms");
    }
}

/// 𝒩_k = [n_z²/|n|²(1 − 4χ) − γa_p(1 + n_z²/|n|²)]² (|n|τ_p)².
pub fn n_final(k: &ModeIndex, tau_p: f64, chi: f64, gamma_a_p: f64) -> f64 {
    check_tau(tau_p);
    let q = k.axial_fraction();
    let bracket = q * (1.0 - 4.0 * chi) - gamma_a_p * (1.0 + q);
    bracket * bracket * k.norm_sq() * tau_p * tau_p
}

/// 𝒩₁ = [1 − 4χ − 2γa_p]² τ_p² for the fundamental mode.
pub fn n_fundamental(tau_p: f64, chi: f64, gamma_a_p: f64) -> f64 {
    check_tau(tau_p);
    let bracket = 1.0 - 4.0 * chi - 2.0 * gamma_a_p;
    bracket * bracket * tau_p * tau_p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResonanceKind {
    /// ϖ = 2ω_k
    Degenerate,
    /// ϖ = ω_k + ω_k′
    Nondegenerate,
    /// ϖ = |ω_k − ω_k′|
    Scattering,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub kind: ResonanceKind,
    pub modes: (ModeIndex, ModeIndex),
    pub varpi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceScan {
    pub resonances: Vec<Resonance>,
    /// Pairs (degenerate, nondegenerate) of indices into `resonances` whose
    /// drive frequencies coincide to relative 1e-9.
    pub coincidences: Vec<(usize, usize)>,
}

impl ResonanceScan {
    pub fn simultaneous(&self) -> bool {
        !self.coincidences.is_empty()
    }
}

/// All degenerate, nondegenerate and scattering resonances of `modes` with
/// drive frequency in [lo, hi], using the closed-form frequencies at rest.
pub fn resonance_scan(modes: &[ModeIndex], lo: f64, hi: f64, solver: &ModeSolver) -> ResonanceScan {
    let a0 = solver.a0();
    let w: Vec<f64> = modes.iter().map(|k| solver.closed_form_frequency(k, a0)).collect();
    let mut resonances = Vec::new();
    let mut keep = |kind, i: usize, j: usize, varpi: f64| {
        if varpi >= lo && varpi <= hi && varpi > 0.0 {
            resonances.push(Resonance { kind, modes: (modes[i], modes[j]), varpi });
        }
    };
    for i in 0..modes.len() {
        keep(ResonanceKind::Degenerate, i, i, 2.0 * w[i]);
        for j in i + 1..modes.len() {
            if !modes[i].same_sector(&modes[j]) {
                continue;
            }
            keep(ResonanceKind::Nondegenerate, i, j, w[i] + w[j]);
            keep(ResonanceKind::Scattering, i, j, (w[i] - w[j]).abs());
        }
    }
    resonances.sort_by(|a, b| a.varpi.total_cmp(&b.varpi));
    let mut coincidences = Vec::new();
    for (p, a) in resonances.iter().enumerate() {
        if a.kind != ResonanceKind::Degenerate {
            continue;
        }
        for (q, b) in resonances.iter().enumerate() {
            if b.kind == ResonanceKind::Nondegenerate && (a.varpi - b.varpi).abs() <= 1e-9 * a.varpi {
                coincidences.push((p, q));
            }
        }
    }
    ResonanceScan { resonances, coincidences }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bogoliubov::{solve_perturbative, ModeSet, PerturbativeOptions};
    use crate::coupling::CouplingSource;
    use crate::geometry::{from_proper_units, CavityConfig, MirrorMotion};
    use crate::modes::SolverOptions;
    use crate::oracle::{integrate_exact, OracleOptions};
    use proptest::prelude::*;

    fn idx(x: u32, y: u32, z: u32) -> ModeIndex {
        ModeIndex::new(x, y, z).unwrap()
    }

    fn solver(metric: MetricParams, order: MetricOrder, a0: f64) -> ModeSolver {
        ModeSolver::new(CavityConfig::new(a0).unwrap(), metric, order, SolverOptions::default()).unwrap()
    }

    #[test]
    fn f_factor_limits() {
        // resonance: first term is the limit value i
        let f = sinc_term(0.0, 5.0, 3.0);
        assert_eq!(f.norm(), 1.0);
        assert!((f_factor(5.0, 5.0, 0.7) - (Complex64::new(0.0, 1.0) + sinc_term(10.0, 5.0, 0.7))).norm() < 1e-15);
        // ϖ = 0, t → 0
        assert!((f_factor(5.0, 0.0, 1e-12).norm() - 2.0).abs() < 1e-12);
        // a full oscillation of the detuning zeroes the first term
        let w = 7.0;
        let t = 1.3;
        let varpi = w - 2.0 * PI / t;
        assert!(sinc_term(w - varpi, w, t).norm() < 1e-15);
        // series branch continuity
        let x = 0.999e-4;
        let b = Complex64::new(-2.0 * (x / 2.0).sin().powi(2) / x, x.sin() / x);
        assert!((sinc_term(x, 1e-9, 1.0) - b).norm() < 1e-15);
    }

    #[test]
    fn first_order_coupling_constants() {
        let n = ModeIndex::FUNDAMENTAL;
        assert!((coupling_constant_first(&n, &n) - 1.0 / 36.0).abs() < 1e-17);
        let np = idx(1, 1, 2);
        let expect = (4.0 / 9.0) * (9.0 - 6.0 * 2f64.sqrt()) / (3.0 * 2f64.sqrt());
        assert!((coupling_constant_first(&n, &np) - expect).abs() < 1e-15);
        assert_eq!(coupling_constant_first(&n, &idx(2, 1, 1)), 0.0);
    }

    #[test]
    fn constants_match_quadrature_couplings_at_first_order() {
        let s = solver(MetricParams::FLAT, MetricOrder::First, 1.0);
        let n = ModeIndex::FUNDAMENTAL;
        for z in 1..=4 {
            let np = n.with_nz(z).unwrap();
            let q = coupling_constant_quadrature(&n, &np, &s).unwrap();
            let c = coupling_constant_first(&n, &np);
            assert!((q - c).abs() < 1e-9 * c.max(1e-3), "nz'={z}: {q} {c}");
        }
    }

    #[test]
    fn second_order_constant_limits() {
        let n = ModeIndex::FUNDAMENTAL;
        assert!((coupling_constant_second_parametric(&n, 0.0) - coupling_constant_first(&n, &n)).abs() < 1e-17);
        assert_eq!(coupling_constant_second_parametric(&n, 1.0 / 3.0), 0.0);
    }

    #[test]
    fn quadrature_diagonal_matches_parametric_constant() {
        for &ga in &[1e-3, 1e-2] {
            let s = solver(MetricParams::from_gamma_a0(0.0, ga, 1.0).unwrap(), MetricOrder::Second, 1.0);
            let n = ModeIndex::FUNDAMENTAL;
            let q = coupling_constant_quadrature(&n, &n, &s).unwrap();
            let c = coupling_constant_second_parametric(&n, ga);
            // the closed form drops O(γ²a₀²) terms
            assert!((q - c).abs() < 2.0 * ga * ga, "γa₀={ga}: {q} {c}");
        }
    }

    #[test]
    fn final_results() {
        let f = ModeIndex::FUNDAMENTAL;
        assert!((n_fundamental(0.1, 0.0, 0.0) - 0.01).abs() < 1e-16);
        assert!((n_fundamental(0.1, 0.0, 0.1) - 6.4e-3).abs() < 1e-16);
        for z in 1..=4 {
            let k = idx(1, 2, z);
            let flat = (k.nz() as f64 / k.norm()).powi(4) * (k.norm() * 0.1).powi(2);
            assert!((n_final(&k, 0.1, 0.0, 0.0) - flat).abs() < 1e-15 * flat);
        }
        // the general formula at (1,1,1) gives a third of the flat fundamental result
        assert!((n_final(&f, 0.1, 0.0, 0.0) - 0.01 / 3.0).abs() < 1e-17);
    }

    #[test]
    fn resonant_first_order_equals_proper_form() {
        let k = idx(1, 2, 2);
        for &chi in &[0.0, 1e-3, 5e-3] {
            let metric = MetricParams::new(chi, 0.0).unwrap();
            let (a_p, t_p) = (1.3, 20.0);
            let (a0, t) = from_proper_units(a_p, t_p, &metric, MetricOrder::First);
            let n = n_first_order_resonant(&k, &k, 1e-3, t, &metric, a0);
            let p = n_first_order_resonant_proper(&k, &k, 1e-3, t_p, a_p);
            assert!((n - p).abs() < 1e-13 * p, "χ={chi}");
        }
    }

    #[test]
    fn first_order_sum_resonant_growth() {
        let k = ModeIndex::FUNDAMENTAL;
        let metric = MetricParams::FLAT;
        let w = pair_frequency(&k, &k, &metric, 1.0, MetricOrder::First);
        // far from other resonances the diagonal dominates at late times
        let t = 2000.0;
        let n = n_first_order(&k, 1e-4, w, t, &metric, 1.0, 8).unwrap();
        let lim = n_first_order_resonant(&k, &k, 1e-4, t, &metric, 1.0);
        assert!((n - lim).abs() < 1e-2 * lim, "{n} {lim}");
    }

    #[test]
    fn first_order_sum_matches_pipeline() {
        let s = solver(MetricParams::FLAT, MetricOrder::First, 1.0);
        let k = ModeIndex::FUNDAMENTAL;
        let varpi = 1.7 * s.frequency(&k, 1.0).unwrap();
        let m = MirrorMotion::sine(1e-3, varpi).unwrap();
        let set = ModeSet::sector(1, 1, 4).unwrap();
        let opts = PerturbativeOptions { source: CouplingSource::ClosedForm, phases: false, ..Default::default() };
        let st = solve_perturbative(&opts, &set, &[2.5], &m, &s).unwrap();
        let pipe = mean_number_perturbative(&st[0], &k, 1e-3).unwrap();
        let closed = n_first_order(&k, 1e-3, varpi, 2.5, &MetricParams::FLAT, 1.0, 4).unwrap();
        assert!((pipe - closed).abs() < 1e-9 * closed, "{pipe} {closed}");
    }

    #[test]
    fn off_resonance_is_bounded_and_oscillates() {
        let k = ModeIndex::FUNDAMENTAL;
        let metric = MetricParams::FLAT;
        let w = pair_frequency(&k, &k, &metric, 1.0, MetricOrder::First);
        let varpi = 0.6 * w;
        let vals: Vec<f64> = (1..400).map(|i| n_first_order(&k, 1e-3, varpi, i as f64 * 0.1, &metric, 1.0, 4).unwrap()).collect();
        let max = vals.iter().cloned().fold(0.0, f64::max);
        let late = vals[200..].iter().cloned().fold(0.0, f64::max);
        assert!(late <= 1.5 * vals[..200].iter().cloned().fold(0.0, f64::max));
        assert!(vals.windows(2).any(|p| p[1] < p[0]));
        assert!(max < 1e-4);
    }

    #[test]
    fn second_order_sum_tracks_parametric_form() {
        let ga = 1e-2;
        let s = solver(MetricParams::from_gamma_a0(0.0, ga, 1.0).unwrap(), MetricOrder::Second, 1.0);
        let k = ModeIndex::FUNDAMENTAL;
        let w = pair_frequency(&k, &k, s.metric(), 1.0, MetricOrder::Second);
        let t = 500.0;
        let n = n_second_order(&k, 1e-4, w, t, &s, 4).unwrap();
        let p = n_second_order_parametric(&k, 1e-4, w / 2.0, t, ga);
        assert!((n - p).abs() < 0.02 * p, "{n} {p}");
    }

    #[test]
    fn spectrum_rejects_negative() {
        let mut r = SpectrumResult::new(Method::Oracle, ParameterSnapshot::default());
        assert!(r.push(ModeIndex::FUNDAMENTAL, -1e-30).is_err());
        assert!(r.push(ModeIndex::FUNDAMENTAL, f64::NAN).is_err());
        r.push(ModeIndex::FUNDAMENTAL, 0.0).unwrap();
        assert_eq!(r.get(&ModeIndex::FUNDAMENTAL), Some(0.0));
        assert_eq!(r.method().tag(), "oracle");
    }

    #[test]
    fn oracle_mean_number_static_mirror() {
        let s = solver(MetricParams::FLAT, MetricOrder::First, 1.0);
        let m = MirrorMotion::sine(0.0, 3.0).unwrap();
        let run = integrate_exact(&OracleOptions::default(), &ModeSet::sector(1, 1, 2).unwrap(), &[1.0], &m, &s).unwrap();
        assert_eq!(mean_number_oracle(&run.samples[0], 0), 0.0);
    }

    #[test]
    fn resonance_scan_families() {
        let metric = MetricParams::from_gamma_a0(1e-3, 1e-3, 1.0).unwrap();
        let s = solver(metric, MetricOrder::Second, 1.0);
        let modes: Vec<ModeIndex> = (1..=3).map(|z| idx(1, 1, z)).collect();
        let speed = 1.0 - 2e-3 + 1e-3;
        let scan = resonance_scan(&modes, 0.0, 100.0, &s);
        let deg = scan.resonances.iter().find(|r| r.kind == ResonanceKind::Degenerate && r.modes.0 == modes[0]).unwrap();
        assert!((deg.varpi - 2.0 * speed * 3f64.sqrt() * PI).abs() < 1e-12);
        let sc = scan
            .resonances
            .iter()
            .find(|r| r.kind == ResonanceKind::Scattering && r.modes == (modes[0], modes[1]))
            .unwrap();
        assert!((sc.varpi - speed * PI * (6f64.sqrt() - 3f64.sqrt())).abs() < 1e-12);
        assert_eq!(scan.resonances.len(), 3 + 3 + 3);
        assert!(!scan.simultaneous());
        assert!(resonance_scan(&modes, 200.0, 100.0, &s).resonances.is_empty());
    }

    #[test]
    fn coincident_resonances_are_reported() {
        let s = solver(MetricParams::FLAT, MetricOrder::First, 1.0);
        let modes: Vec<ModeIndex> = (1..=6).map(|z| idx(1, 1, z)).collect();
        assert!(!resonance_scan(&modes, 0.0, 1e3, &s).simultaneous());
        // a repeated frequency makes 2ω_k and ω_k + ω_k′ coincide
        let twin = [idx(1, 1, 1), idx(1, 1, 1)];
        assert!(resonance_scan(&twin, 0.0, 1e3, &s).simultaneous());
    }

    proptest! {
        #[test]
        fn fundamental_decreases_with_gradient(g1 in 0.0f64..0.2, g2 in 0.0f64..0.2) {
            prop_assume!(g1 < g2);
            prop_assert!(n_fundamental(0.1, 0.0, g2) < n_fundamental(0.1, 0.0, g1));
        }

        #[test]
        fn f_factor_is_bounded_by_two(w in 0.1f64..50.0, varpi in 0.0f64..100.0, t in 0.0f64..100.0) {
            prop_assert!(f_factor(w, varpi, t).norm() <= 2.0 + 1e-12);
        }
    }
}
