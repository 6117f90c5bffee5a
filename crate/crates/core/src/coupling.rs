//! Intermode couplings G_kk′(t) and their expansion in the mirror amplitude.
//!
//! With the mirror at `a` moving at speed ȧ,
//!
//! ```text
//! G_kk′ = ȧ g_kk′(a)
//! g_kk′ = δ_kk′ ω′_k/(2ω_k) − √(ω_k/ω_k′) ∫ w ζ_k ∂_a ζ_k′ dz
//! ```
//!
//! where w is the inner-product weight and the transverse overlap is a
//! Kronecker delta on (n_x, n_y). For a(t) = a₀(1 + εf(t)) the phased
//! couplings expand as
//!
//! ```text
//! Λ⁽¹⁾ = a₀ f′ g₍₎(a₀) e^{iΩ⁺τ}
//! Λ⁽²⁾ = a₀ f′ e^{iΩ⁺τ} [a₀ f g′₍₎(a₀) + i a₀ (ω′_k + ω′_k′) F g₍₎(a₀)]
//! ```
//!
//! with τ = t − t₀, F = ∫_{t₀}^t f, Ω⁺ = ω_k + ω_k′; Ξ uses the
//! antisymmetric part and Ω⁻ = ω_k − ω_k′.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // std float methods shadow it when std is linked
use num_traits::Float;

use crate::geometry::{mirror_position, MetricOrder, MirrorMotion, ModeIndex, MotionLaw};
use crate::modes::{ModeFunction, ModeSolver};
use crate::numeric::Adaptive;
use crate::{Error, Result};

/// How g_kk′(a) is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingSource {
    /// Closed form, first metric order only.
    ClosedForm,
    /// Quadrature over the instantaneous modes.
    Quadrature,
}

/// (−1)^{n+m} 2nm/(n² − m²), zero on the diagonal: a ∫ φ_n ∂_a φ_m for
/// normalised sines φ.
pub fn sine_overlap(n: u32, m: u32) -> f64 {
    if n == m {
        return 0.0;
    }
    let (nf, mf) = (n as f64, m as f64);
    let sign = if (n + m) % 2 == 0 { 1.0 } else { -1.0 };
    sign * 2.0 * nf * mf / (nf * nf - mf * mf)
}

fn pair_quadrature(solver: &ModeSolver, k: &ModeIndex, kp: &ModeIndex) -> Adaptive {
    solver.options().quadrature(k.nz().max(kp.nz()))
}

/// ∫ w ζ_k ∂_a ζ_k′ dz over [0, a].
fn axial_rate_overlap(solver: &ModeSolver, u: &ModeFunction, v: &ModeFunction) -> Result<f64> {
    let q = pair_quadrature(solver, u.index(), v.index());
    Ok(q.integrate(|z| u.weight(z) * u.axial(z) * v.axial_da(z), 0.0, u.a())?.value)
}

fn coupling_from_modes(solver: &ModeSolver, u: &ModeFunction, v: &ModeFunction) -> Result<f64> {
    if !u.index().same_sector(v.index()) {
        return Ok(0.0);
    }
    let mut g = -(u.omega() / v.omega()).sqrt() * axial_rate_overlap(solver, u, v)?;
    if u.index() == v.index() {
        g += u.domega_da() / (2.0 * u.omega());
    }
    Ok(g)
}

/// g_kk′(a) by quadrature.
pub fn velocity_coupling(k: &ModeIndex, kp: &ModeIndex, a: f64, solver: &ModeSolver) -> Result<f64> {
    if !k.same_sector(kp) {
        return Ok(0.0);
    }
    let u = solver.mode(k, a)?;
    let v = if k == kp { u.clone() } else { solver.mode(kp, a)? };
    coupling_from_modes(solver, &u, &v)
}

/// g_kk′(a) in closed form (first metric order).
pub fn velocity_coupling_closed(k: &ModeIndex, kp: &ModeIndex, a: f64, solver: &ModeSolver) -> Result<f64> {
    if solver.order() != MetricOrder::First {
        return Err(Error::Unsupported("closed-form couplings need the first-order metric"));
    }
    if !k.same_sector(kp) {
        return Ok(0.0);
    }
    let wk = solver.frequency(k, a)?;
    if k == kp {
        return Ok(solver.frequency_derivative(k, a)? / (2.0 * wk));
    }
    let wkp = solver.frequency(kp, a)?;
    Ok(-(wk / wkp).sqrt() * sine_overlap(k.nz(), kp.nz()) / a)
}

/// G_kk′(t) = ȧ(t) g_kk′(a(t)).
pub fn coupling_g(k: &ModeIndex, kp: &ModeIndex, t: f64, motion: &MirrorMotion, solver: &ModeSolver) -> Result<f64> {
    let s = mirror_position(t, motion, solver.cavity())?;
    if s.a_dot == 0.0 {
        return Ok(0.0);
    }
    Ok(s.a_dot * velocity_coupling(k, kp, s.a, solver)?)
}

/// G over a list of modes at one instant, with its symmetric and
/// antisymmetric parts.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    modes: Vec<ModeIndex>,
    full: Vec<f64>,
    sym: Vec<f64>,
    antisym: Vec<f64>,
}

impl CouplingMatrix {
    pub fn from_full(modes: Vec<ModeIndex>, full: Vec<f64>) -> Self {
        let n = modes.len();
        assert_eq!(full.len(), n * n);
        let mut sym = vec![0.0; n * n];
        let mut antisym = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (full[i * n + j], full[j * n + i]);
                sym[i * n + j] = 0.5 * (a + b);
                antisym[i * n + j] = if i == j { 0.0 } else { 0.5 * (a - b) };
            }
        }
        Self { modes, full, sym, antisym }
    }

    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.full[i * self.len() + j]
    }

    pub fn sym(&self, i: usize, j: usize) -> f64 {
        self.sym[i * self.len() + j]
    }

    pub fn antisym(&self, i: usize, j: usize) -> f64 {
        self.antisym[i * self.len() + j]
    }

    /// Largest violation of the split identity and the (anti)symmetries.
    pub fn invariant_violation(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            worst = worst.max(self.antisym(i, i).abs());
            for j in 0..n {
                worst = worst.max((self.sym(i, j) + self.antisym(i, j) - self.get(i, j)).abs());
                worst = worst.max((self.sym(i, j) - self.sym(j, i)).abs());
                worst = worst.max((self.antisym(i, j) + self.antisym(j, i)).abs());
            }
        }
        worst
    }
}

/// Per-velocity couplings g_kk′(a) over a list of modes at mirror position `a`.
pub fn velocity_coupling_matrix(
    modes: &[ModeIndex],
    a: f64,
    solver: &ModeSolver,
    source: CouplingSource,
) -> Result<Vec<f64>> {
    let n = modes.len();
    let mut g = vec![0.0; n * n];
    match source {
        CouplingSource::ClosedForm => {
            for i in 0..n {
                for j in 0..n {
                    g[i * n + j] = velocity_coupling_closed(&modes[i], &modes[j], a, solver)?;
                }
            }
        }
        CouplingSource::Quadrature => {
            let built: Vec<ModeFunction> = modes.iter().map(|k| solver.mode(k, a)).collect::<Result<_>>()?;
            for i in 0..n {
                for j in 0..n {
                    g[i * n + j] = coupling_from_modes(solver, &built[i], &built[j])?;
                }
            }
        }
    }
    Ok(g)
}

/// G(t) over `modes`.
pub fn coupling_matrix(
    modes: &[ModeIndex],
    t: f64,
    motion: &MirrorMotion,
    solver: &ModeSolver,
    source: CouplingSource,
) -> Result<CouplingMatrix> {
    let s = mirror_position(t, motion, solver.cavity())?;
    let n = modes.len();
    let full = if s.a_dot == 0.0 {
        vec![0.0; n * n]
    } else {
        let mut g = velocity_coupling_matrix(modes, s.a, solver, source)?;
        g.iter_mut().for_each(|x| *x *= s.a_dot);
        g
    };
    Ok(CouplingMatrix::from_full(modes.to_vec(), full))
}

/// Θ_k(t) = ∫_{t₀}^{t} ω_k(a(τ)) dτ.
pub fn phase_theta(k: &ModeIndex, t0: f64, t: f64, motion: &MirrorMotion, solver: &ModeSolver) -> Result<f64> {
    if t < t0 {
        return Err(Error::InvalidParameter { name: "t", reason: "must not precede t0" });
    }
    if t == t0 {
        return Ok(0.0);
    }
    let a0 = solver.a0();
    if motion.epsilon() == 0.0 {
        return Ok(solver.frequency(k, a0)? * (t - t0));
    }
    let periods = match motion.law() {
        MotionLaw::Sine { varpi } => (varpi * (t - t0) / core::f64::consts::PI).ceil() as usize,
        MotionLaw::Tabulated(s) => s.knots().len(),
    };
    let q = Adaptive::new(16, 1e-13).with_rel_tol(1e-15).with_panels(periods.clamp(1, 4096));
    let mut failure = None;
    let est = q.integrate(
        |tau| match mirror_position(tau, motion, solver.cavity()).and_then(|s| solver.frequency(k, s.a)) {
            Ok(w) => w,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        t0,
        t,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(est.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaXi {
    pub lambda: Complex64,
    pub xi: Complex64,
}

/// Λ⁽¹⁾ and Ξ⁽¹⁾ in closed form: first metric order, sinusoidal motion.
pub fn lambda_xi_closed_form(
    k: &ModeIndex,
    kp: &ModeIndex,
    t0: f64,
    t: f64,
    motion: &MirrorMotion,
    solver: &ModeSolver,
) -> Result<LambdaXi> {
    let MotionLaw::Sine { varpi } = *motion.law() else {
        return Err(Error::Unsupported("closed-form coefficients need the sine law"));
    };
    if solver.order() != MetricOrder::First {
        return Err(Error::Unsupported("closed-form couplings need the first-order metric"));
    }
    let zero = Complex64::new(0.0, 0.0);
    if !k.same_sector(kp) {
        return Ok(LambdaXi { lambda: zero, xi: zero });
    }
    let a0 = solver.a0();
    let tau = t - t0;
    let drive = varpi * (varpi * t).cos();
    let wk = solver.frequency(k, a0)?;
    let wkp = solver.frequency(kp, a0)?;
    let (sym, anti) = if k == kp {
        // −n_z²/(2|n|²)
        (-0.5 * k.axial_fraction(), 0.0)
    } else {
        let (n, m) = (k.nz() as f64, kp.nz() as f64);
        let sign = if (k.nz() + kp.nz()) % 2 == 0 { 1.0 } else { -1.0 };
        let (nk, nkp) = (k.norm(), kp.norm());
        let base = sign * n * m / (m * m - n * n) / (nk * nkp).sqrt();
        (base * (nk - nkp), base * (nk + nkp))
    };
    Ok(LambdaXi {
        lambda: Complex64::from_polar(drive * sym, (wk + wkp) * tau),
        xi: Complex64::from_polar(drive * anti, (wk - wkp) * tau),
    })
}

/// Finite-difference steps in ε for [`lambda_xi_numeric`].
pub const EPS_STEPS: [f64; 3] = [1.0 / 1024.0, 1.0 / 2048.0, 1.0 / 4096.0];

/// Λ⁽λ⁾ and Ξ⁽λ⁾ (λ ∈ {1, 2}) as ε-derivatives of the phased couplings,
/// by central differences over recomputed modes with Richardson
/// extrapolation. Two extrapolations from different base steps must agree
/// to `rel_tol`.
pub fn lambda_xi_numeric(
    k: &ModeIndex,
    kp: &ModeIndex,
    t0: f64,
    t: f64,
    lambda: u8,
    motion: &MirrorMotion,
    solver: &ModeSolver,
    rel_tol: f64,
) -> Result<LambdaXi> {
    if !(lambda == 1 || lambda == 2) {
        return Err(Error::InvalidParameter { name: "lambda", reason: "must be 1 or 2" });
    }
    let zero = Complex64::new(0.0, 0.0);
    if !k.same_sector(kp) {
        return Ok(LambdaXi { lambda: zero, xi: zero });
    }
    let mut tight = solver.options().clone();
    tight.quad_tol = tight.quad_tol.min(1e-13);
    let solver = ModeSolver::new(*solver.cavity(), *solver.metric(), solver.order(), tight)?;
    let phased = |eps: f64| -> Result<(Complex64, Complex64)> {
        let m = motion.with_epsilon(eps.abs())?;
        // a negative amplitude is the same law with f → −f
        let sign = eps.signum();
        let a0 = solver.a0();
        let f = motion.f(t)?;
        let fd = motion.f_dot(t)?;
        let a = a0 * (1.0 + eps * f);
        let a_dot = a0 * eps * fd;
        let g_kk = velocity_coupling(k, kp, a, &solver)?;
        let g_pk = velocity_coupling(kp, k, a, &solver)?;
        let theta = |q: &ModeIndex| -> Result<f64> {
            if sign >= 0.0 {
                phase_theta(q, t0, t, &m, &solver)
            } else {
                phase_theta_reflected(q, t0, t, &m, &solver)
            }
        };
        let (th_k, th_p) = (theta(k)?, theta(kp)?);
        let sym = 0.5 * (g_kk + g_pk) * a_dot;
        let anti = if k == kp { 0.0 } else { 0.5 * (g_kk - g_pk) * a_dot };
        Ok((Complex64::from_polar(sym, th_k + th_p), Complex64::from_polar(anti, th_k - th_p)))
    };
    let derivative = |h: f64| -> Result<(Complex64, Complex64)> {
        let (lp, xp) = phased(h)?;
        let (lm, xm) = phased(-h)?;
        Ok(if lambda == 1 {
            ((lp - lm) / (2.0 * h), (xp - xm) / (2.0 * h))
        } else {
            // ½ ∂²/∂ε² with the ε = 0 value identically zero
            ((lp + lm) / (2.0 * h * h), (xp + xm) / (2.0 * h * h))
        })
    };
    let d: Vec<(Complex64, Complex64)> = EPS_STEPS.iter().map(|&h| derivative(h)).collect::<Result<_>>()?;
    let rich = |c: (Complex64, Complex64), f: (Complex64, Complex64)| ((f.0 * 4.0 - c.0) / 3.0, (f.1 * 4.0 - c.1) / 3.0);
    let r1 = rich(d[0], d[1]);
    let r2 = rich(d[1], d[2]);
    let scale = r2.0.norm().max(r2.1.norm()).max(1e-300);
    let gap = (r1.0 - r2.0).norm().max((r1.1 - r2.1).norm());
    if gap > rel_tol * scale && gap > 1e-12 {
        return Err(Error::Extrapolation(gap / scale));
    }
    Ok(LambdaXi { lambda: r2.0, xi: r2.1 })
}

/// Θ_k for the mirrored law a = a₀(1 − ε f).
fn phase_theta_reflected(k: &ModeIndex, t0: f64, t: f64, m: &MirrorMotion, solver: &ModeSolver) -> Result<f64> {
    let q = Adaptive::new(16, 1e-13).with_rel_tol(1e-15).with_panels(64);
    let a0 = solver.a0();
    let eps = m.epsilon();
    let mut failure = None;
    let est = q.integrate(
        |tau| match m.f(tau).and_then(|f| solver.frequency(k, a0 * (1.0 - eps * f))) {
            Ok(w) => w,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        t0,
        t,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(est.value),
    }
}

/// Λ⁽λ⁾, Ξ⁽λ⁾ over a mode list at one time, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionCoefficients {
    pub t: f64,
    pub size: usize,
    /// lambda[λ − 1], xi[λ − 1]
    pub lambda: Vec<Vec<Complex64>>,
    pub xi: Vec<Vec<Complex64>>,
}

impl ExpansionCoefficients {
    pub fn order(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda_at(&self, order: usize, i: usize, j: usize) -> Complex64 {
        self.lambda[order - 1][i * self.size + j]
    }

    pub fn xi_at(&self, order: usize, i: usize, j: usize) -> Complex64 {
        self.xi[order - 1][i * self.size + j]
    }
}

/// Rest-length data of one mode list: everything the separable expansion needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorExpansion {
    modes: Vec<ModeIndex>,
    a0: f64,
    omega: Vec<f64>,
    domega: Vec<f64>,
    g: Vec<f64>,
    dg: Vec<f64>,
    // a₀ times the symmetric and antisymmetric parts of g, zero across sectors
    sym: Vec<f64>,
    anti: Vec<f64>,
}

impl SectorExpansion {
    /// `with_slope` also tabulates dg/da, needed only at second order in ε.
    pub fn build(modes: &[ModeIndex], solver: &ModeSolver, source: CouplingSource, with_slope: bool) -> Result<Self> {
        let a0 = solver.a0();
        let n = modes.len();
        let omega = modes.iter().map(|k| solver.frequency(k, a0)).collect::<Result<Vec<_>>>()?;
        let domega = modes.iter().map(|k| solver.frequency_derivative(k, a0)).collect::<Result<Vec<_>>>()?;
        let g = velocity_coupling_matrix(modes, a0, solver, source)?;
        let dg = if with_slope {
            let h = 1e-3 * a0;
            let at = |s: f64| velocity_coupling_matrix(modes, a0 + s, solver, source);
            let (p1, m1, p2, m2) = (at(h)?, at(-h)?, at(0.5 * h)?, at(-0.5 * h)?);
            (0..n * n)
                .map(|i| {
                    let coarse = (p1[i] - m1[i]) / (2.0 * h);
                    let fine = (p2[i] - m2[i]) / h;
                    (4.0 * fine - coarse) / 3.0
                })
                .collect()
        } else {
            vec![0.0; n * n]
        };
        let mut out = Self { modes: modes.to_vec(), a0, omega, domega, g, dg, sym: Vec::new(), anti: Vec::new() };
        let same = |i: usize, j: usize| modes[i].same_sector(&modes[j]);
        out.sym = (0..n * n).map(|e| if same(e / n, e % n) { a0 * out.g_sym(e / n, e % n) } else { 0.0 }).collect();
        out.anti = (0..n * n).map(|e| if same(e / n, e % n) { a0 * out.g_antisym(e / n, e % n) } else { 0.0 }).collect();
        Ok(out)
    }

    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn domega(&self) -> &[f64] {
        &self.domega
    }

    /// Symmetric part of g at the rest length.
    pub fn g_sym(&self, i: usize, j: usize) -> f64 {
        let n = self.len();
        0.5 * (self.g[i * n + j] + self.g[j * n + i])
    }

    pub fn g_antisym(&self, i: usize, j: usize) -> f64 {
        let n = self.len();
        if i == j {
            0.0
        } else {
            0.5 * (self.g[i * n + j] - self.g[j * n + i])
        }
    }

    fn dg_sym(&self, i: usize, j: usize) -> f64 {
        let n = self.len();
        0.5 * (self.dg[i * n + j] + self.dg[j * n + i])
    }

    fn dg_antisym(&self, i: usize, j: usize) -> f64 {
        let n = self.len();
        if i == j {
            0.0
        } else {
            0.5 * (self.dg[i * n + j] - self.dg[j * n + i])
        }
    }

    /// Λ⁽λ⁾, Ξ⁽λ⁾ for λ ≤ `order` at time `t`. With `rwa`, the first-order
    /// terms keep only the more slowly rotating half of the drive.
    pub fn coefficients(
        &self,
        t0: f64,
        t: f64,
        motion: &MirrorMotion,
        order: usize,
        rwa: bool,
    ) -> Result<ExpansionCoefficients> {
        let n = self.len();
        let a0 = self.a0;
        let tau = t - t0;
        let fd = motion.f_dot(t)?;
        let varpi = motion.varpi();
        if rwa && varpi.is_none() {
            return Err(Error::Unsupported("the rotating-wave option needs the sine law"));
        }
        let mut lambda = vec![vec![Complex64::new(0.0, 0.0); n * n]; order];
        let mut xi = lambda.clone();
        let (f, big_f) = if order >= 2 { (motion.f(t)?, motion.f_integral(t0, t)?) } else { (0.0, 0.0) };
        // e^{iω_k τ}; pair phases are products of these
        let phase: Vec<Complex64> = self.omega.iter().map(|w| Complex64::from_polar(1.0, w * tau)).collect();
        let drive = varpi.map(|w| Complex64::from_polar(1.0, w * t));
        for i in 0..n {
            for j in 0..n {
                let idx = i * n + j;
                let (gs, ga) = (self.sym[idx], self.anti[idx]);
                if gs == 0.0 && ga == 0.0 && (order < 2 || (self.dg[idx] == 0.0 && self.dg[j * n + i] == 0.0)) {
                    continue;
                }
                let (pp, pm) = (phase[i] * phase[j], phase[i] * phase[j].conj());
                match (rwa, varpi, drive) {
                    (true, Some(w), Some(d)) => {
                        let wp = self.omega[i] + self.omega[j];
                        let wm = self.omega[i] - self.omega[j];
                        lambda[0][idx] = rotating(0.5 * w * gs, wp, w, pp, d);
                        xi[0][idx] = rotating(0.5 * w * ga, wm, w, pm, d);
                    }
                    _ => {
                        lambda[0][idx] = pp * (fd * gs);
                        xi[0][idx] = pm * (fd * ga);
                    }
                }
                if order >= 2 {
                    let sp = self.domega[i] + self.domega[j];
                    let sm = self.domega[i] - self.domega[j];
                    let bracket = |slope: f64, g: f64, s: f64| Complex64::new(a0 * f * slope, s * big_f * g);
                    lambda[1][idx] = pp * (a0 * fd) * bracket(self.dg_sym(i, j), gs, sp);
                    xi[1][idx] = pm * (a0 * fd) * bracket(self.dg_antisym(i, j), ga, sm);
                }
            }
        }
        Ok(ExpansionCoefficients { t, size: n, lambda, xi })
    }
}

/// `half_c`(e^{i(Ωτ+ϖt)} + e^{i(Ωτ−ϖt)}) with only the slower rotation kept;
/// `pair` = e^{iΩτ}, `drive` = e^{iϖt}.
fn rotating(half_c: f64, big_omega: f64, varpi: f64, pair: Complex64, drive: Complex64) -> Complex64 {
    let up = pair * drive * half_c;
    let down = pair * drive.conj() * half_c;
    let (ru, rd) = ((big_omega + varpi).abs(), (big_omega - varpi).abs());
    if (ru - rd).abs() <= 1e-12 * (ru + rd) {
        up + down
    } else if ru < rd {
        up
    } else {
        down
    }
}
