//! Instantaneous cavity modes and eigenfrequencies.
//!
//! A mode is `(2/a₀) sin(k_x x) sin(k_y y) ζ(z)` with the transverse
//! wavenumbers fixed by the static walls and ζ depending on the mirror
//! position `a`.
//!
//! * First order (γ = 0): ζ is a sine; the constant metric coefficients only
//!   rescale the frequency, ω = √((1−2χ)/(1+2χ))·|k|, and the amplitude.
//! * Second order: ζ solves ζ'' + [ω²(1+4χ−4γz) − k⊥²]ζ = 0, an Airy
//!   equation in v = (Ω²/s − z)s^{1/3}, s = 4γω². ζ is written in
//!   modulus–phase form and ω is fixed by requiring ζ(a) = 0. The weight
//!   1 + 4χ − 4γz of the inner product is the first-order expansion of
//!   −√(−g)g⁰⁰, which makes the modes exactly orthogonal.

use core::f64::consts::PI;

#[allow(unused_imports)] // std float methods shadow it when std is linked
use num_traits::Float;

use crate::airy::{optimal_terms, Asymptotic};
use crate::geometry::{mirror_position, CavityConfig, MetricOrder, MetricParams, MirrorMotion, ModeIndex};
use crate::numeric::roots::{brent, expand_bracket};
use crate::numeric::Adaptive;
use crate::{Error, Result};

/// How much of the asymptotic Airy expansion the order-2 modes keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseTerms {
    /// ζ = N v^{-1/4} sin(⅔v^{3/2}(0) − ⅔v^{3/2}(z)): leading term only.
    Leading,
    /// Modulus and phase series truncated at their smallest term.
    Optimal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Absolute tolerance of the normalisation and overlap quadratures.
    pub quad_tol: f64,
    /// Smallest Airy coordinate accepted inside the cavity.
    pub v_min: f64,
    pub phase_terms: PhaseTerms,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { quad_tol: 1e-10, v_min: 5.0, phase_terms: PhaseTerms::Optimal }
    }
}

impl SolverOptions {
    pub(crate) fn quadrature(&self, nz: u32) -> Adaptive {
        Adaptive::new(16, self.quad_tol).with_panels(2 * nz as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenfrequency {
    /// Closed form: (1 − 2χ + γa)·|k(t)|.
    pub value: f64,
    /// Frequency the modes are built with: the exact constant-coefficient
    /// value at first order, the quantisation root at second order.
    pub refined: f64,
    pub index: ModeIndex,
    pub order: MetricOrder,
    pub time: f64,
}

/// |k| = π√(n_x² + n_y² + (n_z a₀/a)²)/a₀.
pub fn wavenumber(k: &ModeIndex, a0: f64, a: f64) -> f64 {
    let kz = k.nz() as f64 * PI / a;
    let kp2 = k.transverse_sq() * (PI / a0) * (PI / a0);
    (kp2 + kz * kz).sqrt()
}

/// Eigenfrequency of `k` at time `t` for either metric order. Order 2 with
/// γ = 0 coincides with order 1.
pub fn eigenfrequency(
    k: &ModeIndex,
    t: f64,
    order: MetricOrder,
    cavity: &CavityConfig,
    metric: &MetricParams,
    motion: &MirrorMotion,
) -> Result<Eigenfrequency> {
    let order_eff = if metric.gamma() == 0.0 { MetricOrder::First } else { order };
    let solver = ModeSolver::new(*cavity, *metric, order_eff, SolverOptions::default())?;
    let mut e = solver.eigenfrequency(k, t, motion)?;
    e.order = order;
    Ok(e)
}

/// Builds modes at a fixed metric order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSolver {
    cavity: CavityConfig,
    metric: MetricParams,
    order: MetricOrder,
    opts: SolverOptions,
}

impl ModeSolver {
    /// At first order the gradient γ is ignored. Second order needs γ > 0.
    pub fn new(cavity: CavityConfig, metric: MetricParams, order: MetricOrder, opts: SolverOptions) -> Result<Self> {
        let metric = match order {
            MetricOrder::First => metric.without_gradient(),
            MetricOrder::Second => {
                if metric.gamma() == 0.0 {
                    return Err(Error::FlatAiry);
                }
                metric
            }
        };
        if !(opts.quad_tol > 0.0) {
            return Err(Error::InvalidParameter { name: "quad_tol", reason: "must be positive" });
        }
        Ok(Self { cavity, metric, order, opts })
    }

    /// Second order when γ > 0, first order otherwise.
    pub fn auto(cavity: CavityConfig, metric: MetricParams, order: MetricOrder, opts: SolverOptions) -> Result<Self> {
        let order = if metric.gamma() == 0.0 { MetricOrder::First } else { order };
        Self::new(cavity, metric, order, opts)
    }

    pub fn cavity(&self) -> &CavityConfig {
        &self.cavity
    }

    pub fn metric(&self) -> &MetricParams {
        &self.metric
    }

    pub fn order(&self) -> MetricOrder {
        self.order
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    pub fn a0(&self) -> f64 {
        self.cavity.a0()
    }

    /// Weight of the inner product at height z.
    pub fn weight(&self, z: f64) -> f64 {
        weight(self.order, &self.metric, z)
    }

    /// √((1−2χ)/(1+2χ)).
    pub fn flat_speed(&self) -> f64 {
        let chi = self.metric.chi();
        ((1.0 - 2.0 * chi) / (1.0 + 2.0 * chi)).sqrt()
    }

    /// Closed-form frequency (1 − 2χ + γa)|k|.
    pub fn closed_form_frequency(&self, k: &ModeIndex, a: f64) -> f64 {
        (1.0 - 2.0 * self.metric.chi() + self.metric.gamma() * a) * wavenumber(k, self.a0(), a)
    }

    pub fn eigenfrequency(&self, k: &ModeIndex, t: f64, motion: &MirrorMotion) -> Result<Eigenfrequency> {
        let a = mirror_position(t, motion, &self.cavity)?.a;
        Ok(Eigenfrequency {
            value: self.closed_form_frequency(k, a),
            refined: self.frequency(k, a)?,
            index: *k,
            order: self.order,
            time: t,
        })
    }

    /// Frequency used by the modes at mirror position `a`.
    pub fn frequency(&self, k: &ModeIndex, a: f64) -> Result<f64> {
        match self.order {
            MetricOrder::First => Ok(self.flat_speed() * wavenumber(k, self.a0(), a)),
            MetricOrder::Second => Ok(self.airy_setup(k, a)?.omega),
        }
    }

    /// dω/da at mirror position `a`.
    pub fn frequency_derivative(&self, k: &ModeIndex, a: f64) -> Result<f64> {
        match self.order {
            MetricOrder::First => {
                let c = self.flat_speed();
                let w = c * wavenumber(k, self.a0(), a);
                let kz = k.nz() as f64 * PI;
                Ok(-c * c * kz * kz / (a * a * a * w))
            }
            MetricOrder::Second => Ok(self.mode(k, a)?.domega_da),
        }
    }

    /// Ω² = ω²(1 + 4χ) − k⊥² for a given ω.
    pub fn omega_sq_axial(&self, k: &ModeIndex, omega: f64) -> f64 {
        let kp2 = k.transverse_sq() * (PI / self.a0()).powi(2);
        omega * omega * (1.0 + 4.0 * self.metric.chi()) - kp2
    }

    /// Airy coordinate v(z) of mode `k` at mirror position `a`.
    pub fn airy_coordinate(&self, z: f64, k: &ModeIndex, a: f64) -> Result<f64> {
        if self.order == MetricOrder::First {
            return Err(Error::FlatAiry);
        }
        let setup = self.airy_setup(k, a)?;
        Ok(setup.v(z))
    }

    pub fn airy_coordinate_at(&self, z: f64, k: &ModeIndex, t: f64, motion: &MirrorMotion) -> Result<f64> {
        let a = mirror_position(t, motion, &self.cavity)?.a;
        self.airy_coordinate(z, k, a)
    }

    fn series_for(&self, k: &ModeIndex) -> Asymptotic {
        match self.opts.phase_terms {
            PhaseTerms::Leading => Asymptotic::leading(),
            PhaseTerms::Optimal => {
                // fixed per mode from the rest configuration so that the
                // truncation never switches while the mirror moves
                let a0 = self.a0();
                let w = self.closed_form_frequency(k, a0);
                let s = 4.0 * self.metric.gamma() * w * w;
                let va = (self.omega_sq_axial(k, w) - s * a0) / s.powf(2.0 / 3.0);
                Asymptotic::new(optimal_terms(0.9 * va.max(1.0)))
            }
        }
    }

    /// Quantisation root and the quantities that depend only on ω.
    fn airy_setup(&self, k: &ModeIndex, a: f64) -> Result<AirySetup> {
        let series = self.series_for(k);
        let chi = self.metric.chi();
        let gamma = self.metric.gamma();
        let kp2 = k.transverse_sq() * (PI / self.a0()).powi(2);
        let target = k.nz() as f64 * PI;
        let make = |omega: f64| AirySetup::new(omega, chi, gamma, kp2, series);
        let phase_gap = |omega: f64| -> f64 {
            let s = make(omega);
            if s.q(a) <= 0.0 {
                return f64::NAN;
            }
            s.phase(a) - target
        };
        // Q(a) > 0 needs ω² > k⊥²/(1 + 4χ − 4γa)
        let floor = (kp2 / (1.0 + 4.0 * chi - 4.0 * gamma * a)).sqrt() * (1.0 + 1e-9);
        let seed = self.closed_form_frequency(k, a).max(floor * 1.001);
        let (lo, hi) = expand_bracket(
            |w| {
                let g = phase_gap(w);
                if g.is_nan() {
                    -1.0
                } else {
                    g
                }
            },
            seed,
            1e-3 * seed,
            floor,
            10.0 * seed,
        )?;
        let omega = brent(phase_gap, lo, hi, 1e-15 * seed)?;
        let setup = make(omega);
        let va = setup.v(a);
        if !(va > 0.0) {
            return Err(Error::Evanescent(*k));
        }
        Ok(setup)
    }

    /// Mode `k` with the mirror at `a`.
    pub fn mode(&self, k: &ModeIndex, a: f64) -> Result<ModeFunction> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter { name: "a", reason: "mirror position must be positive" });
        }
        let a0 = self.a0();
        let (axial, omega, domega_da) = match self.order {
            MetricOrder::First => {
                let c = 1.0 / self.metric.norm_measure(0.0).sqrt();
                let omega = self.frequency(k, a)?;
                let dw = self.frequency_derivative(k, a)?;
                (Axial::Sine { amp: c }, omega, dw)
            }
            MetricOrder::Second => {
                let setup = self.airy_setup(k, a)?;
                let va = setup.v(a);
                if va < self.opts.v_min {
                    return Err(Error::AsymptoticBranch { mode: *k, v: va, min: self.opts.v_min });
                }
                let quad = self.opts.quadrature(k.nz());
                let w = |z: f64| 1.0 + 4.0 * setup.chi - 4.0 * setup.gamma * z;
                let norm_sq = quad.integrate(|z| w(z) * setup.shape(z).0.powi(2), 0.0, a)?.value;
                let norm = 1.0 / norm_sq.sqrt();
                // dω/da from the quantisation condition at fixed n_z
                let rate_a = setup.series.phase_rate(va) * setup.s.powf(1.0 / 3.0);
                let rate_w = setup.phase_omega(a);
                let domega = -rate_a / rate_w;
                let cross = quad
                    .integrate(
                        |z| {
                            let (f, df) = setup.shape(z);
                            w(z) * f * df
                        },
                        0.0,
                        a,
                    )?
                    .value;
                let dnorm = -norm * norm * norm * domega * cross;
                (Axial::Airy(AiryMode { setup, norm, dnorm }), setup.omega, domega)
            }
        };
        Ok(ModeFunction {
            index: *k,
            order: self.order,
            a0,
            a,
            metric: self.metric,
            axial,
            omega,
            domega_da,
        })
    }

    /// Mode `k` at time `t`.
    pub fn mode_at_time(&self, k: &ModeIndex, t: f64, motion: &MirrorMotion) -> Result<ModeFunction> {
        let a = mirror_position(t, motion, &self.cavity)?.a;
        self.mode(k, a)
    }

    /// Largest relative residual of the mode equation with the untruncated
    /// metric, sampled on an interior grid with 5-point differences.
    pub fn mode_ode_residual(&self, k: &ModeIndex, a: f64) -> Result<f64> {
        let m = self.mode(k, a)?;
        let h = self.a0() / 2048.0;
        let p = &self.metric;
        let kp2 = k.transverse_sq() * (PI / self.a0()).powi(2);
        let w2 = m.omega * m.omega;
        let n = 200;
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..=n {
            let z = 2.0 * h + (a - 4.0 * h) * i as f64 / n as f64;
            let f = |dz: f64| m.axial(z + dz);
            let stiff = |dz: f64| p.stiffness(z + dz);
            let (fm2, fm1, f0, fp1, fp2) = (f(-2.0 * h), f(-h), f(0.0), f(h), f(2.0 * h));
            let d1 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
            let d2 = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h);
            let dstiff = (stiff(-2.0 * h) - 8.0 * stiff(-h) + 8.0 * stiff(h) - stiff(2.0 * h)) / (12.0 * h);
            let mass = p.norm_measure(z) * w2 * f0;
            let r = stiff(0.0) * d2 + dstiff * d1 - stiff(0.0) * kp2 * f0 + mass;
            worst = worst.max(r.abs());
            scale = scale.max(mass.abs());
        }
        Ok(worst / scale)
    }
}

pub(crate) fn weight(order: MetricOrder, metric: &MetricParams, z: f64) -> f64 {
    match order {
        MetricOrder::First => metric.norm_measure(0.0),
        MetricOrder::Second => 1.0 + 4.0 * metric.chi() - 4.0 * metric.gamma() * z,
    }
}

/// ω-dependent pieces of the Airy construction.
#[derive(Debug, Clone, Copy, PartialEq)]
struct AirySetup {
    omega: f64,
    chi: f64,
    gamma: f64,
    // Ω² = E, s = 4γω²
    e: f64,
    s: f64,
    s_m23: f64,
    v0: f64,
    series: Asymptotic,
}

impl AirySetup {
    fn new(omega: f64, chi: f64, gamma: f64, kp2: f64, series: Asymptotic) -> Self {
        let e = omega * omega * (1.0 + 4.0 * chi) - kp2;
        let s = 4.0 * gamma * omega * omega;
        let s_m23 = s.powf(-2.0 / 3.0);
        Self { omega, chi, gamma, e, s, s_m23, v0: e * s_m23, series }
    }

    fn q(&self, z: f64) -> f64 {
        self.e - self.s * z
    }

    fn v(&self, z: f64) -> f64 {
        self.q(z) * self.s_m23
    }

    /// P(z) = Φ(v(0)) − Φ(v(z)), increasing from 0.
    fn phase(&self, z: f64) -> f64 {
        self.series.phase_difference(self.v0, self.v(z))
    }

    /// ∂v/∂ω at fixed z.
    fn v_omega(&self, z: f64) -> f64 {
        let w = self.omega;
        self.s_m23 * (2.0 * w * (1.0 + 4.0 * self.chi - 4.0 * self.gamma * z) - 4.0 / 3.0 * self.q(z) / w)
    }

    /// ∂P/∂ω at fixed z.
    fn phase_omega(&self, z: f64) -> f64 {
        let v = self.v(z);
        self.series.phase_rate(self.v0) * self.v_omega(0.0) - self.series.phase_rate(v) * self.v_omega(z)
    }

    /// Unnormalised profile F(z) = v^{-1/4}√S(v) sin P and ∂F/∂ω.
    fn shape(&self, z: f64) -> (f64, f64) {
        let v = self.v(z);
        let sv = self.series.modulus_factor(v);
        let amp = v.powf(-0.25) * sv.sqrt();
        let p = self.phase(z);
        let (sp, cp) = p.sin_cos();
        let damp_dv = amp * (-0.25 / v + 0.5 * self.series.modulus_factor_deriv(v) / sv);
        let df = damp_dv * self.v_omega(z) * sp + amp * cp * self.phase_omega(z);
        (amp * sp, df)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct AiryMode {
    setup: AirySetup,
    norm: f64,
    dnorm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Axial {
    /// amp·√(2/a)·sin(n_z π z/a)
    Sine { amp: f64 },
    Airy(AiryMode),
}

/// One instantaneous mode, frozen at mirror position `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeFunction {
    index: ModeIndex,
    order: MetricOrder,
    a0: f64,
    a: f64,
    metric: MetricParams,
    axial: Axial,
    omega: f64,
    domega_da: f64,
}

impl ModeFunction {
    pub fn index(&self) -> &ModeIndex {
        &self.index
    }

    pub fn order(&self) -> MetricOrder {
        self.order
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    /// Mirror position the mode was built for.
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn metric(&self) -> &MetricParams {
        &self.metric
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn domega_da(&self) -> f64 {
        self.domega_da
    }

    /// Overall amplitude of the z profile: amp·√(2/a) at first order, N at second.
    pub fn normalization(&self) -> f64 {
        match self.axial {
            Axial::Sine { amp } => amp * (2.0 / self.a).sqrt(),
            Axial::Airy(m) => m.norm,
        }
    }

    pub fn weight(&self, z: f64) -> f64 {
        weight(self.order, &self.metric, z)
    }

    /// (2/a₀) sin(n_x π x/a₀) sin(n_y π y/a₀).
    pub fn transverse(&self, x: f64, y: f64) -> f64 {
        let q = PI / self.a0;
        2.0 / self.a0 * (self.index.nx() as f64 * q * x).sin() * (self.index.ny() as f64 * q * y).sin()
    }

    /// z profile ζ(z).
    pub fn axial(&self, z: f64) -> f64 {
        match self.axial {
            Axial::Sine { amp } => {
                let kz = self.index.nz() as f64 * PI / self.a;
                amp * (2.0 / self.a).sqrt() * (kz * z).sin()
            }
            Axial::Airy(m) => m.norm * m.setup.shape(z).0,
        }
    }

    /// ∂ζ/∂a at fixed z.
    pub fn axial_da(&self, z: f64) -> f64 {
        match self.axial {
            Axial::Sine { amp } => {
                let a = self.a;
                let kz = self.index.nz() as f64 * PI / a;
                let c = amp * (2.0 / a).sqrt();
                c * (-0.5 / a * (kz * z).sin() - (kz * z).cos() * kz * z / a)
            }
            Axial::Airy(m) => {
                let (f, df) = m.setup.shape(z);
                m.dnorm * f + m.norm * df * self.domega_da
            }
        }
    }

    fn check_point(&self, x: f64, y: f64, z: f64) -> Result<()> {
        let slack = 1e-12;
        let inside = |c: f64, l: f64| c >= -slack * l && c <= l * (1.0 + slack);
        if inside(x, self.a0) && inside(y, self.a0) && inside(z, self.a) {
            Ok(())
        } else {
            Err(Error::OutsideCavity)
        }
    }

    /// u_k(x, y, z).
    pub fn value(&self, x: f64, y: f64, z: f64) -> Result<f64> {
        self.check_point(x, y, z)?;
        Ok(self.transverse(x, y) * self.axial(z))
    }

    /// ∂u_k/∂t = ȧ ∂u_k/∂a.
    pub fn time_derivative(&self, x: f64, y: f64, z: f64, a_dot: f64) -> Result<f64> {
        self.check_point(x, y, z)?;
        Ok(a_dot * self.transverse(x, y) * self.axial_da(z))
    }
}

/// −∫ d³x √(−g) g⁰⁰ u w over the instantaneous cavity.
pub fn inner_product(u: &ModeFunction, w: &ModeFunction, opts: &SolverOptions) -> Result<f64> {
    if u.a != w.a || u.a0 != w.a0 || u.metric != w.metric || u.order != w.order {
        return Err(Error::Mismatch);
    }
    let q = PI / u.a0;
    let nmax = u.index.nz().max(w.index.nz()).max(u.index.nx()).max(u.index.ny());
    let quad = opts.quadrature(nmax.max(w.index.nx()).max(w.index.ny()));
    let side = |n1: u32, n2: u32| -> Result<f64> {
        let e = quad.integrate(
            |x| (2.0 / u.a0) * (n1 as f64 * q * x).sin() * (n2 as f64 * q * x).sin(),
            0.0,
            u.a0,
        )?;
        Ok(e.value)
    };
    let sx = side(u.index.nx(), w.index.nx())?;
    let sy = side(u.index.ny(), w.index.ny())?;
    let sz = quad.integrate(|z| u.weight(z) * u.axial(z) * w.axial(z), 0.0, u.a)?.value;
    Ok(sx * sy * sz)
}
