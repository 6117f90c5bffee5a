//! Cavity geometry, mirror motion, the weak-field metric and proper units.

use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)] // std float methods shadow it when std is linked
use num_traits::Float;

use crate::numeric::CubicSpline;
use crate::{Error, Result};

/// Upper bound on χ = M/R accepted without an override.
pub const WEAK_FIELD_LIMIT: f64 = 0.1;
/// Upper bound on a₀/R accepted without an override.
pub const PLACEMENT_LIMIT: f64 = 1e-3;
/// Mirror excursions above this trigger a warning.
pub const PERTURBATIVE_WARNING: f64 = 0.1;

/// Explicit escapes from the regime guards.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub strong_field: bool,
    pub large_cavity: bool,
}

/// χ = M/R and γ = M/R² of the linearised metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricParams {
    chi: f64,
    gamma: f64,
}

impl MetricParams {
    pub const FLAT: MetricParams = MetricParams { chi: 0.0, gamma: 0.0 };

    pub fn new(chi: f64, gamma: f64) -> Result<Self> {
        Self::with_overrides(chi, gamma, Overrides::default())
    }

    pub fn with_overrides(chi: f64, gamma: f64, ov: Overrides) -> Result<Self> {
        if !(chi.is_finite() && chi >= 0.0) {
            return Err(Error::InvalidParameter { name: "chi", reason: "must be finite and >= 0" });
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidParameter { name: "gamma", reason: "must be finite and >= 0" });
        }
        if chi >= WEAK_FIELD_LIMIT && !ov.strong_field {
            return Err(Error::WeakField(chi));
        }
        if chi >= 0.5 {
            return Err(Error::MetricDegenerate(0.0));
        }
        Ok(Self { chi, gamma })
    }

    /// Builds the parameters from χ and the product γa₀.
    pub fn from_gamma_a0(chi: f64, gamma_a0: f64, a0: f64) -> Result<Self> {
        if !(a0 > 0.0) {
            return Err(Error::InvalidParameter { name: "a0", reason: "must be positive" });
        }
        Self::new(chi, gamma_a0 / a0)
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn gamma_a0(&self, a0: f64) -> f64 {
        self.gamma * a0
    }

    pub fn is_flat(&self) -> bool {
        self.chi == 0.0 && self.gamma == 0.0
    }

    /// Same potential, no gradient.
    pub fn without_gradient(&self) -> Self {
        Self { chi: self.chi, gamma: 0.0 }
    }

    /// −g₀₀ = 1 − 2χ + 2γz.
    #[inline]
    pub fn lapse_sq(&self, z: f64) -> f64 {
        1.0 - 2.0 * self.chi + 2.0 * self.gamma * z
    }

    /// g_ii = 1 + 2χ − 2γz.
    #[inline]
    pub fn spatial(&self, z: f64) -> f64 {
        1.0 + 2.0 * self.chi - 2.0 * self.gamma * z
    }

    /// Weight −√(−g) g⁰⁰ of the field inner product.
    #[inline]
    pub fn norm_measure(&self, z: f64) -> f64 {
        let b = self.spatial(z);
        (b * b * b / self.lapse_sq(z)).sqrt()
    }

    /// √(−g) g^{zz}, the coefficient of the spatial operator.
    #[inline]
    pub fn stiffness(&self, z: f64) -> f64 {
        (self.lapse_sq(z) * self.spatial(z)).sqrt()
    }
}

/// χ = M/R, γ = M/R² for a source of mass `m` at distance `r`.
pub fn weak_field_expand(m: f64, r: f64, ov: Overrides) -> Result<MetricParams> {
    if !(m.is_finite() && m >= 0.0) {
        return Err(Error::InvalidParameter { name: "M", reason: "must be finite and >= 0" });
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParameter { name: "R", reason: "must be finite and positive" });
    }
    MetricParams::with_overrides(m / r, m / (r * r), ov)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricCoefficients {
    pub g00: f64,
    /// g_xx = g_yy = g_zz.
    pub g_spatial: f64,
    pub sqrt_neg_g: f64,
}

pub fn metric_coefficients(z: f64, p: &MetricParams) -> Result<MetricCoefficients> {
    let g00 = -p.lapse_sq(z);
    let gs = p.spatial(z);
    if g00 >= 0.0 || gs <= 0.0 || !g00.is_finite() {
        return Err(Error::MetricDegenerate(z));
    }
    let sqrt_neg_g = (-g00).sqrt() * gs * gs.sqrt();
    Ok(MetricCoefficients { g00, g_spatial: gs, sqrt_neg_g })
}

/// Cube of side a₀ (the z side moves), optionally placed at distance R from the source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityConfig {
    a0: f64,
    placement: Option<f64>,
}

impl CavityConfig {
    pub fn new(a0: f64) -> Result<Self> {
        if !(a0.is_finite() && a0 > 0.0) {
            return Err(Error::InvalidParameter { name: "a0", reason: "must be finite and positive" });
        }
        Ok(Self { a0, placement: None })
    }

    pub fn placed(a0: f64, r: f64, ov: Overrides) -> Result<Self> {
        let mut c = Self::new(a0)?;
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidParameter { name: "R", reason: "must be finite and positive" });
        }
        if a0 / r >= PLACEMENT_LIMIT && !ov.large_cavity {
            return Err(Error::Placement(a0 / r));
        }
        c.placement = Some(r);
        Ok(c)
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn placement(&self) -> Option<f64> {
        self.placement
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MotionLaw {
    /// f(t) = sin(ϖt).
    Sine { varpi: f64 },
    /// Natural cubic spline through samples of f.
    Tabulated(CubicSpline),
}

/// a(t) = a₀(1 + ε f(t)).
#[derive(Debug, Clone, PartialEq)]
pub struct MirrorMotion {
    epsilon: f64,
    law: MotionLaw,
    sup_f: f64,
}

impl MirrorMotion {
    pub fn sine(epsilon: f64, varpi: f64) -> Result<Self> {
        if !(varpi.is_finite() && varpi >= 0.0) {
            return Err(Error::InvalidParameter { name: "varpi", reason: "must be finite and >= 0" });
        }
        Self::build(epsilon, MotionLaw::Sine { varpi }, if varpi > 0.0 { 1.0 } else { 0.0 })
    }

    pub fn tabulated(epsilon: f64, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let spline = CubicSpline::natural(times, values)?;
        // the spline may overshoot the samples slightly between knots
        let (lo, hi) = (spline.start(), spline.end());
        let mut sup_spline = sup;
        let n = 64 * spline.knots().len();
        for i in 0..=n {
            let t = lo + (hi - lo) * i as f64 / n as f64;
            sup_spline = sup_spline.max(spline.eval(t)?.abs());
        }
        Self::build(epsilon, MotionLaw::Tabulated(spline), sup_spline)
    }

    pub fn stationary() -> Self {
        Self { epsilon: 0.0, law: MotionLaw::Sine { varpi: 0.0 }, sup_f: 0.0 }
    }

    fn build(epsilon: f64, law: MotionLaw, sup_f: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::InvalidParameter { name: "epsilon", reason: "must be finite and >= 0" });
        }
        let excursion = epsilon * sup_f;
        if excursion >= 1.0 {
            return Err(Error::Amplitude(excursion));
        }
        if excursion > PERTURBATIVE_WARNING {
            log::warn!("mirror excursion eps*sup|f| = {excursion} is outside the perturbative regime");
        }
        Ok(Self { epsilon, law, sup_f })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn law(&self) -> &MotionLaw {
        &self.law
    }

    pub fn varpi(&self) -> Option<f64> {
        match self.law {
            MotionLaw::Sine { varpi } => Some(varpi),
            MotionLaw::Tabulated(_) => None,
        }
    }

    pub fn sup_abs_f(&self) -> f64 {
        self.sup_f
    }

    /// Same law with a different amplitude.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::build(epsilon, self.law.clone(), self.sup_f)
    }

    pub fn f(&self, t: f64) -> Result<f64> {
        match &self.law {
            MotionLaw::Sine { varpi } => Ok((varpi * t).sin()),
            MotionLaw::Tabulated(s) => s.eval(t),
        }
    }

    pub fn f_dot(&self, t: f64) -> Result<f64> {
        match &self.law {
            MotionLaw::Sine { varpi } => Ok(varpi * (varpi * t).cos()),
            MotionLaw::Tabulated(s) => {
                let (lo, hi) = (s.start(), s.end());
                if !(t >= lo && t <= hi) {
                    return Err(Error::OutOfRange { t, start: lo, end: hi });
                }
                let h = 1e-6 * (hi - lo);
                let a = (t - h).max(lo);
                let b = (t + h).min(hi);
                Ok((s.eval(b)? - s.eval(a)?) / (b - a))
            }
        }
    }

    /// ∫_{t0}^{t} f.
    pub fn f_integral(&self, t0: f64, t: f64) -> Result<f64> {
        match &self.law {
            MotionLaw::Sine { varpi } => {
                if *varpi == 0.0 {
                    return Ok(0.0);
                }
                Ok(((varpi * t0).cos() - (varpi * t).cos()) / varpi)
            }
            MotionLaw::Tabulated(s) => Ok(s.integral(t)? - s.integral(t0)?),
        }
    }

    /// Sample range of a tabulated law.
    pub fn time_range(&self) -> Option<(f64, f64)> {
        match &self.law {
            MotionLaw::Sine { .. } => None,
            MotionLaw::Tabulated(s) => Some((s.start(), s.end())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorState {
    pub a: f64,
    pub a_dot: f64,
}

pub fn mirror_position(t: f64, m: &MirrorMotion, cfg: &CavityConfig) -> Result<MirrorState> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter { name: "t", reason: "must be finite" });
    }
    let a0 = cfg.a0();
    if m.epsilon == 0.0 {
        return Ok(MirrorState { a: a0, a_dot: 0.0 });
    }
    Ok(MirrorState { a: a0 * (1.0 + m.epsilon * m.f(t)?), a_dot: a0 * m.epsilon * m.f_dot(t)? })
}

/// (n_x, n_y, n_z), all ≥ 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    nx: u32,
    ny: u32,
    nz: u32,
}

impl ModeIndex {
    pub fn new(nx: u32, ny: u32, nz: u32) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::InvalidParameter { name: "mode", reason: "indices must be >= 1" });
        }
        Ok(Self { nx, ny, nz })
    }

    pub const FUNDAMENTAL: ModeIndex = ModeIndex { nx: 1, ny: 1, nz: 1 };

    pub fn nx(&self) -> u32 {
        self.nx
    }

    pub fn ny(&self) -> u32 {
        self.ny
    }

    pub fn nz(&self) -> u32 {
        self.nz
    }

    pub fn norm_sq(&self) -> f64 {
        let (x, y, z) = (self.nx as f64, self.ny as f64, self.nz as f64);
        x * x + y * y + z * z
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// n_z²/|n|².
    pub fn axial_fraction(&self) -> f64 {
        let z = self.nz as f64;
        z * z / self.norm_sq()
    }

    pub fn transverse_sq(&self) -> f64 {
        let (x, y) = (self.nx as f64, self.ny as f64);
        x * x + y * y
    }

    pub fn same_sector(&self, other: &ModeIndex) -> bool {
        self.nx == other.nx && self.ny == other.ny
    }

    pub fn with_nz(&self, nz: u32) -> Result<Self> {
        Self::new(self.nx, self.ny, nz)
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.nx, self.ny, self.nz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricOrder {
    /// γ = 0: sine modes.
    First,
    /// Full linear metric: Airy-type modes.
    Second,
}

impl MetricOrder {
    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Self::First),
            2 => Some(Self::Second),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Self::First => 1,
            Self::Second => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProperUnits {
    pub a_p: f64,
    pub t_p: f64,
}

/// Coordinate (a₀, t) to proper (a_p, t_p).
///
/// First order evaluates t_p = ∫√(−g₀₀)dt and a_p = ∫√g_zz dz with γ = 0.
/// Second order inverts a₀ ≃ a_p(1 + χ + γa_p/2), t ≃ (1 + χ − γa_p)t_p
/// to first order in χ and γa.
pub fn to_proper_units(a0: f64, t: f64, p: &MetricParams, order: MetricOrder) -> ProperUnits {
    let chi = p.chi();
    match order {
        MetricOrder::First => ProperUnits {
            a_p: a0 * (1.0 + 2.0 * chi).sqrt(),
            t_p: t * (1.0 - 2.0 * chi).sqrt(),
        },
        MetricOrder::Second => {
            let ga = p.gamma() * a0;
            ProperUnits { a_p: a0 * (1.0 - chi - 0.5 * ga), t_p: t * (1.0 - chi + ga) }
        }
    }
}

/// Proper (a_p, t_p) to coordinate (a₀, t).
pub fn from_proper_units(a_p: f64, t_p: f64, p: &MetricParams, order: MetricOrder) -> (f64, f64) {
    let chi = p.chi();
    match order {
        MetricOrder::First => (a_p / (1.0 + 2.0 * chi).sqrt(), t_p / (1.0 - 2.0 * chi).sqrt()),
        MetricOrder::Second => {
            let ga = p.gamma() * a_p;
            (a_p * (1.0 + chi + 0.5 * ga), t_p * (1.0 + chi - ga))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn weak_field_examples() {
        let p = weak_field_expand(1.0, 1e6, Overrides::default()).unwrap();
        assert_eq!(p.chi(), 1e-6);
        assert_eq!(p.gamma(), 1e-12);
        assert!(weak_field_expand(0.0, 1.0, Overrides::default()).unwrap().is_flat());
        assert_eq!(weak_field_expand(1.0, 5.0, Overrides::default()), Err(Error::WeakField(0.2)));
        let ov = Overrides { strong_field: true, ..Default::default() };
        assert!(weak_field_expand(1.0, 5.0, ov).is_ok());
    }

    #[test]
    fn minkowski_and_potential_only() {
        let c = metric_coefficients(0.37, &MetricParams::FLAT).unwrap();
        assert_eq!((c.g00, c.g_spatial, c.sqrt_neg_g), (-1.0, 1.0, 1.0));
        let c = metric_coefficients(0.0, &MetricParams::new(1e-6, 0.0).unwrap()).unwrap();
        assert_eq!(c.g00, -(1.0 - 2e-6));
    }

    #[test]
    fn degenerate_metric_is_rejected() {
        let p = MetricParams::new(0.0, 1.0).unwrap();
        assert_eq!(metric_coefficients(-0.5, &p), Err(Error::MetricDegenerate(-0.5)));
    }

    #[test]
    fn placement_guard() {
        assert!(CavityConfig::placed(1.0, 100.0, Overrides::default()).is_err());
        assert!(CavityConfig::placed(1.0, 1e4, Overrides::default()).is_ok());
        let ov = Overrides { large_cavity: true, ..Default::default() };
        assert!(CavityConfig::placed(1.0, 100.0, ov).is_ok());
    }

    #[test]
    fn mirror_examples() {
        let cfg = CavityConfig::new(2.0).unwrap();
        let m0 = MirrorMotion::sine(0.0, 3.0).unwrap();
        assert_eq!(mirror_position(1.3, &m0, &cfg).unwrap(), MirrorState { a: 2.0, a_dot: 0.0 });
        let m = MirrorMotion::sine(1e-3, 3.0).unwrap();
        let s = mirror_position(core::f64::consts::PI / 6.0, &m, &cfg).unwrap();
        assert!((s.a - 2.0 * 1.001).abs() < 1e-15 && s.a_dot.abs() < 1e-15);
        let s = mirror_position(0.0, &m, &cfg).unwrap();
        assert_eq!(s.a, 2.0);
        assert!((s.a_dot - 2.0 * 1e-3 * 3.0).abs() < 1e-15);
        assert!(MirrorMotion::sine(1.0, 3.0).is_err());
    }

    #[test]
    fn tabulated_law() {
        let ts: Vec<f64> = (0..=400).map(|i| i as f64 * 0.01).collect();
        let fs: Vec<f64> = ts.iter().map(|t| (2.0 * t).sin()).collect();
        let m = MirrorMotion::tabulated(1e-2, ts, fs).unwrap();
        assert!((m.f_dot(1.0).unwrap() - 2.0 * 2.0f64.cos()).abs() < 1e-6);
        assert!((m.f_integral(0.0, 1.5).unwrap() - (1.0 - 3.0f64.cos()) / 2.0).abs() < 1e-8);
        let cfg = CavityConfig::new(1.0).unwrap();
        assert!(matches!(mirror_position(5.0, &m, &cfg), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn proper_units_flat_identity() {
        for order in [MetricOrder::First, MetricOrder::Second] {
            let u = to_proper_units(1.7, 3.2, &MetricParams::FLAT, order);
            assert_eq!(u, ProperUnits { a_p: 1.7, t_p: 3.2 });
        }
    }

    #[test]
    fn proper_time_series_inversion() {
        // t = t_p (1 + χ) + O(χ²), i.e. t_p = t (1 − χ) + O(χ²)
        let chi = 1e-3;
        let p = MetricParams::new(chi, 0.0).unwrap();
        let u = to_proper_units(1.0, 1.0, &p, MetricOrder::First);
        let series = 1.0 - chi - 0.5 * chi * chi - 0.5 * chi * chi * chi;
        assert!((u.t_p - series).abs() < 3.0 * chi.powi(4));
        assert!((u.t_p - (1.0 - chi)).abs() <= chi * chi);
    }

    #[test]
    fn mode_index_guards() {
        assert!(ModeIndex::new(0, 1, 1).is_err());
        let k = ModeIndex::new(1, 2, 2).unwrap();
        assert_eq!(k.norm(), 3.0);
        assert_eq!(alloc::format!("{k}"), "(1,2,2)");
    }

    proptest! {
        #[test]
        fn determinant_identity(z in 0.0f64..1.0, chi in 0.0f64..0.09, ga in 0.0f64..0.05) {
            let p = MetricParams::new(chi, ga).unwrap();
            let c = metric_coefficients(z, &p).unwrap();
            let det = -c.g00 * c.g_spatial.powi(3);
            prop_assert!((c.sqrt_neg_g * c.sqrt_neg_g - det).abs() <= 1e-14 * det);
            prop_assert!((p.norm_measure(z) - c.sqrt_neg_g / -c.g00).abs() <= 1e-14 * p.norm_measure(z));
        }

        #[test]
        fn sine_derivative_matches_difference(t in -10.0f64..10.0, varpi in 0.5f64..20.0, eps in 1e-4f64..0.05) {
            let cfg = CavityConfig::new(1.0).unwrap();
            let m = MirrorMotion::sine(eps, varpi).unwrap();
            let h = 1e-6 / varpi;
            let fd = (mirror_position(t + h, &m, &cfg).unwrap().a - mirror_position(t - h, &m, &cfg).unwrap().a) / (2.0 * h);
            let exact = mirror_position(t, &m, &cfg).unwrap().a_dot;
            prop_assert!((fd - exact).abs() <= 1e-6 * eps * varpi + 1e-6 * exact.abs());
        }

        #[test]
        fn proper_round_trip(a0 in 0.1f64..10.0, t in 0.0f64..100.0, chi in 0.0f64..0.01, ga in 0.0f64..0.1) {
            for order in [MetricOrder::First, MetricOrder::Second] {
                let p = MetricParams::new(chi, ga / a0).unwrap();
                let u = to_proper_units(a0, t, &p, order);
                let (a1, t1) = from_proper_units(u.a_p, u.t_p, &p, order);
                let bound = 10.0 * (chi * chi).max(ga * ga);
                prop_assert!((a1 / a0 - 1.0).abs() <= bound + 1e-15);
                if t > 0.0 {
                    prop_assert!((t1 / t - 1.0).abs() <= bound + 1e-15);
                }
            }
        }
    }
}
