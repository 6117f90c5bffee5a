//! Modulus–phase asymptotics of the Airy functions at large negative argument.
//!
//! For x ≫ 1, Ai(−x) = M(x) cos θ(x) and Bi(−x) = M(x) sin θ(x) with
//!
//! ```text
//! π √x M²(x) = S(x) = Σ c_k x^{−3k}
//! θ'(x)      = −√x / S(x) = −Σ d_k x^{1/2−3k}
//! ```
//!
//! Both series are asymptotic; they are truncated at their smallest term.

#[allow(unused_imports)] // std float methods shadow it when std is linked
use num_traits::Float;

/// Hard cap on the number of retained terms.
pub const MAX_TERMS: usize = 16;

const MODULUS: [f64; MAX_TERMS] = [
    1.0,
    -0.15625,
    0.56396484375,
    -6.4914703369140625,
    155.13599812984467,
    -6326.639923732728,
    393273.16400911513,
    -34623839.58671321,
    4100084754.184418,
    -628523061848.9163,
    121098716807171.66,
    -2.8645695042469172e16,
    8.161859740342694e18,
    -2.757080144258791e21,
    1.089532838525518e24,
    -4.979732537081683e26,
];

const PHASE_RATE: [f64; MAX_TERMS] = [
    1.0,
    0.15625,
    -0.53955078125,
    6.3190460205078125,
    -152.83006727695465,
    6271.454028319567,
    -391093.79739530414,
    34492359.42252913,
    -4088748195.36234,
    627198459188.666,
    -120897389055654.12,
    2.8607122279051596e16,
    -8.152770573647957e18,
    2.754497571977765e21,
    -1.0886622365991781e24,
    4.97629754088787e26,
];

// PHASE[k] = PHASE_RATE[k] / (3/2 − 3k)
const PHASE: [f64; MAX_TERMS] = [
    0.6666666666666666,
    -0.10416666666666667,
    0.1199001736111111,
    -0.8425394694010416,
    14.55524450256711,
    -464.55215024589387,
    23702.65438759419,
    -1768838.9447450836,
    181722142.01610398,
    -24596018007.398666,
    4242013651075.5835,
    -908162612033384.0,
    2.363121905405205e17,
    -7.3453268586073735e19,
    2.6880549051831557e22,
    -1.1439764461811195e25,
];

/// Number of terms to keep for arguments x ≥ `x_min`: stops before the
/// phase-series terms start growing.
pub fn optimal_terms(x_min: f64) -> usize {
    let mut best = 1;
    let mut last = f64::INFINITY;
    for k in 1..MAX_TERMS {
        let term = (PHASE[k] * x_min.powf(1.5 - 3.0 * k as f64)).abs();
        if term >= last {
            break;
        }
        last = term;
        best = k + 1;
    }
    best
}

/// Truncated series for one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Asymptotic {
    terms: usize,
}

impl Asymptotic {
    pub fn new(terms: usize) -> Self {
        Self { terms: terms.clamp(1, MAX_TERMS) }
    }

    pub fn leading() -> Self {
        Self { terms: 1 }
    }

    pub fn terms(&self) -> usize {
        self.terms
    }

    /// S(x) = π√x M²(x).
    pub fn modulus_factor(&self, x: f64) -> f64 {
        let r = x.powi(-3);
        let mut acc = 0.0;
        let mut p = 1.0;
        for c in &MODULUS[..self.terms] {
            acc += c * p;
            p *= r;
        }
        acc
    }

    /// dS/dx.
    pub fn modulus_factor_deriv(&self, x: f64) -> f64 {
        let r = x.powi(-3);
        let mut acc = 0.0;
        let mut p = r / x;
        for (k, c) in MODULUS[..self.terms].iter().enumerate().skip(1) {
            acc += -3.0 * k as f64 * c * p;
            p *= r;
        }
        acc
    }

    /// Φ(x) = Σ PHASE_k x^{3/2−3k}, so that θ(x) = π/4 − Φ(x).
    pub fn phase(&self, x: f64) -> f64 {
        let r = x.powi(-3);
        let mut acc = 0.0;
        let mut p = x * x.sqrt();
        for c in &PHASE[..self.terms] {
            acc += c * p;
            p *= r;
        }
        acc
    }

    /// Φ(x1) − Φ(x0), with the leading term arranged to avoid cancellation
    /// when x1 and x0 are close.
    pub fn phase_difference(&self, x1: f64, x0: f64) -> f64 {
        let (s1, s0) = (x1.sqrt(), x0.sqrt());
        // x1^{3/2} − x0^{3/2} = (x1 − x0)(x1 + √(x1 x0) + x0)/(√x1 + √x0)
        let mut acc = PHASE[0] * (x1 - x0) * (x1 + s1 * s0 + x0) / (s1 + s0);
        let (r1, r0) = (x1.powi(-3), x0.powi(-3));
        let (mut p1, mut p0) = (x1 * s1 * r1, x0 * s0 * r0);
        for c in &PHASE[1..self.terms] {
            acc += c * (p1 - p0);
            p1 *= r1;
            p0 *= r0;
        }
        acc
    }

    /// dΦ/dx = Σ PHASE_RATE_k x^{1/2−3k} = √x / S(x) in the untruncated limit.
    pub fn phase_rate(&self, x: f64) -> f64 {
        let r = x.powi(-3);
        let mut acc = 0.0;
        let mut p = x.sqrt();
        for c in &PHASE_RATE[..self.terms] {
            acc += c * p;
            p *= r;
        }
        acc
    }

    /// d²Φ/dx².
    pub fn phase_rate_deriv(&self, x: f64) -> f64 {
        let r = x.powi(-3);
        let mut acc = 0.0;
        let mut p = x.sqrt() / x;
        for (k, c) in PHASE_RATE[..self.terms].iter().enumerate() {
            acc += (0.5 - 3.0 * k as f64) * c * p;
            p *= r;
        }
        acc
    }
}
