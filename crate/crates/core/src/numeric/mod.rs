//! Numerical building blocks: quadrature, root finding, embedded Runge–Kutta,
//! splines and Chebyshev tables.

pub mod chebyshev;
pub mod ode;
pub mod quadrature;
pub mod roots;
pub mod spline;

pub use chebyshev::ChebyshevTable;
pub use ode::{DormandPrince, IntegrationStats, OdeSystem};
pub use quadrature::{Adaptive, Estimate, GaussLegendre};
pub use roots::brent;
pub use spline::CubicSpline;

/// Cubic Hermite interpolation on `[0, h]` from end values and end derivatives.
#[inline]
pub fn hermite(s: f64, h: f64, y0: f64, d0: f64, y1: f64, d1: f64) -> f64 {
    let u = s / h;
    let u2 = u * u;
    let u3 = u2 * u;
    let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    let h10 = u3 - 2.0 * u2 + u;
    let h01 = -2.0 * u3 + 3.0 * u2;
    let h11 = u3 - u2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}
