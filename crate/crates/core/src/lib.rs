//! Particle creation by an oscillating mirror in a rectangular cavity held at
//! rest in a weak, static gravitational field.
//!
//! The field lives in the linearised Schwarzschild metric of a distant mass,
//! expanded about the cavity position:
//!
//! ```text
//! ds² = −(1 − 2χ + 2γz) dt² + (1 + 2χ − 2γz) dx²
//! ```
//!
//! Instantaneous modes are either sinusoidal (`MetricOrder::First`, γ = 0) or
//! Airy-type (`MetricOrder::Second`). The time-dependent mirror couples them
//! and the Bogoliubov coefficients are obtained either order by order in the
//! mirror amplitude or by integrating the exact truncated system directly.
//!
//! The crate is `no_std` and only needs an allocator.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod airy;
pub mod bogoliubov;
pub mod coupling;
mod error;
pub mod geometry;
pub mod modes;
pub mod numeric;
pub mod observables;
pub mod oracle;

pub use error::{Error, Result};
pub use num_complex::Complex64;
