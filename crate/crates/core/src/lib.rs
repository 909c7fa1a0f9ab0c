//! Simulation of heralded single photons from spontaneous parametric
//! downconversion pumped by a Bessel-Gauss beam.
//!
//! Lengths are µm, transverse wavenumbers rad/µm, angles radians.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod beams;
pub mod error;
mod fft;
pub mod field;
pub mod grid;
pub mod io;
pub mod optics;
pub mod quadrature;
pub mod spdc;
pub mod special;

pub use error::{Error, Result};
pub use field::{ComplexField, RealMap};
pub use grid::{Domain, GridSpec};
pub use rustfft::num_complex::Complex64;
