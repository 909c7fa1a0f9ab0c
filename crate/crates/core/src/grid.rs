//! Uniform square sampling grids.
//!
//! Coordinates are centered: sample `j` sits at `(j - n/2) * dx` in position
//! space and `(j - n/2) * dk` in transverse-momentum space, with
//! `dk = 2π / (n dx)`. Lengths are in µm and wavenumbers in rad/µm.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Which representation a sampled field lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Position,
    Momentum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    dx: f64,
}

impl GridSpec {
    pub const MIN_SAMPLES: usize = 16;

    pub fn new(n: usize, dx: f64) -> Result<Self> {
        if n < Self::MIN_SAMPLES || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must be a power of two >= {}",
                Self::MIN_SAMPLES
            )));
        }
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::InvalidGrid(format!("dx = {dx} must be positive")));
        }
        Ok(Self { n, dx })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dk(&self) -> f64 {
        2.0 * PI / (self.n as f64 * self.dx)
    }

    /// Nyquist transverse wavenumber π/dx.
    pub fn k_max(&self) -> f64 {
        PI / self.dx
    }

    pub fn extent(&self) -> f64 {
        self.n as f64 * self.dx
    }

    pub fn pitch(&self, domain: Domain) -> f64 {
        match domain {
            Domain::Position => self.dx,
            Domain::Momentum => self.dk(),
        }
    }

    /// Centered index offset `j - n/2`.
    #[inline]
    pub fn offset(&self, j: usize) -> f64 {
        j as f64 - (self.n / 2) as f64
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.offset(j) * self.dx
    }

    #[inline]
    pub fn k(&self, j: usize) -> f64 {
        self.offset(j) * self.dk()
    }

    #[inline]
    pub fn coord(&self, j: usize, domain: Domain) -> f64 {
        self.offset(j) * self.pitch(domain)
    }

    /// Largest magnitude coordinate reachable on the positive side, `(n/2 - 1)` pitches.
    pub fn max_coord(&self, domain: Domain) -> f64 {
        ((self.n / 2) as f64 - 1.0) * self.pitch(domain)
    }

    /// Same sample count, different position pitch.
    pub fn with_dx(&self, dx: f64) -> Result<Self> {
        Self::new(self.n, dx)
    }
}
