//! Sampled complex fields and real intensity maps.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftDirection;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fft::centered_fft2;
use crate::grid::{Domain, GridSpec};

/// An n×n complex scalar field on a centered grid, tagged with its domain.
///
/// Values are samples of the continuous field. The position/momentum pair is
/// `U(q) = (1/2π) ∫ u(ρ) e^{-i q·ρ} d²ρ`, so `energy` (Σ|v|² · pitch²) is the
/// same in both domains.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: GridSpec,
    domain: Domain,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: GridSpec, domain: Domain, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for an {}x{} grid",
                values.len(),
                grid.n(),
                grid.n()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            grid,
            domain,
            values,
        })
    }

    pub fn zeros(grid: GridSpec, domain: Domain) -> Self {
        Self {
            grid,
            domain,
            values: vec![Complex64::default(); grid.len()],
        }
    }

    /// Sample `f(x, y)` at the domain's coordinates.
    pub fn from_fn<F>(grid: GridSpec, domain: Domain, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        let n = grid.n();
        let mut values = vec![Complex64::default(); grid.len()];
        values.par_chunks_mut(n).enumerate().for_each(|(iy, row)| {
            let y = grid.coord(iy, domain);
            for (ix, v) in row.iter_mut().enumerate() {
                *v = f(grid.coord(ix, domain), y);
            }
        });
        Self::new(grid, domain, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn pitch(&self) -> f64 {
        self.grid.pitch(self.domain)
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[iy * self.grid.n() + ix]
    }

    pub fn expect_domain(&self, expected: Domain) -> Result<()> {
        if self.domain != expected {
            return Err(Error::DomainMismatch {
                expected,
                found: self.domain,
            });
        }
        Ok(())
    }

    /// Σ|v|² · pitch², accumulated in index order.
    pub fn energy(&self) -> f64 {
        let p = self.pitch();
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * p * p
    }

    pub fn to_momentum(&self) -> Result<ComplexField> {
        self.expect_domain(Domain::Position)?;
        let dx = self.grid.dx();
        Ok(self.transformed(Domain::Momentum, FftDirection::Forward, dx * dx / (2.0 * PI)))
    }

    pub fn to_position(&self) -> Result<ComplexField> {
        self.expect_domain(Domain::Momentum)?;
        let dk = self.grid.dk();
        Ok(self.transformed(Domain::Position, FftDirection::Inverse, dk * dk / (2.0 * PI)))
    }

    fn transformed(&self, domain: Domain, direction: FftDirection, scale: f64) -> ComplexField {
        let n = self.grid.n();
        let mut values = self.values.clone();
        centered_fft2(&mut values, n, direction);
        values.par_iter_mut().for_each(|v| *v *= scale);
        ComplexField {
            grid: self.grid,
            domain,
            values,
        }
    }

    /// Rescale to unit energy.
    pub fn normalized(mut self) -> Result<ComplexField> {
        let e = self.energy();
        if !(e > 0.0 && e.is_finite()) {
            return Err(Error::Degenerate("field has zero energy".into()));
        }
        let s = 1.0 / e.sqrt();
        self.values.par_iter_mut().for_each(|v| *v *= s);
        Ok(self)
    }

    pub fn scaled(mut self, c: Complex64) -> ComplexField {
        self.values.par_iter_mut().for_each(|v| *v *= c);
        self
    }

    /// Multiply every sample by `f(x, y)` evaluated at the field's coordinates.
    pub fn modulated<F>(mut self, f: F) -> ComplexField
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        let n = self.grid.n();
        let grid = self.grid;
        let domain = self.domain;
        self.values.par_chunks_mut(n).enumerate().for_each(|(iy, row)| {
            let y = grid.coord(iy, domain);
            for (ix, v) in row.iter_mut().enumerate() {
                *v *= f(grid.coord(ix, domain), y);
            }
        });
        self
    }

    pub(crate) fn with_grid(self, grid: GridSpec, domain: Domain) -> ComplexField {
        debug_assert_eq!(grid.n(), self.grid.n());
        ComplexField {
            grid,
            domain,
            values: self.values,
        }
    }

    /// Linear combination `a·self + b·other` on a shared grid.
    pub fn combine(&self, a: Complex64, other: &ComplexField, b: Complex64) -> Result<ComplexField> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(ComplexField {
            grid: self.grid,
            domain: self.domain,
            values,
        })
    }

    fn check_compatible(&self, other: &ComplexField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        other.expect_domain(self.domain)
    }

    /// ⟨self, other⟩ = Σ conj(self)·other · pitch².
    pub fn inner(&self, other: &ComplexField) -> Result<Complex64> {
        self.check_compatible(other)?;
        let p = self.pitch();
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum();
        Ok(s * p * p)
    }

    /// ‖self − other‖ / ‖self‖.
    pub fn relative_l2(&self, other: &ComplexField) -> Result<f64> {
        self.check_compatible(other)?;
        let (mut num, mut den) = (0.0, 0.0);
        for (a, b) in self.values.iter().zip(&other.values) {
            num += (a - b).norm_sqr();
            den += a.norm_sqr();
        }
        Ok((num / den).sqrt())
    }

    /// ‖self − e^{iφ}·other‖ / ‖self‖ minimized over the global phase φ.
    pub fn phase_aligned_l2(&self, other: &ComplexField) -> Result<f64> {
        let c = other.inner(self)?;
        let phase = if c.norm() > 0.0 { c / c.norm() } else { Complex64::new(1.0, 0.0) };
        let aligned = other.clone().scaled(phase);
        self.relative_l2(&aligned)
    }

    pub fn intensity(&self) -> RealMap {
        RealMap {
            grid: self.grid,
            domain: self.domain,
            values: self.values.iter().map(|v| v.norm_sqr()).collect(),
        }
    }
}

/// A real, non-negative sampled map (intensity or counts) on a centered grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMap {
    grid: GridSpec,
    domain: Domain,
    values: Vec<f64>,
}

impl RealMap {
    pub fn new(grid: GridSpec, domain: Domain, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for an {}x{} grid",
                values.len(),
                grid.n(),
                grid.n()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            grid,
            domain,
            values,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn pitch(&self) -> f64 {
        self.grid.pitch(self.domain)
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.n() + ix]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Σ v · pitch².
    pub fn integral(&self) -> f64 {
        let p = self.pitch();
        self.values.iter().sum::<f64>() * p * p
    }

    /// Scale so the maximum is 1.
    pub fn normalized_max(mut self) -> Result<RealMap> {
        let m = self.max();
        if !(m > 0.0) {
            return Err(Error::Degenerate("map has no positive samples".into()));
        }
        self.values.iter_mut().for_each(|v| *v /= m);
        Ok(self)
    }

    /// Intensity-weighted mean coordinate.
    pub fn centroid(&self) -> Result<[f64; 2]> {
        let n = self.grid.n();
        let (mut sx, mut sy, mut s) = (0.0, 0.0, 0.0);
        for iy in 0..n {
            let y = self.grid.coord(iy, self.domain);
            for ix in 0..n {
                let v = self.values[iy * n + ix];
                sx += v * self.grid.coord(ix, self.domain);
                sy += v * y;
                s += v;
            }
        }
        if !(s > 0.0) {
            return Err(Error::Degenerate("map has no weight for a centroid".into()));
        }
        Ok([sx / s, sy / s])
    }

    /// ‖self − other‖ / ‖self‖.
    pub fn relative_l2(&self, other: &RealMap) -> Result<f64> {
        if self.grid != other.grid || self.domain != other.domain {
            return Err(Error::GridMismatch("maps live on different grids".into()));
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (a, b) in self.values.iter().zip(&other.values) {
            num += (a - b) * (a - b);
            den += a * a;
        }
        Ok((num / den).sqrt())
    }

    /// Embed as a complex field with zero imaginary part.
    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            grid: self.grid,
            domain: self.domain,
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    /// Real part of a field, with tiny negative round-off clamped to zero.
    pub(crate) fn from_real_part(field: &ComplexField) -> RealMap {
        RealMap {
            grid: field.grid,
            domain: field.domain,
            values: field.values.iter().map(|v| v.re.max(0.0)).collect(),
        }
    }

    /// Bilinear sample at a physical coordinate; zero outside the grid.
    pub fn bilinear(&self, x: f64, y: f64) -> f64 {
        let n = self.grid.n();
        let p = self.pitch();
        let fx = x / p + (n / 2) as f64;
        let fy = y / p + (n / 2) as f64;
        if !(fx >= 0.0 && fy >= 0.0) || fx > (n - 1) as f64 || fy > (n - 1) as f64 {
            return 0.0;
        }
        let ix = (fx.floor() as usize).min(n - 2);
        let iy = (fy.floor() as usize).min(n - 2);
        let tx = fx - ix as f64;
        let ty = fy - iy as f64;
        let v00 = self.at(ix, iy);
        let v10 = self.at(ix + 1, iy);
        let v01 = self.at(ix, iy + 1);
        let v11 = self.at(ix + 1, iy + 1);
        (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11)
    }

    /// Bilinear resampling onto `target`'s coordinates (the standard comparator
    /// between maps on different grids).
    pub fn resample_onto(&self, target: &GridSpec) -> RealMap {
        let n = target.n();
        let mut values = vec![0.0; target.len()];
        values.par_chunks_mut(n).enumerate().for_each(|(iy, row)| {
            let y = target.coord(iy, self.domain);
            for (ix, v) in row.iter_mut().enumerate() {
                *v = self.bilinear(target.coord(ix, self.domain), y);
            }
        });
        RealMap {
            grid: *target,
            domain: self.domain,
            values,
        }
    }
}
