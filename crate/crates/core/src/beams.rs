//! Pump beam generators: Bessel-Gauss in both domains, fundamental Gaussian,
//! and the axicon phase mask.
//!
//! All generated fields are normalized to unit energy.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::{Domain, GridSpec};
use crate::special::{bessel_i0_scaled, bessel_j0_complex};
use crate::Complex64;

/// Bessel-Gauss beam parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BGParams {
    w0: f64,
    kt: f64,
    wavelength: f64,
}

impl BGParams {
    /// `w0` envelope waist (µm), `kt` transverse wavenumber (rad/µm),
    /// `wavelength` vacuum wavelength (µm).
    pub fn new(w0: f64, kt: f64, wavelength: f64) -> Result<Self> {
        if !(w0 > 0.0 && w0.is_finite()) {
            return Err(Error::param("w0", format!("{w0} must be positive")));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::param("wavelength", format!("{wavelength} must be positive")));
        }
        let k = 2.0 * PI / wavelength;
        if !(kt >= 0.0 && kt < k) {
            return Err(Error::param("kt", format!("{kt} must lie in [0, k = {k})")));
        }
        Ok(Self { w0, kt, wavelength })
    }

    pub fn w0(&self) -> f64 {
        self.w0
    }

    pub fn kt(&self) -> f64 {
        self.kt
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn k(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// z_r = k w0² / 2.
    pub fn rayleigh_range(&self) -> f64 {
        0.5 * self.k() * self.w0 * self.w0
    }

    /// μ = 1 + i z / z_r.
    pub fn mu(&self, z: f64) -> Complex64 {
        Complex64::new(1.0, z / self.rayleigh_range())
    }

    /// Cone half-angle arcsin(k_t / k).
    pub fn cone_half_angle(&self) -> f64 {
        (self.kt / self.k()).asin()
    }

    /// Non-diffracting range w0 k / k_t (infinite for a Gaussian).
    pub fn z_max(&self) -> f64 {
        if self.kt == 0.0 {
            f64::INFINITY
        } else {
            self.w0 * self.k() / self.kt
        }
    }
}

fn require(condition: &'static str, ok: bool, lhs: f64, rhs: f64) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Sampling { condition, lhs, rhs })
    }
}

/// Check that `grid` resolves the annular spectrum of `p`.
pub fn check_spectrum_sampling(p: &BGParams, grid: &GridSpec) -> Result<()> {
    let need = p.kt + 8.0 / p.w0;
    require("k_max >= kt + 8/w0", grid.k_max() >= need, grid.k_max(), need)?;
    let limit = 1.0 / p.w0;
    require("dk <= (4/w0)/4", grid.dk() <= limit, grid.dk(), limit)
}

/// Check that `grid` holds the Bessel-Gauss field at distance `z`.
pub fn check_field_sampling(p: &BGParams, z: f64, grid: &GridSpec) -> Result<()> {
    let need = 6.0 * p.w0 * p.mu(z).norm();
    require("n*dx >= 6*w0*|mu(z)|", grid.extent() >= need, grid.extent(), need)?;
    if p.kt > 0.0 {
        let limit = 2.0 * PI / p.kt / 8.0;
        require("dx <= (2*pi/kt)/8", grid.dx() <= limit, grid.dx(), limit)?;
    }
    Ok(())
}

/// Angular spectrum `A exp(-w0²|k|²/4) I0(k_t w0² |k| / 2)`.
///
/// Evaluated as `exp(-(w0²/4)(|k| - k_t)²) · e^{-x} I0(x)`, which is the same
/// function up to the constant `exp(w0² k_t² / 4)` absorbed by normalization.
pub fn bg_spectrum(p: &BGParams, grid: &GridSpec) -> Result<ComplexField> {
    check_spectrum_sampling(p, grid)?;
    let (w0, kt) = (p.w0, p.kt);
    let quarter = 0.25 * w0 * w0;
    let arg_scale = 0.5 * kt * w0 * w0;
    ComplexField::from_fn(*grid, Domain::Momentum, |kx, ky| {
        let q = kx.hypot(ky);
        let d = q - kt;
        Complex64::new((-quarter * d * d).exp() * bessel_i0_scaled(arg_scale * q), 0.0)
    })?
    .normalized()
}

/// Position-space amplitude at distance `z` (negative z is a converging beam):
/// `(1/μ) exp{-(1/μ)(i k_t² z / 2k + |ρ|²/w0²)} J0(k_t |ρ| / μ)`.
pub fn bg_field(p: &BGParams, z: f64, grid: &GridSpec) -> Result<ComplexField> {
    check_field_sampling(p, z, grid)?;
    let mu = p.mu(z);
    let inv_mu = mu.inv();
    let axial = Complex64::new(0.0, p.kt * p.kt * z / (2.0 * p.k()));
    let inv_w2 = 1.0 / (p.w0 * p.w0);
    let kt = p.kt;
    ComplexField::from_fn(*grid, Domain::Position, |x, y| {
        let r2 = x * x + y * y;
        let envelope = (-(axial + r2 * inv_w2) * inv_mu).exp() * inv_mu;
        if kt == 0.0 {
            envelope
        } else {
            envelope * bessel_j0_complex(inv_mu * (kt * r2.sqrt()))
        }
    })?
    .normalized()
}

/// Fundamental Gaussian with waist `w0` at z = 0, evaluated at distance `z`.
pub fn gaussian_field(w0: f64, wavelength: f64, z: f64, grid: &GridSpec) -> Result<ComplexField> {
    let p = BGParams::new(w0, 0.0, wavelength)?;
    let width = w0 * p.mu(z).norm();
    let need = 6.0 * width;
    require("n*dx >= 6*w(z)", grid.extent() >= need, grid.extent(), need)?;
    let inv_mu = p.mu(z).inv();
    let inv_w2 = 1.0 / (w0 * w0);
    ComplexField::from_fn(*grid, Domain::Position, |x, y| {
        (-(x * x + y * y) * inv_w2 * inv_mu).exp() * inv_mu
    })?
    .normalized()
}

/// Conical lens. Stores the full apex angle; the deflecting base angle is
/// `α = (π − apex) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxiconSpec {
    apex_angle: f64,
    refractive_index: f64,
}

impl AxiconSpec {
    /// `apex_angle` in (0, π]; π is a flat plate (no deflection).
    pub fn new(apex_angle: f64, refractive_index: f64) -> Result<Self> {
        if !(apex_angle > 0.0 && apex_angle <= PI) {
            return Err(Error::param("apex_angle", format!("{apex_angle} rad outside (0, π]")));
        }
        if !(refractive_index > 1.0 && refractive_index.is_finite()) {
            return Err(Error::param("refractive_index", format!("{refractive_index} must exceed 1")));
        }
        Ok(Self {
            apex_angle,
            refractive_index,
        })
    }

    /// Build from the base (wedge) angle α in [0, π/2).
    pub fn from_base_angle(base_angle: f64, refractive_index: f64) -> Result<Self> {
        if !(0.0..0.5 * PI).contains(&base_angle) {
            return Err(Error::param("base_angle", format!("{base_angle} rad outside [0, π/2)")));
        }
        Self::new(PI - 2.0 * base_angle, refractive_index)
    }

    pub fn apex_angle(&self) -> f64 {
        self.apex_angle
    }

    pub fn refractive_index(&self) -> f64 {
        self.refractive_index
    }

    pub fn base_angle(&self) -> f64 {
        0.5 * (PI - self.apex_angle)
    }

    /// Transverse wavenumber imprinted by the axicon: k (n_r − 1) α.
    pub fn deflection_kt(&self, wavelength: f64) -> f64 {
        2.0 * PI / wavelength * (self.refractive_index - 1.0) * self.base_angle()
    }
}

/// Multiply by the conical phase exp(−i k (n_r − 1) α |ρ|).
pub fn apply_axicon(field: ComplexField, ax: &AxiconSpec, wavelength: f64) -> Result<ComplexField> {
    field.expect_domain(Domain::Position)?;
    if !(wavelength > 0.0) {
        return Err(Error::param("wavelength", "must be positive"));
    }
    let slope = ax.deflection_kt(wavelength);
    if slope == 0.0 {
        return Ok(field);
    }
    Ok(field.modulated(|x, y| Complex64::from_polar(1.0, -slope * x.hypot(y))))
}
