//! Free-space propagation and the ideal optical elements of the setup.

use rayon::prelude::*;

use crate::beams::{apply_axicon, AxiconSpec};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::{Domain, GridSpec};
use crate::Complex64;

use std::f64::consts::PI;

/// Transfer-function model for free space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PropagationModel {
    #[default]
    Paraxial,
    Exact,
}

/// Result of a free-space step.
#[derive(Debug, Clone)]
pub struct Propagation {
    pub field: ComplexField,
    /// Energy fraction within 10% of the band edge.
    pub edge_fraction: f64,
}

impl Propagation {
    /// More than 0.1% of the energy sits near k_max.
    pub fn aliasing_risk(&self) -> bool {
        self.edge_fraction > 1e-3
    }
}

fn wavenumber(wavelength: f64) -> Result<f64> {
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(Error::param("wavelength", format!("{wavelength} must be positive")));
    }
    Ok(2.0 * PI / wavelength)
}

fn edge_fraction(spectrum: &ComplexField) -> f64 {
    let g = spectrum.grid();
    let n = g.n();
    let edge = 0.9 * g.k_max();
    let (mut near, mut total) = (0.0, 0.0);
    for iy in 0..n {
        let ky = g.k(iy).abs();
        for ix in 0..n {
            let p = spectrum.at(ix, iy).norm_sqr();
            total += p;
            if ky >= edge || g.k(ix).abs() >= edge {
                near += p;
            }
        }
    }
    if total > 0.0 {
        near / total
    } else {
        0.0
    }
}

/// Angular-spectrum propagation by `z` (any sign).
///
/// The piston `e^{ikz}` is applied as one global factor so that the
/// per-sample phases stay small and compose exactly.
pub fn propagate(field: &ComplexField, z: f64, wavelength: f64, model: PropagationModel) -> Result<Propagation> {
    field.expect_domain(Domain::Position)?;
    let k = wavenumber(wavelength)?;
    if !z.is_finite() {
        return Err(Error::param("z", "must be finite"));
    }
    let g = *field.grid();
    if model == PropagationModel::Exact && g.k_max() >= k {
        return Err(Error::Sampling {
            condition: "k_max < k",
            lhs: g.k_max(),
            rhs: k,
        });
    }
    let spectrum = field.to_momentum()?;
    let edge_fraction = edge_fraction(&spectrum);
    let inv_2k = 0.5 / k;
    let filtered = spectrum.modulated(|kx, ky| {
        let q2 = kx * kx + ky * ky;
        let dphi = match model {
            PropagationModel::Paraxial => -z * q2 * inv_2k,
            PropagationModel::Exact => {
                if q2 >= k * k {
                    return Complex64::new(0.0, 0.0);
                }
                -z * q2 / ((k * k - q2).sqrt() + k)
            }
        };
        Complex64::from_polar(1.0, dphi)
    });
    let piston = Complex64::from_polar(1.0, (k * z).rem_euclid(2.0 * PI));
    Ok(Propagation {
        field: filtered.to_position()?.scaled(piston),
        edge_fraction,
    })
}

/// Thin-lens phase exp(−i k|ρ|²/2f). An infinite `f` is the identity.
pub fn apply_lens(field: ComplexField, f: f64, wavelength: f64) -> Result<ComplexField> {
    field.expect_domain(Domain::Position)?;
    let k = wavenumber(wavelength)?;
    if f == 0.0 || f.is_nan() {
        return Err(Error::param("f", "focal length must be nonzero"));
    }
    if f.is_infinite() {
        return Ok(field);
    }
    let c = 0.5 * k / f;
    Ok(field.modulated(|x, y| Complex64::from_polar(1.0, -c * (x * x + y * y))))
}

/// Zero every sample with |ρ| > radius.
pub fn aperture(field: ComplexField, radius: f64) -> Result<ComplexField> {
    field.expect_domain(Domain::Position)?;
    if !(radius > 0.0) {
        return Err(Error::param("radius", format!("{radius} must be positive")));
    }
    let r2 = radius * radius;
    Ok(field.modulated(|x, y| {
        if x * x + y * y > r2 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        }
    }))
}

/// Invert sample indices j → (n − j) mod n on both axes (ρ → −ρ).
fn invert(field: ComplexField) -> ComplexField {
    let g = *field.grid();
    let domain = field.domain();
    let n = g.n();
    let src = field.into_values();
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    out.par_chunks_mut(n).enumerate().for_each(|(iy, row)| {
        let sy = (n - iy) % n;
        for (ix, v) in row.iter_mut().enumerate() {
            *v = src[sy * n + (n - ix) % n];
        }
    });
    ComplexField::new(g, domain, out).expect("same length")
}

/// Relabel a field onto pitch |scale|·pitch with amplitude 1/|scale|,
/// inverting the image when `scale` < 0.
fn relabel(field: ComplexField, pitch: f64, scale: f64, amplitude: f64) -> Result<ComplexField> {
    let n = field.grid().n();
    let grid = GridSpec::new(n, pitch)?;
    let f = if scale < 0.0 { invert(field) } else { field };
    Ok(f.scaled(Complex64::new(amplitude, 0.0)).with_grid(grid, Domain::Position))
}

/// Ideal imaging ρ → m·ρ, amplitude scaled by 1/|m|.
pub fn magnify(field: ComplexField, m: f64) -> Result<ComplexField> {
    field.expect_domain(Domain::Position)?;
    if !(m != 0.0 && m.is_finite()) {
        return Err(Error::param("m", "magnification must be finite and nonzero"));
    }
    let pitch = m.abs() * field.grid().dx();
    relabel(field, pitch, m, 1.0 / m.abs())
}

/// Field in the back focal plane of an f-f system: the spectrum relabeled
/// to ρ = f·k⊥/k on pitch |f|·dk/k, amplitude scaled by k/|f|.
pub fn fourier_plane_field(field: &ComplexField, f: f64, wavelength: f64) -> Result<ComplexField> {
    field.expect_domain(Domain::Position)?;
    let k = wavenumber(wavelength)?;
    if !(f != 0.0 && f.is_finite()) {
        return Err(Error::param("f", "focal length must be finite and nonzero"));
    }
    let spectrum = field.to_momentum()?;
    let pitch = f.abs() * field.grid().dk() / k;
    relabel(spectrum, pitch, f, k / f.abs())
}

/// One optical element.
#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    FreeSpace { z: f64, model: PropagationModel },
    /// `f = ±∞` is a plane window; `radius = None` is unbounded.
    ThinLens { f: f64, radius: Option<f64> },
    /// `radius = ∞` passes everything.
    CircularAperture { radius: f64 },
    IdealMagnifier { m: f64 },
    FourierSystem { f: f64 },
    Axicon(AxiconSpec),
}

impl Element {
    pub fn name(&self) -> &'static str {
        match self {
            Element::FreeSpace { .. } => "free-space",
            Element::ThinLens { .. } => "thin-lens",
            Element::CircularAperture { .. } => "aperture",
            Element::IdealMagnifier { .. } => "magnifier",
            Element::FourierSystem { .. } => "fourier-system",
            Element::Axicon(_) => "axicon",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name, r: f64| {
            if r > 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("{r} must be positive")))
            }
        };
        match *self {
            Element::FreeSpace { z, .. } if !z.is_finite() => Err(Error::param("z", "must be finite")),
            Element::ThinLens { f, .. } if f == 0.0 || f.is_nan() => Err(Error::param("f", "must be nonzero")),
            Element::ThinLens { radius: Some(r), .. } => positive("radius", r),
            Element::CircularAperture { radius } => positive("radius", radius),
            Element::IdealMagnifier { m } if !(m != 0.0 && m.is_finite()) => {
                Err(Error::param("m", "must be finite and nonzero"))
            }
            Element::FourierSystem { f } if !(f != 0.0 && f.is_finite()) => {
                Err(Error::param("f", "must be finite and nonzero"))
            }
            _ => Ok(()),
        }
    }

    /// Linear map of a displacement/tilt pair `(d, κ)` through the element,
    /// for a field of the form `e^{−iκ·ρ} v(ρ + d)`; `None` when the element
    /// does not act covariantly on such fields.
    pub fn ray_matrix(&self, k: f64) -> Option<[[f64; 2]; 2]> {
        match *self {
            Element::FreeSpace {
                z,
                model: PropagationModel::Paraxial,
            } => Some([[1.0, z / k], [0.0, 1.0]]),
            Element::ThinLens { f, radius: None } => {
                let p = if f.is_infinite() { 0.0 } else { k / f };
                Some([[1.0, 0.0], [-p, 1.0]])
            }
            Element::CircularAperture { radius } if radius.is_infinite() => Some([[1.0, 0.0], [0.0, 1.0]]),
            Element::IdealMagnifier { m } => Some([[m, 0.0], [0.0, 1.0 / m]]),
            Element::FourierSystem { f } => Some([[0.0, f / k], [-k / f, 0.0]]),
            _ => None,
        }
    }

    /// Apply to a position-domain field. The second value is the aliasing
    /// flag of a free-space step.
    pub fn apply(&self, field: ComplexField, wavelength: f64) -> Result<(ComplexField, bool)> {
        self.validate()?;
        let out = match *self {
            Element::FreeSpace { z, model } => {
                let p = propagate(&field, z, wavelength, model)?;
                let risk = p.aliasing_risk();
                return Ok((p.field, risk));
            }
            Element::ThinLens { f, radius } => {
                let lensed = apply_lens(field, f, wavelength)?;
                match radius {
                    Some(r) if r.is_finite() => aperture(lensed, r)?,
                    _ => lensed,
                }
            }
            Element::CircularAperture { radius } => {
                if radius.is_infinite() {
                    field.expect_domain(Domain::Position)?;
                    field
                } else {
                    aperture(field, radius)?
                }
            }
            Element::IdealMagnifier { m } => magnify(field, m)?,
            Element::FourierSystem { f } => fourier_plane_field(&field, f, wavelength)?,
            Element::Axicon(ax) => apply_axicon(field, &ax, wavelength)?,
        };
        Ok((out, false))
    }
}

/// Ordered elements with optional labeled taps after each one.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalTrain {
    wavelength: f64,
    elements: Vec<Element>,
    taps: Vec<Option<String>>,
}

impl OpticalTrain {
    pub fn new(wavelength: f64, elements: Vec<Element>) -> Result<Self> {
        wavenumber(wavelength)?;
        if elements.is_empty() {
            return Err(Error::param("elements", "optical train is empty"));
        }
        for (index, e) in elements.iter().enumerate() {
            e.validate().map_err(|source| Error::Element {
                index,
                label: e.name().to_string(),
                source: Box::new(source),
            })?;
        }
        let taps = vec![None; elements.len()];
        Ok(Self {
            wavelength,
            elements,
            taps,
        })
    }

    /// Label the plane after element `index`.
    pub fn tap(mut self, index: usize, label: impl Into<String>) -> Result<Self> {
        match self.taps.get_mut(index) {
            Some(slot) => {
                *slot = Some(label.into());
                Ok(self)
            }
            None => Err(Error::param("tap", format!("no element at index {index}"))),
        }
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn k(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn taps(&self) -> &[Option<String>] {
        &self.taps
    }

    /// Product of the element ray matrices, if every element has one.
    pub fn ray_matrix(&self) -> Option<[[f64; 2]; 2]> {
        let k = self.k();
        self.elements.iter().try_fold([[1.0, 0.0], [0.0, 1.0]], |acc, e| {
            let m = e.ray_matrix(k)?;
            Some([
                [m[0][0] * acc[0][0] + m[0][1] * acc[1][0], m[0][0] * acc[0][1] + m[0][1] * acc[1][1]],
                [m[1][0] * acc[0][0] + m[1][1] * acc[1][0], m[1][0] * acc[0][1] + m[1][1] * acc[1][1]],
            ])
        })
    }
}

/// Fields collected by [`run_train`].
#[derive(Debug, Clone)]
pub struct TrainRun {
    pub taps: Vec<(String, ComplexField)>,
    pub output: ComplexField,
    /// Indices of free-space elements that raised the aliasing flag.
    pub aliasing: Vec<usize>,
}

/// Apply the train in order. The first failing element aborts with its index.
pub fn run_train(field: ComplexField, train: &OpticalTrain) -> Result<TrainRun> {
    let mut current = field;
    let mut taps = Vec::new();
    let mut aliasing = Vec::new();
    for (index, (element, tap)) in train.elements.iter().zip(&train.taps).enumerate() {
        let (next, risk) = element.apply(current, train.wavelength).map_err(|source| Error::Element {
            index,
            label: tap.clone().unwrap_or_else(|| element.name().to_string()),
            source: Box::new(source),
        })?;
        if risk {
            aliasing.push(index);
        }
        if let Some(label) = tap {
            taps.push((label.clone(), next.clone()));
        }
        current = next;
    }
    Ok(TrainRun {
        taps,
        output: current,
        aliasing,
    })
}
