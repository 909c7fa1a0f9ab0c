//! Conditional signal states of thin-crystal SPDC and the incoherent
//! mixtures seen by finite-size detectors.
//!
//! A herald at idler wavevector `k_i` projects the signal onto the pump
//! spectrum translated by `−k_i`. In position space that is the pump field
//! times the tilt `e^{−i k_i·ρ}`. Through a train whose elements all map
//! tilts and displacements linearly (see [`Element::ray_matrix`]) the tilted
//! copies stay rigid translates of one reference intensity, so a mixture over
//! herald nodes is a convolution evaluated with a single FFT pair. Trains
//! without that property fall back to propagating every node.

use rayon::prelude::*;

use crate::analysis::{fwhm, nondiffracting_range, Profile};
use crate::error::{Error, Result};
use crate::field::{ComplexField, RealMap};
use crate::grid::{Domain, GridSpec};
use crate::optics::{propagate, run_train, Element, OpticalTrain, PropagationModel};
use crate::quadrature::disk_rule;
use crate::special::bessel_j1;
use crate::Complex64;

use std::f64::consts::PI;

/// Largest energy fraction a spectrum translation may push off the grid.
pub const SHIFT_TOLERANCE: f64 = 1e-6;

/// Polar rule used when an analytic disk must be sampled explicitly.
const DISK_FALLBACK: (usize, usize) = (24, 48);

/// Pump angular spectrum at the crystal plus the three wavelengths.
#[derive(Debug, Clone)]
pub struct PumpState {
    spectrum: ComplexField,
    pump_wavelength: f64,
    signal_wavelength: f64,
    idler_wavelength: f64,
}

impl PumpState {
    /// The spectrum is renormalized to unit energy.
    pub fn new(spectrum: ComplexField, pump_wavelength: f64, signal_wavelength: f64, idler_wavelength: f64) -> Result<Self> {
        spectrum.expect_domain(Domain::Momentum)?;
        for (name, v) in [
            ("pump_wavelength", pump_wavelength),
            ("signal_wavelength", signal_wavelength),
            ("idler_wavelength", idler_wavelength),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("{v} must be positive")));
            }
        }
        let mismatch = (1.0 / signal_wavelength + 1.0 / idler_wavelength) * pump_wavelength - 1.0;
        if mismatch.abs() > 1e-9 {
            return Err(Error::param(
                "signal_wavelength",
                format!("1/λs + 1/λi differs from 1/λp by {mismatch:.3e} (relative)"),
            ));
        }
        Ok(Self {
            spectrum: spectrum.normalized()?,
            pump_wavelength,
            signal_wavelength,
            idler_wavelength,
        })
    }

    /// Signal and idler both at twice the pump wavelength.
    pub fn degenerate(spectrum: ComplexField, pump_wavelength: f64) -> Result<Self> {
        Self::new(spectrum, pump_wavelength, 2.0 * pump_wavelength, 2.0 * pump_wavelength)
    }

    pub fn spectrum(&self) -> &ComplexField {
        &self.spectrum
    }

    pub fn grid(&self) -> &GridSpec {
        self.spectrum.grid()
    }

    pub fn pump_wavelength(&self) -> f64 {
        self.pump_wavelength
    }

    pub fn signal_wavelength(&self) -> f64 {
        self.signal_wavelength
    }

    pub fn idler_wavelength(&self) -> f64 {
        self.idler_wavelength
    }

    pub fn k_signal(&self) -> f64 {
        2.0 * PI / self.signal_wavelength
    }

    pub fn k_idler(&self) -> f64 {
        2.0 * PI / self.idler_wavelength
    }

    /// Pump field at the crystal plane.
    pub fn field(&self) -> Result<ComplexField> {
        self.spectrum.to_position()
    }

    /// kx ≥ 0 maximizing |S_p(kx, 0)|², refined by a parabola through the
    /// neighbouring samples. Zero for a centrally peaked spectrum.
    pub fn ring_peak_kx(&self) -> f64 {
        let g = self.grid();
        let n = g.n();
        let row: Vec<f64> = (n / 2..n).map(|ix| self.spectrum.at(ix, n / 2).norm_sqr()).collect();
        let mut i = 0;
        for (j, &v) in row.iter().enumerate() {
            if v > row[i] {
                i = j;
            }
        }
        if i == 0 || i + 1 == row.len() {
            return g.k(n / 2 + i);
        }
        let (a, b, c) = (row[i - 1], row[i], row[i + 1]);
        let denom = a - 2.0 * b + c;
        let shift = if denom < 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
        (i as f64 + shift) * g.dk()
    }

    /// Smallest radius outside which at most `tail` of the energy lies.
    pub fn support_radius(&self, tail: f64) -> f64 {
        let g = self.grid();
        let n = g.n();
        let mut samples: Vec<(f64, f64)> = (0..n * n)
            .map(|i| (g.k(i % n).hypot(g.k(i / n)), self.spectrum.values()[i].norm_sqr()))
            .collect();
        samples.sort_by(|a, b| b.0.total_cmp(&a.0));
        let total: f64 = samples.iter().map(|s| s.1).sum();
        let budget = tail * total;
        let mut outside = 0.0;
        for &(r, p) in &samples {
            if outside + p > budget {
                return r;
            }
            outside += p;
        }
        0.0
    }

    /// Idler acceptance for singles: the largest centred disk whose
    /// translates keep the spectrum on the grid to [`SHIFT_TOLERANCE`].
    pub fn singles_acceptance(&self) -> Result<HeraldSpec> {
        let reach = self.grid().max_coord(Domain::Momentum) - self.support_radius(SHIFT_TOLERANCE);
        if !(reach > 0.0) {
            return Err(Error::Degenerate("pump spectrum fills the grid; no room for idler acceptance".into()));
        }
        HeraldSpec::new([0.0, 0.0], reach, HeraldSampling::UniformDisk)
    }

    fn guard(&self) -> ShiftGuard {
        ShiftGuard::new(&self.spectrum)
    }
}

/// How the herald aperture is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeraldSampling {
    /// Gauss-Legendre radial × uniform azimuthal nodes.
    Polar { n_radial: usize, n_azimuthal: usize },
    /// Exact uniform average over the disk where the train allows it,
    /// otherwise a 24 × 48 polar rule.
    UniformDisk,
}

impl Default for HeraldSampling {
    fn default() -> Self {
        HeraldSampling::Polar {
            n_radial: 6,
            n_azimuthal: 16,
        }
    }
}

/// Idler detector: a disk of `aperture_radius_k` about `k_center` in the
/// idler's transverse-wavevector plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeraldSpec {
    k_center: [f64; 2],
    aperture_radius_k: f64,
    sampling: HeraldSampling,
}

impl HeraldSpec {
    pub fn new(k_center: [f64; 2], aperture_radius_k: f64, sampling: HeraldSampling) -> Result<Self> {
        if !(aperture_radius_k >= 0.0 && aperture_radius_k.is_finite()) {
            return Err(Error::param("aperture_radius_k", format!("{aperture_radius_k} must be ≥ 0")));
        }
        if !(k_center[0].is_finite() && k_center[1].is_finite()) {
            return Err(Error::param("k_center", "must be finite"));
        }
        if let HeraldSampling::Polar { n_radial, n_azimuthal } = sampling {
            if n_radial == 0 || n_azimuthal == 0 {
                return Err(Error::param("sampling", "quadrature counts must be at least 1"));
            }
        }
        Ok(Self {
            k_center,
            aperture_radius_k,
            sampling,
        })
    }

    /// A single idler wavevector.
    pub fn point(k_center: [f64; 2]) -> Result<Self> {
        Self::new(k_center, 0.0, HeraldSampling::Polar { n_radial: 1, n_azimuthal: 1 })
    }

    /// Fiber tip of radius `fiber_radius` in the back focal plane of a lens
    /// of focal length `focal_length`: radius `r·k/f` in wavevector units.
    pub fn fiber_radius_k(fiber_radius: f64, k: f64, focal_length: f64) -> f64 {
        fiber_radius * k / focal_length
    }

    pub fn k_center(&self) -> [f64; 2] {
        self.k_center
    }

    pub fn aperture_radius_k(&self) -> f64 {
        self.aperture_radius_k
    }

    pub fn sampling(&self) -> HeraldSampling {
        self.sampling
    }

    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        Self::new(self.k_center, radius, self.sampling)
    }

    /// Quadrature nodes `(k_i, area weight)`; a single unit-weight node when
    /// the aperture has zero radius.
    pub fn nodes(&self) -> Vec<([f64; 2], f64)> {
        if self.aperture_radius_k == 0.0 {
            return vec![(self.k_center, 1.0)];
        }
        let (nr, na) = match self.sampling {
            HeraldSampling::Polar { n_radial, n_azimuthal } => (n_radial, n_azimuthal),
            HeraldSampling::UniformDisk => DISK_FALLBACK,
        };
        disk_rule(self.k_center, self.aperture_radius_k, nr, na)
    }

    /// The mixture measure over wavevectors, with weights summing to one.
    fn measure(&self, analytic: bool) -> Blur {
        if analytic && self.sampling == HeraldSampling::UniformDisk && self.aperture_radius_k > 0.0 {
            return Blur::Disk {
                center: self.k_center,
                radius: self.aperture_radius_k,
            };
        }
        let nodes = self.nodes();
        let total: f64 = nodes.iter().map(|n| n.1).sum();
        Blur::Points(nodes.into_iter().map(|(k, w)| (k, w / total)).collect())
    }
}

/// Energy bookkeeping for translated spectra via a summed-area table.
struct ShiftGuard {
    sat: Vec<f64>,
    n: usize,
    dk: f64,
}

impl ShiftGuard {
    fn new(spectrum: &ComplexField) -> Self {
        let n = spectrum.grid().n();
        let mut sat = vec![0.0; (n + 1) * (n + 1)];
        for iy in 0..n {
            let mut row = 0.0;
            for ix in 0..n {
                row += spectrum.at(ix, iy).norm_sqr();
                sat[(iy + 1) * (n + 1) + ix + 1] = sat[iy * (n + 1) + ix + 1] + row;
            }
        }
        Self {
            sat,
            n,
            dk: spectrum.grid().dk(),
        }
    }

    fn total(&self) -> f64 {
        self.sat[(self.n + 1) * (self.n + 1) - 1]
    }

    /// Pump samples `j` whose wavevector stays on the grid after the shift.
    fn kept_range(&self, shift: f64) -> Option<(usize, usize)> {
        let m = shift / self.dk;
        let lo = (m - 1e-9).ceil().max(0.0);
        let hi = ((self.n - 1) as f64 + m + 1e-9).floor().min((self.n - 1) as f64);
        (lo <= hi).then_some((lo as usize, hi as usize))
    }

    /// Fraction of the energy lost by translating the spectrum by −k_i.
    fn lost_fraction(&self, k_i: [f64; 2]) -> f64 {
        let total = self.total();
        let (Some((x0, x1)), Some((y0, y1))) = (self.kept_range(k_i[0]), self.kept_range(k_i[1])) else {
            return 1.0;
        };
        let w = self.n + 1;
        let kept = self.sat[(y1 + 1) * w + x1 + 1] - self.sat[y0 * w + x1 + 1] - self.sat[(y1 + 1) * w + x0]
            + self.sat[y0 * w + x0];
        ((total - kept) / total).max(0.0)
    }

    fn check(&self, k_i: [f64; 2]) -> Result<()> {
        let fraction = self.lost_fraction(k_i);
        if fraction > SHIFT_TOLERANCE {
            Err(Error::ShiftOverflow { fraction })
        } else {
            Ok(())
        }
    }
}

/// Signal angular amplitude heralded at idler wavevector `k_i`:
/// `A(k) = S_p(k + k_i)` on the pump grid, zero where `k + k_i` leaves it,
/// renormalized. Whole-sample shifts are index moves; other shifts use the
/// band-limited interpolant via a position-space tilt.
pub fn conditional_spectrum(pump: &PumpState, k_i: [f64; 2]) -> Result<ComplexField> {
    if !(k_i[0].is_finite() && k_i[1].is_finite()) {
        return Err(Error::param("k_i", "must be finite"));
    }
    if k_i == [0.0, 0.0] {
        return Ok(pump.spectrum.clone());
    }
    pump.guard().check(k_i)?;
    let g = *pump.grid();
    let n = g.n();
    let dk = g.dk();
    let m = [k_i[0] / dk, k_i[1] / dk];
    let whole = m.iter().all(|v| (v - v.round()).abs() < 1e-9);
    let lo = g.k(0) - 1e-9 * dk;
    let hi = g.k(n - 1) + 1e-9 * dk;
    let shifted = if whole {
        let (sx, sy) = (m[0].round() as i64, m[1].round() as i64);
        let src = pump.spectrum.values();
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        out.par_chunks_mut(n).enumerate().for_each(|(iy, row)| {
            let jy = iy as i64 + sy;
            if jy < 0 || jy >= n as i64 {
                return;
            }
            for (ix, v) in row.iter_mut().enumerate() {
                let jx = ix as i64 + sx;
                if jx >= 0 && jx < n as i64 {
                    *v = src[jy as usize * n + jx as usize];
                }
            }
        });
        ComplexField::new(g, Domain::Momentum, out)?
    } else {
        pump.field()?
            .modulated(|x, y| Complex64::from_polar(1.0, -(k_i[0] * x + k_i[1] * y)))
            .to_momentum()?
            .modulated(|kx, ky| {
                let (qx, qy) = (kx + k_i[0], ky + k_i[1]);
                if qx < lo || qx > hi || qy < lo || qy > hi {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(1.0, 0.0)
                }
            })
    };
    shifted.normalized()
}

/// A probability measure over displacements `d`; blurring maps `I(ρ)` to
/// `∫ I(ρ + d) dμ(d)`.
#[derive(Debug, Clone, PartialEq)]
enum Blur {
    /// Weights sum to one.
    Points(Vec<([f64; 2], f64)>),
    /// Uniform over a disk.
    Disk { center: [f64; 2], radius: f64 },
}

impl Blur {
    fn scaled(&self, b: f64) -> Blur {
        match self {
            Blur::Points(p) => Blur::Points(p.iter().map(|&(d, w)| ([b * d[0], b * d[1]], w)).collect()),
            Blur::Disk { center, radius } => Blur::Disk {
                center: [b * center[0], b * center[1]],
                radius: b.abs() * radius,
            },
        }
    }
}

/// 2J1(x)/x.
fn jinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 8.0
    } else {
        2.0 * bessel_j1(x) / x
    }
}

/// The transform of a real map, ready for blurring and resampling.
#[derive(Debug, Clone)]
struct MapSpectrum {
    values: ComplexField,
    source: Domain,
}

impl MapSpectrum {
    fn of(map: &RealMap) -> Result<Self> {
        let c = map.to_complex();
        let values = match map.domain() {
            Domain::Position => c.to_momentum()?,
            Domain::Momentum => c.to_position()?,
        };
        Ok(Self {
            values,
            source: map.domain(),
        })
    }

    /// Sign of the conjugate-variable exponent in the inverse transform.
    fn sign(&self) -> f64 {
        match self.source {
            Domain::Position => 1.0,
            Domain::Momentum => -1.0,
        }
    }

    fn blur(mut self, blur: &Blur) -> Self {
        let s = self.sign();
        let g = *self.values.grid();
        let dom = self.values.domain();
        let n = g.n();
        let t: Vec<f64> = (0..n).map(|j| g.coord(j, dom)).collect();
        match blur {
            Blur::Disk { center, radius } => {
                let (c, r) = (*center, *radius);
                self.values = self.values.modulated(|tx, ty| {
                    Complex64::from_polar(jinc(tx.hypot(ty) * r), s * (tx * c[0] + ty * c[1]))
                });
            }
            Blur::Points(points) => {
                let ex: Vec<Vec<Complex64>> = points
                    .iter()
                    .map(|(d, _)| t.iter().map(|&tx| Complex64::from_polar(1.0, s * tx * d[0])).collect())
                    .collect();
                let mut values = std::mem::replace(&mut self.values, ComplexField::zeros(g, dom)).into_values();
                values.par_chunks_mut(n).enumerate().for_each(|(iy, row)| {
                    let mut phi = vec![Complex64::new(0.0, 0.0); n];
                    for ((d, w), e) in points.iter().zip(&ex) {
                        let c = Complex64::from_polar(*w, s * t[iy] * d[1]);
                        for (p, x) in phi.iter_mut().zip(e) {
                            *p += c * x;
                        }
                    }
                    for (v, p) in row.iter_mut().zip(&phi) {
                        *v *= p;
                    }
                });
                self.values = ComplexField::new(g, dom, values).expect("same shape");
            }
        }
        self
    }

    fn to_map(&self) -> Result<RealMap> {
        let back = match self.source {
            Domain::Position => self.values.to_position()?,
            Domain::Momentum => self.values.to_momentum()?,
        };
        Ok(RealMap::from_real_part(&back))
    }

    /// Band-limited samples of the map along `axis` through `fixed` (the
    /// other coordinate), at `coords`. Slight negative ringing is clipped.
    fn line(&self, axis: Axis, fixed: f64, coords: &[f64]) -> Vec<f64> {
        let s = self.sign();
        let g = *self.values.grid();
        let dom = self.values.domain();
        let n = g.n();
        let pitch = g.pitch(dom);
        let scale = pitch * pitch / (2.0 * PI);
        let t: Vec<f64> = (0..n).map(|j| g.coord(j, dom)).collect();
        // collapse the fixed axis first
        let collapsed: Vec<Complex64> = (0..n)
            .map(|i| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, &tf) in t.iter().enumerate() {
                    let v = match axis {
                        Axis::Y => self.values.at(j, i),
                        Axis::X => self.values.at(i, j),
                    };
                    acc += v * Complex64::from_polar(1.0, s * tf * fixed);
                }
                acc
            })
            .collect();
        coords
            .par_iter()
            .map(|&c| {
                let mut acc = 0.0;
                for (v, &ti) in collapsed.iter().zip(&t) {
                    acc += (v * Complex64::from_polar(1.0, s * ti * c)).re;
                }
                (acc * scale).max(0.0)
            })
            .collect()
    }
}

/// Uniform average over a disk of `radius` about every point (a top-hat
/// fiber tip used as an area detector).
pub fn fiber_average(map: &RealMap, radius: f64) -> Result<RealMap> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::param("radius", format!("{radius} must be ≥ 0")));
    }
    if radius == 0.0 {
        return Ok(map.clone());
    }
    MapSpectrum::of(map)?
        .blur(&Blur::Disk {
            center: [0.0, 0.0],
            radius,
        })
        .to_map()
}

fn check_signal_train(pump: &PumpState, train: &OpticalTrain) -> Result<()> {
    let rel = (train.wavelength() - pump.signal_wavelength).abs() / pump.signal_wavelength;
    if rel > 1e-12 {
        return Err(Error::param(
            "train.wavelength",
            format!("{} µm differs from the signal wavelength {} µm", train.wavelength(), pump.signal_wavelength),
        ));
    }
    Ok(())
}

/// The detection arm: an f-f system onto the momentum plane FP1 and a second
/// f-f system onto FP2, where the crystal plane is imaged with magnification
/// −f2/f1.
pub fn signal_train(wavelength: f64, f1: f64, f2: f64) -> Result<OpticalTrain> {
    OpticalTrain::new(wavelength, vec![Element::FourierSystem { f: f1 }, Element::FourierSystem { f: f2 }])?
        .tap(0, "FP1")?
        .tap(1, "FP2")
}

/// `train` followed by free space `z`.
fn extend(train: &OpticalTrain, z: f64) -> Result<OpticalTrain> {
    let mut elements = train.elements().to_vec();
    if z != 0.0 {
        elements.push(Element::FreeSpace {
            z,
            model: PropagationModel::Paraxial,
        });
    }
    OpticalTrain::new(train.wavelength(), elements)
}

/// A signal observation plane with its untilted reference intensity.
struct SignalPlane {
    reference: RealMap,
    /// Displacement per unit idler wavevector; `None` forces per-node propagation.
    lever: Option<f64>,
}

impl SignalPlane {
    fn new(pump: &PumpState, train: &OpticalTrain) -> Result<Self> {
        check_signal_train(pump, train)?;
        let lever = train.ray_matrix().map(|m| m[0][1]);
        let reference = run_train(pump.field()?, train)?.output.intensity();
        Ok(Self { reference, lever })
    }

    fn from_reference(reference: RealMap, lever: f64) -> Self {
        Self {
            reference,
            lever: Some(lever),
        }
    }

    /// Mixture over `herald`, as a transform (covariant trains only).
    fn mixed(&self, pump: &PumpState, herald: &HeraldSpec) -> Result<Option<MapSpectrum>> {
        let Some(b) = self.lever else { return Ok(None) };
        let guard = pump.guard();
        for (k, _) in herald.nodes() {
            guard.check(k)?;
        }
        Ok(Some(MapSpectrum::of(&self.reference)?.blur(&herald.measure(true).scaled(b))))
    }
}

/// Σ_j w_j |U[A_j]|² evaluated node by node.
fn direct_mixture(pump: &PumpState, herald: &HeraldSpec, train: &OpticalTrain) -> Result<RealMap> {
    let Blur::Points(points) = herald.measure(false) else {
        unreachable!("explicit nodes requested")
    };
    let mut acc: Option<(GridSpec, Vec<f64>)> = None;
    for (k, w) in points {
        let cond = conditional_spectrum(pump, k)?;
        let out = run_train(cond.to_position()?, train)?.output;
        let entry = acc.get_or_insert_with(|| (*out.grid(), vec![0.0; out.values().len()]));
        for (a, v) in entry.1.iter_mut().zip(out.values()) {
            *a += w * v.norm_sqr();
        }
    }
    let (grid, values) = acc.expect("at least one node");
    RealMap::new(grid, Domain::Position, values)
}

/// Signal intensity at distance `z` past `train`, heralded by `herald`:
/// the weighted incoherent sum of the propagated conditional states,
/// normalized to unit integral.
pub fn heralded_intensity(pump: &PumpState, herald: &HeraldSpec, train: &OpticalTrain, z: f64) -> Result<RealMap> {
    let full = extend(train, z)?;
    let plane = SignalPlane::new(pump, &full)?;
    match plane.mixed(pump, herald)? {
        Some(spec) => spec.to_map(),
        None => direct_mixture(pump, herald, &full),
    }
}

/// Singles intensity with the coverage diagnostic.
#[derive(Debug, Clone)]
pub struct Singles {
    pub map: RealMap,
    /// Relative L2 change when the acceptance radius grows by 25%.
    pub coverage_change: Option<f64>,
    pub warnings: Vec<String>,
}

/// Relative change tolerated by the singles coverage diagnostic.
pub const COVERAGE_TOLERANCE: f64 = 0.01;

fn coverage_warning(change: f64, radius: f64) -> Option<String> {
    (change > COVERAGE_TOLERANCE).then(|| {
        format!(
            "idler acceptance radius {radius:.4e} rad/µm does not cover the idler marginal: enlarging it by 25% changes singles by {:.1}%",
            100.0 * change
        )
    })
}

/// Signal intensity unconditioned on the idler: the mixture over the whole
/// idler `acceptance`.
pub fn unconditioned_intensity(pump: &PumpState, acceptance: &HeraldSpec, train: &OpticalTrain, z: f64) -> Result<Singles> {
    let full = extend(train, z)?;
    let plane = SignalPlane::new(pump, &full)?;
    match plane.lever {
        Some(b) => {
            let base = MapSpectrum::of(&plane.reference)?;
            let map = plane.mixed(pump, acceptance)?.expect("covariant").to_map()?;
            let wider = acceptance.with_radius(1.25 * acceptance.aperture_radius_k())?;
            let wide = base.blur(&wider.measure(true).scaled(b)).to_map()?;
            let change = relative_change(&map, &wide);
            Ok(Singles {
                warnings: coverage_warning(change, acceptance.aperture_radius_k()).into_iter().collect(),
                map,
                coverage_change: Some(change),
            })
        }
        None => Ok(Singles {
            map: direct_mixture(pump, acceptance, &full)?,
            coverage_change: None,
            warnings: vec!["singles coverage diagnostic unavailable for this optical train".into()],
        }),
    }
}

fn relative_change(a: &RealMap, b: &RealMap) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in a.values().iter().zip(b.values()) {
        num += (x - y) * (x - y);
        den += x * x;
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        0.0
    }
}

/// Square region of a map, given by its center and half width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub center: [f64; 2],
    pub half_width: f64,
}

/// Heralded signal angular spectrum as recorded by a signal fiber of radius
/// `signal_fiber_radius_k` (wavevector units) scanned across the Fourier
/// plane: `Σ_j w_j |S_p(k + k_j)|²` averaged over the fiber disk. Samples
/// outside `window` are zeroed.
pub fn conditional_spectrum_scan(
    pump: &PumpState,
    herald: &HeraldSpec,
    signal_fiber_radius_k: f64,
    window: Option<Window>,
) -> Result<RealMap> {
    if !(signal_fiber_radius_k >= 0.0 && signal_fiber_radius_k.is_finite()) {
        return Err(Error::param("signal_fiber_radius_k", "must be ≥ 0"));
    }
    let g = *pump.grid();
    if let Some(w) = window {
        let lo = g.coord(0, Domain::Momentum);
        let hi = g.max_coord(Domain::Momentum);
        let inside = w.half_width > 0.0
            && w.center.iter().all(|c| c - w.half_width >= lo && c + w.half_width <= hi);
        if !inside {
            return Err(Error::param("window", format!("{w:?} is not inside the momentum grid")));
        }
    }
    let guard = pump.guard();
    for (k, _) in herald.nodes() {
        guard.check(k)?;
    }
    let mut spec = MapSpectrum::of(&pump.spectrum.intensity())?.blur(&herald.measure(true));
    if signal_fiber_radius_k > 0.0 {
        spec = spec.blur(&Blur::Disk {
            center: [0.0, 0.0],
            radius: signal_fiber_radius_k,
        });
    }
    let map = spec.to_map()?;
    Ok(match window {
        None => map,
        Some(w) => {
            let values = (0..g.len())
                .map(|i| {
                    let (kx, ky) = (g.k(i % g.n()), g.k(i / g.n()));
                    let inside = (kx - w.center[0]).abs() <= w.half_width && (ky - w.center[1]).abs() <= w.half_width;
                    if inside {
                        map.values()[i]
                    } else {
                        0.0
                    }
                })
                .collect();
            RealMap::new(g, Domain::Momentum, values)?
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// A 1-D fiber-tip scan through the centroid of the observed intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSpec {
    pub fiber_radius: f64,
    pub axis: Axis,
    pub half_width: f64,
    pub step: f64,
}

impl ScanSpec {
    pub fn new(fiber_radius: f64, axis: Axis, half_width: f64, step: f64) -> Result<Self> {
        if !(fiber_radius > 0.0 && fiber_radius.is_finite()) {
            return Err(Error::param("fiber_radius", format!("{fiber_radius} must be positive")));
        }
        if !(step > 0.0 && half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::param("step", "scan step and half width must be positive"));
        }
        if half_width / step > 1e6 {
            return Err(Error::param("step", "more than 2e6 scan samples"));
        }
        Ok(Self {
            fiber_radius,
            axis,
            half_width,
            step,
        })
    }

    /// Offsets from the scan center, symmetric about zero.
    pub fn offsets(&self) -> Vec<f64> {
        let m = (self.half_width / self.step + 1e-9).floor() as i64;
        (-m..=m).map(|i| i as f64 * self.step).collect()
    }

    fn sample(&self, spec: &MapSpectrum, map: &RealMap) -> Result<Profile> {
        let c = map.centroid()?;
        let (along, across) = match self.axis {
            Axis::X => (c[0], c[1]),
            Axis::Y => (c[1], c[0]),
        };
        let g = map.grid();
        let lo = g.coord(0, Domain::Position);
        let hi = g.max_coord(Domain::Position);
        if along - self.half_width < lo || along + self.half_width > hi {
            return Err(Error::param(
                "half_width",
                format!("scan [{:.1}, {:.1}] µm leaves the grid [{lo:.1}, {hi:.1}] µm", along - self.half_width, along + self.half_width),
            ));
        }
        let coords: Vec<f64> = self.offsets().iter().map(|o| along + o).collect();
        let values = spec.line(self.axis, across, &coords);
        Profile::new(coords, values, Domain::Position)
    }
}

/// One observation plane of a sweep.
#[derive(Debug, Clone)]
pub struct ScanResult {
    pub z: f64,
    pub coincidences: Profile,
    pub singles: Profile,
    pub r_c: f64,
    pub r_s: f64,
    pub fwhm_c: Option<f64>,
    pub fwhm_s: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub planes: Vec<ScanResult>,
    pub warnings: Vec<String>,
}

impl Sweep {
    fn range(&self, tolerance: f64, pick: impl Fn(&ScanResult) -> Option<f64>) -> Result<f64> {
        let planes: Vec<(f64, f64)> = self.planes.iter().map(|p| (p.z, pick(p).unwrap_or(f64::INFINITY))).collect();
        nondiffracting_range(&planes, tolerance)
    }

    pub fn heralded_range(&self, tolerance: f64) -> Result<f64> {
        self.range(tolerance, |p| p.fwhm_c)
    }

    pub fn singles_range(&self, tolerance: f64) -> Result<f64> {
        self.range(tolerance, |p| p.fwhm_s)
    }
}

/// Coincidence and singles scans at each z past `train` (planes strictly
/// increasing). Singles use `acceptance`, by default
/// [`PumpState::singles_acceptance`].
pub fn z_sweep(
    pump: &PumpState,
    herald: &HeraldSpec,
    acceptance: Option<&HeraldSpec>,
    train: &OpticalTrain,
    z_list: &[f64],
    scan: &ScanSpec,
) -> Result<Sweep> {
    if z_list.is_empty() {
        return Err(Error::param("z_list", "no planes"));
    }
    if z_list.windows(2).any(|w| !(w[1] > w[0])) || z_list.iter().any(|z| !z.is_finite()) {
        return Err(Error::param("z_list", "planes must be finite and strictly increasing"));
    }
    check_signal_train(pump, train)?;
    let default_acceptance;
    let acceptance = match acceptance {
        Some(a) => a,
        None => {
            default_acceptance = pump.singles_acceptance()?;
            &default_acceptance
        }
    };
    let covariant = extend(train, 1.0)?.ray_matrix().is_some();
    let base = if covariant { Some(run_train(pump.field()?, train)?.output) } else { None };
    let mut planes = Vec::with_capacity(z_list.len());
    let mut warnings = Vec::new();
    for &z in z_list {
        let (heralded, singles, coverage) = match &base {
            Some(field) => {
                let lever = extend(train, z)?.ray_matrix().expect("covariant")[0][1];
                let at_z = if z == 0.0 {
                    field.clone()
                } else {
                    let p = propagate(field, z, train.wavelength(), PropagationModel::Paraxial)?;
                    if p.aliasing_risk() {
                        warnings.push(format!("aliasing risk propagating to z = {z} µm"));
                    }
                    p.field
                };
                let plane = SignalPlane::from_reference(at_z.intensity(), lever);
                let base = MapSpectrum::of(&plane.reference)?;
                let h = plane.mixed(pump, herald)?.expect("covariant");
                let s = plane.mixed(pump, acceptance)?.expect("covariant");
                let wider = acceptance.with_radius(1.25 * acceptance.aperture_radius_k())?;
                let w = base.blur(&wider.measure(true).scaled(lever));
                (h, s, Some(w))
            }
            None => {
                let full = extend(train, z)?;
                let h = MapSpectrum::of(&direct_mixture(pump, herald, &full)?)?;
                let s = MapSpectrum::of(&direct_mixture(pump, acceptance, &full)?)?;
                (h, s, None)
            }
        };
        let fiber = Blur::Disk {
            center: [0.0, 0.0],
            radius: scan.fiber_radius,
        };
        let heralded = heralded.blur(&fiber);
        let singles = singles.blur(&fiber);
        let h_map = heralded.to_map()?;
        let s_map = singles.to_map()?;
        if let Some(wide) = coverage {
            let change = relative_change(&s_map, &wide.blur(&fiber).to_map()?);
            if let Some(w) = coverage_warning(change, acceptance.aperture_radius_k()) {
                warnings.push(format!("z = {z} µm: {w}"));
            }
        }
        let coincidences = scan.sample(&heralded, &h_map)?;
        let singles = scan.sample(&singles, &s_map)?;
        planes.push(ScanResult {
            z,
            r_c: coincidences.max(),
            r_s: singles.max(),
            fwhm_c: fwhm(&coincidences).ok(),
            fwhm_s: fwhm(&singles).ok(),
            coincidences,
            singles,
        });
    }
    if !covariant {
        warnings.push("singles coverage diagnostic unavailable for this optical train".into());
    }
    Ok(Sweep { planes, warnings })
}

/// The position-space signal intensity at `z` sampled along a scan line
/// without any fiber averaging.
pub fn scan_profile(map: &RealMap, scan: &ScanSpec) -> Result<Profile> {
    scan.sample(&MapSpectrum::of(map)?, map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_pump() -> PumpState {
        let g = GridSpec::new(128, 10.0).unwrap();
        let p = crate::beams::BGParams::new(150.0, 0.05, 0.4).unwrap();
        PumpState::degenerate(crate::beams::bg_spectrum(&p, &g).unwrap(), 0.4).unwrap()
    }

    #[test]
    fn wavelengths_must_conserve_energy() {
        let s = small_pump().spectrum().clone();
        assert!(PumpState::new(s.clone(), 0.4, 0.8, 0.8).is_ok());
        assert!(PumpState::new(s.clone(), 0.4, 0.7, 0.9).is_err());
        assert!(PumpState::new(s.clone(), 0.4, 0.7, 0.4 * 0.7 / 0.3).is_ok());
        assert!(PumpState::degenerate(s.to_position().unwrap(), 0.4).is_err());
    }

    #[test]
    fn herald_validation() {
        assert!(HeraldSpec::new([0.0, 0.0], -1.0, HeraldSampling::default()).is_err());
        assert!(HeraldSpec::new([0.0, 0.0], 1.0, HeraldSampling::Polar { n_radial: 0, n_azimuthal: 4 }).is_err());
        let h = HeraldSpec::new([0.01, 0.0], 0.002, HeraldSampling::default()).unwrap();
        let area: f64 = h.nodes().iter().map(|n| n.1).sum();
        assert!((area - PI * 4e-6).abs() < 1e-12 * PI * 4e-6);
        assert_eq!(h.nodes().len(), 96);
        assert_eq!(HeraldSpec::point([0.0, 0.0]).unwrap().nodes().len(), 1);
    }

    #[test]
    fn fiber_radius_conversion() {
        let r = HeraldSpec::fiber_radius_k(100.0, 2.0 * PI / 0.812, 1e5);
        assert!((r - 7.7377e-3).abs() < 1e-6);
    }

    #[test]
    fn guard_counts_lost_energy() {
        let pump = small_pump();
        let guard = pump.guard();
        assert_eq!(guard.lost_fraction([0.0, 0.0]), 0.0);
        let dk = pump.grid().dk();
        assert!(guard.lost_fraction([64.0 * dk, 0.0]) > 0.3);
        assert_eq!(guard.lost_fraction([200.0 * dk, 0.0]), 1.0);
        assert!(matches!(conditional_spectrum(&pump, [60.0 * dk, 0.0]), Err(Error::ShiftOverflow { .. })));
    }

    #[test]
    fn jinc_limits() {
        assert_eq!(jinc(0.0), 1.0);
        assert!((jinc(1e-3) - 2.0 * bessel_j1(1e-3) / 1e-3).abs() < 1e-14);
    }

    #[test]
    fn blur_by_single_point_translates() {
        let g = GridSpec::new(64, 1.0).unwrap();
        let map = RealMap::new(g, Domain::Position, (0..g.len()).map(|i| (-(g.x(i % 64) - 3.0).powi(2) / 20.0 - g.x(i / 64).powi(2) / 30.0).exp()).collect()).unwrap();
        let moved = MapSpectrum::of(&map).unwrap().blur(&Blur::Points(vec![([4.0, -2.0], 1.0)])).to_map().unwrap();
        // I(ρ + d): the peak moves from (3, 0) to (−1, 2)
        for (ix, iy) in [(30, 33), (31, 34), (28, 30)] {
            let want = map.at(ix + 4, iy - 2);
            assert!((moved.at(ix, iy) - want).abs() < 1e-12);
        }
        let momentum = RealMap::new(g, Domain::Momentum, map.values().to_vec()).unwrap();
        let kmoved = MapSpectrum::of(&momentum).unwrap().blur(&Blur::Points(vec![([4.0 * g.dk(), -2.0 * g.dk()], 1.0)])).to_map().unwrap();
        for (ix, iy) in [(30, 33), (31, 34)] {
            assert!((kmoved.at(ix, iy) - momentum.at(ix + 4, iy - 2)).abs() < 1e-12);
        }
    }

    #[test]
    fn line_matches_grid_samples() {
        let g = GridSpec::new(64, 2.0).unwrap();
        let map = RealMap::new(g, Domain::Position, (0..g.len()).map(|i| (-(g.x(i % 64) - 6.0).powi(2) / 50.0 - (g.x(i / 64) + 4.0).powi(2) / 80.0).exp()).collect()).unwrap();
        let spec = MapSpectrum::of(&map).unwrap();
        let ys: Vec<f64> = (20..40).map(|j| g.x(j)).collect();
        let line = spec.line(Axis::Y, g.x(35), &ys);
        for (j, v) in (20..40).zip(&line) {
            assert!((v - map.at(35, j)).abs() < 1e-12);
        }
        let xs: Vec<f64> = (20..40).map(|j| g.x(j)).collect();
        let line = spec.line(Axis::X, g.x(30), &xs);
        for (j, v) in (20..40).zip(&line) {
            assert!((v - map.at(j, 30)).abs() < 1e-12);
        }
    }

    #[test]
    fn scan_offsets_are_symmetric() {
        let s = ScanSpec::new(25.0, Axis::Y, 100.0, 5.0).unwrap();
        let o = s.offsets();
        assert_eq!(o.len(), 41);
        assert_eq!(o[0], -100.0);
        assert_eq!(o[40], 100.0);
        assert!(ScanSpec::new(0.0, Axis::Y, 1.0, 1.0).is_err());
    }
}
