//! Metrology on sampled maps and 1-D profiles.

use crate::error::{Error, Result};
use crate::field::RealMap;
use crate::grid::Domain;

/// Sampled 1-D curve with strictly increasing coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    coords: Vec<f64>,
    values: Vec<f64>,
    domain: Domain,
}

impl Profile {
    pub fn new(coords: Vec<f64>, values: Vec<f64>, domain: Domain) -> Result<Self> {
        if coords.len() != values.len() {
            return Err(Error::param("values", format!("{} values for {} coordinates", values.len(), coords.len())));
        }
        if coords.is_empty() {
            return Err(Error::Degenerate("empty profile".into()));
        }
        if let Some(i) = coords.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::param("coords", format!("not strictly increasing at index {}", i + 1)));
        }
        if let Some(i) = coords.iter().chain(&values).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i % coords.len()));
        }
        Ok(Self { coords, values, domain })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::MIN, f64::max)
    }

    /// Index of the first global maximum.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }
}

/// Azimuthal average with a per-bin flag marking interpolated (empty) bins.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub profile: Profile,
    pub interpolated: Vec<bool>,
}

/// Azimuthal mean of `map` in `n_bins` rings of one grid pitch about `center`.
pub fn radial_profile(map: &RealMap, center: [f64; 2], n_bins: usize) -> Result<RadialProfile> {
    radial_profile_binned(map, center, n_bins, map.pitch())
}

/// As [`radial_profile`] with an explicit bin width. Each bin's coordinate is
/// the mean radius of its samples; empty bins sit at the bin center with a
/// linearly interpolated value.
pub fn radial_profile_binned(map: &RealMap, center: [f64; 2], n_bins: usize, width: f64) -> Result<RadialProfile> {
    if n_bins < 8 {
        return Err(Error::param("n_bins", format!("{n_bins} < 8")));
    }
    if !(width > 0.0) {
        return Err(Error::param("width", "bin width must be positive"));
    }
    let g = map.grid();
    let domain = map.domain();
    let lo = g.coord(0, domain);
    let hi = g.max_coord(domain);
    if !(center[0] >= lo && center[0] <= hi && center[1] >= lo && center[1] <= hi) {
        return Err(Error::param("center", format!("({}, {}) outside the map", center[0], center[1])));
    }
    let n = g.n();
    let mut sum = vec![0.0; n_bins];
    let mut rsum = vec![0.0; n_bins];
    let mut count = vec![0usize; n_bins];
    for iy in 0..n {
        let y = g.coord(iy, domain) - center[1];
        for ix in 0..n {
            let x = g.coord(ix, domain) - center[0];
            let r = x.hypot(y);
            let b = (r / width) as usize;
            if b < n_bins {
                sum[b] += map.at(ix, iy);
                rsum[b] += r;
                count[b] += 1;
            }
        }
    }
    let mut coords = Vec::with_capacity(n_bins);
    let mut values = Vec::with_capacity(n_bins);
    let mut interpolated = Vec::with_capacity(n_bins);
    for b in 0..n_bins {
        if count[b] > 0 {
            coords.push(rsum[b] / count[b] as f64);
            values.push(sum[b] / count[b] as f64);
            interpolated.push(false);
        } else {
            coords.push((b as f64 + 0.5) * width);
            values.push(f64::NAN);
            interpolated.push(true);
        }
    }
    fill_gaps(&coords, &mut values);
    Ok(RadialProfile {
        profile: Profile::new(coords, values, domain)?,
        interpolated,
    })
}

fn fill_gaps(coords: &[f64], values: &mut [f64]) {
    let known: Vec<usize> = (0..values.len()).filter(|&i| !values[i].is_nan()).collect();
    if known.is_empty() {
        values.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    for i in 0..values.len() {
        if !values[i].is_nan() {
            continue;
        }
        let right = known.iter().position(|&k| k > i);
        values[i] = match right {
            None => values[*known.last().unwrap()],
            Some(0) => values[known[0]],
            Some(p) => {
                let (a, b) = (known[p - 1], known[p]);
                let t = (coords[i] - coords[a]) / (coords[b] - coords[a]);
                values[a] + t * (values[b] - values[a])
            }
        };
    }
}

/// Vertex abscissa of the parabola through three points.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> f64 {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let curvature = (d2 - d1) / (x[2] - x[0]);
    if curvature >= 0.0 {
        return x[1];
    }
    let v = 0.5 * (x[0] + x[1]) - d1 / (2.0 * curvature);
    v.clamp(x[0], x[2])
}

/// Ring parameters extracted from a momentum map.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusFit {
    pub kt_fit: f64,
    /// Full width at 1/e² of the radial intensity.
    pub delta_k: f64,
    pub w0_fit: f64,
    pub center: [f64; 2],
    /// RMS deviation from a Gaussian ring model, relative to the peak.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnnulusOutcome {
    Annulus(AnnulusFit),
    NoAnnulus { center: [f64; 2], reason: String },
}

impl AnnulusOutcome {
    pub fn fit(&self) -> Option<&AnnulusFit> {
        match self {
            AnnulusOutcome::Annulus(f) => Some(f),
            AnnulusOutcome::NoAnnulus { .. } => None,
        }
    }
}

/// Bins per grid pitch used by the ring fit.
const FIT_OVERSAMPLING: f64 = 4.0;

/// Locate the ring about the map centroid and measure its radius and width.
pub fn annulus_fit(map: &RealMap) -> Result<AnnulusOutcome> {
    let center = map.centroid()?;
    let g = map.grid();
    let domain = map.domain();
    let reach = (g.max_coord(domain) - center[0].abs().max(center[1].abs())).max(0.0);
    let width = map.pitch() / FIT_OVERSAMPLING;
    let n_bins = ((reach / width) as usize).max(8);
    let radial = radial_profile_binned(map, center, n_bins, width)?;
    let (r, v) = (radial.profile.coords(), radial.profile.values());
    let i = radial.profile.argmax();
    if i == 0 {
        return Ok(AnnulusOutcome::NoAnnulus {
            center,
            reason: "radial maximum at the center".into(),
        });
    }
    if i + 1 == r.len() {
        return Ok(AnnulusOutcome::NoAnnulus {
            center,
            reason: "radial maximum at the map edge".into(),
        });
    }
    let kt = parabola_vertex([r[i - 1], r[i], r[i + 1]], [v[i - 1], v[i], v[i + 1]]);
    let peak = v[i];
    let level = peak * (-2.0f64).exp();
    let outer = (i..r.len() - 1).find(|&j| v[j] >= level && v[j + 1] < level).map(|j| lerp_cross(r, v, j, level));
    let inner = (1..=i).rev().find(|&j| v[j] >= level && v[j - 1] < level).map(|j| lerp_cross(r, v, j - 1, level));
    let Some(outer) = outer else {
        return Ok(AnnulusOutcome::NoAnnulus {
            center,
            reason: "no outer 1/e² crossing inside the map".into(),
        });
    };
    let delta_k = match inner {
        Some(inner) => outer - inner,
        None => 2.0 * (outer - kt),
    };
    if !(delta_k > 0.0) {
        return Err(Error::Degenerate("annulus width is not positive".into()));
    }
    let mut sq = 0.0;
    let mut count = 0usize;
    for (&rj, &vj) in r.iter().zip(v) {
        if (rj - kt).abs() <= delta_k {
            let model = peak * (-8.0 * (rj - kt).powi(2) / (delta_k * delta_k)).exp();
            sq += (vj - model).powi(2);
            count += 1;
        }
    }
    let residual = if count > 0 { (sq / count as f64).sqrt() / peak } else { 0.0 };
    Ok(AnnulusOutcome::Annulus(AnnulusFit {
        kt_fit: kt,
        delta_k,
        w0_fit: 4.0 / delta_k,
        center,
        residual,
    }))
}

/// Abscissa where the segment (j, j+1) crosses `level`.
fn lerp_cross(x: &[f64], y: &[f64], j: usize, level: f64) -> f64 {
    x[j] + (y[j] - level) / (y[j] - y[j + 1]) * (x[j + 1] - x[j])
}

/// Full width at half maximum about the global peak, with linearly
/// interpolated crossings.
pub fn fwhm(profile: &Profile) -> Result<f64> {
    let (x, y) = (profile.coords(), profile.values());
    let i = profile.argmax();
    let peak = y[i];
    if !(peak > 0.0) {
        return Err(Error::Degenerate("profile has no positive peak".into()));
    }
    if i == 0 || i + 1 == y.len() {
        return Err(Error::Degenerate("peak at the profile boundary".into()));
    }
    let half = 0.5 * peak;
    let right = (i..y.len() - 1).find(|&j| y[j + 1] < half);
    let left = (1..=i).rev().find(|&j| y[j - 1] < half);
    match (left, right) {
        (Some(l), Some(r)) => {
            let xl = x[l] - (y[l] - half) / (y[l] - y[l - 1]) * (x[l] - x[l - 1]);
            let xr = lerp_cross(x, y, r, half);
            Ok(xr - xl)
        }
        _ => Err(Error::Degenerate("half-maximum crossing beyond the profile boundary".into())),
    }
}

/// Non-diffracting range `magnification² · w0 · k_signal / k_t`.
pub fn z_max_formula(w0: f64, k_signal: f64, kt: f64, magnification: f64) -> Result<f64> {
    if !(kt > 0.0) {
        return Err(Error::param("kt", format!("{kt} must be positive")));
    }
    Ok(magnification * magnification * w0 * k_signal / kt)
}

/// Largest sampled z up to which every width stays within
/// `(1 + tolerance)` of the width at z = 0. `planes` holds `(z, fwhm)`.
pub fn nondiffracting_range(planes: &[(f64, f64)], tolerance: f64) -> Result<f64> {
    if planes.len() < 3 {
        return Err(Error::param("planes", format!("need at least 3 planes, have {}", planes.len())));
    }
    let mut sorted = planes.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let w0 = sorted
        .iter()
        .find(|p| p.0 == 0.0)
        .map(|p| p.1)
        .ok_or_else(|| Error::param("planes", "no z = 0 plane"))?;
    let limit = (1.0 + tolerance) * w0;
    let mut reach = 0.0;
    for &(z, w) in sorted.iter().filter(|p| p.0 >= 0.0) {
        if w > limit {
            break;
        }
        reach = z;
    }
    Ok(reach)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn gaussian_profile(w: f64, shift: f64) -> Profile {
        let x: Vec<f64> = (-400..=400).map(|i| i as f64 * 0.5 + shift).collect();
        let y = x.iter().map(|&x| (-2.0 * (x - shift).powi(2) / (w * w)).exp()).collect();
        Profile::new(x, y, Domain::Position).unwrap()
    }

    #[test]
    fn profile_validation() {
        assert!(Profile::new(vec![0.0, 0.0], vec![1.0, 1.0], Domain::Position).is_err());
        assert!(Profile::new(vec![0.0, 1.0], vec![1.0], Domain::Position).is_err());
        assert!(Profile::new(vec![0.0, 1.0], vec![1.0, f64::NAN], Domain::Position).is_err());
    }

    #[test]
    fn gaussian_fwhm() {
        let w = fwhm(&gaussian_profile(100.0, 0.0)).unwrap();
        assert!((w - 117.741).abs() < 0.01, "{w}");
    }

    #[test]
    fn single_sample_is_one_bin_wide() {
        let p = Profile::new(vec![0.0, 1.0, 2.0], vec![0.0, 3.0, 0.0], Domain::Position).unwrap();
        assert_eq!(fwhm(&p).unwrap(), 1.0);
        let edge = Profile::new(vec![0.0, 1.0, 2.0], vec![3.0, 1.0, 0.0], Domain::Position).unwrap();
        assert!(fwhm(&edge).is_err());
    }

    #[test]
    fn z_max_arithmetic() {
        let z = z_max_formula(260.0, 2.0 * std::f64::consts::PI / 0.812, 0.046, 3.0).unwrap();
        assert!((z - 393_600.0).abs() < 500.0, "{z}");
        assert!(z_max_formula(1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn range_rules() {
        let planes = [(0.0, 1.0), (1.0, 1.1), (2.0, 1.25), (3.0, 1.0)];
        assert_eq!(nondiffracting_range(&planes, 0.2).unwrap(), 1.0);
        assert_eq!(nondiffracting_range(&[(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)], 0.2).unwrap(), 2.0);
        assert!(nondiffracting_range(&[(1.0, 1.0), (2.0, 1.0), (3.0, 1.0)], 0.2).is_err());
        assert!(nondiffracting_range(&[(0.0, 1.0), (2.0, 1.0)], 0.2).is_err());
    }

    #[test]
    fn radial_profile_rejects_outside_center() {
        let g = GridSpec::new(16, 1.0).unwrap();
        let m = RealMap::new(g, Domain::Position, vec![1.0; 256]).unwrap();
        assert!(radial_profile(&m, [100.0, 0.0], 8).is_err());
        assert!(radial_profile(&m, [0.0, 0.0], 4).is_err());
        let rp = radial_profile(&m, [0.0, 0.0], 8).unwrap();
        assert!(rp.profile.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn parabola_vertex_exact_for_quadratics() {
        let f = |x: f64| -(x - 1.3).powi(2) + 4.0;
        let v = parabola_vertex([0.5, 1.0, 2.5], [f(0.5), f(1.0), f(2.5)]);
        assert!((v - 1.3).abs() < 1e-12);
    }
}
