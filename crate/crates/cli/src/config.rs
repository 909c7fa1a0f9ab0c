//! Run configuration: an INI-like text format with unit-annotated values.
//!
//! ```text
//! preset = paper-defaults      # optional; later sections override it
//!
//! [grid]
//! n = 1024
//! dx = 14 um
//!
//! [train]
//! element = fourier, f = 10 cm, tap = FP1
//! ```
//!
//! Every key is checked against its section; `[train]` is the only section
//! that accepts a repeated key (`element`).

use std::collections::BTreeMap;
use std::fmt;

use bessel_herald::beams::{AxiconSpec, BGParams};
use bessel_herald::optics::{Element, PropagationModel};
use bessel_herald::spdc::{Axis, HeraldSampling};
use bessel_herald::GridSpec;

use crate::units::{format_quantity, parse_number, parse_quantity, Dimension};

pub const DEFAULT_PRESET: &str = "\
# Bessel-Gauss pump at 406 nm, degenerate 812 nm photon pairs.
[grid]
n = 1024
dx = 14 um

[pump]
mode = bg-closed-form
wavelength = 406 nm
w0 = 1850 um
kt = 0.046 rad/um
sheet_z_max = 100 cm
sheet_planes = 51

[train]
element = fourier, f = 10 cm, tap = FP1
element = fourier, f = 30 cm, tap = FP2

[herald]
k_center = auto
fiber_diameter = 200 um
focal_length = 10 cm
sampling = polar 6x16

[singles]
acceptance = auto
sampling = uniform-disk

[scan]
z = 0 cm, 2.5 cm, 5 cm, 10 cm, 15 cm, 20 cm, 25 cm, 30 cm, 35 cm, 40 cm
fp1_fiber_diameter = 200 um
fiber_diameter = 50 um
axis = y
half_width = 10 mm
step = 5 um
range_tolerance = 0.2

[output]
directory = run
formats = cfld, csv, pgm
";

pub const PRESETS: &[(&str, &str)] = &[("paper-defaults", DEFAULT_PRESET)];

const SECTIONS: &[&str] = &["grid", "pump", "train", "herald", "singles", "scan", "output"];

/// Where a setting came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Preset,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(l) => write!(f, "line {l}"),
            Origin::Preset => f.write_str("preset"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub origin: Option<Origin>,
    pub section: Option<String>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn new(message: impl Into<String>) -> Self {
        Self {
            origin: None,
            section: None,
            key: None,
            message: message.into(),
        }
    }

    fn at(origin: Origin, message: impl Into<String>) -> Self {
        Self {
            origin: Some(origin),
            ..Self::new(message)
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(o) = self.origin {
            write!(f, "{o}: ")?;
        }
        if let Some(s) = &self.section {
            write!(f, "[{s}] ")?;
        }
        if let Some(k) = &self.key {
            write!(f, "{k}: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    key: String,
    value: String,
    origin: Origin,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Document {
    preset: Option<Entry>,
    sections: BTreeMap<String, (Origin, Vec<Entry>)>,
}

fn strip_comment(line: &str) -> &str {
    line.split_once('#').map_or(line, |(a, _)| a).trim()
}

fn parse_document(text: &str, from_preset: bool) -> Result<Document, ConfigError> {
    let mut doc = Document::default();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let origin = if from_preset { Origin::Preset } else { Origin::Line(i + 1) };
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::at(origin, format!("malformed section header '{line}'")))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::at(
                    origin,
                    format!("unknown section [{name}] (expected one of {})", SECTIONS.join(", ")),
                ));
            }
            if doc.sections.contains_key(name) {
                return Err(ConfigError::at(origin, format!("section [{name}] appears twice")));
            }
            doc.sections.insert(name.to_string(), (origin, Vec::new()));
            current = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::at(origin, format!("expected 'key = value', found '{line}'")))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || !key.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_') {
            return Err(ConfigError::at(origin, format!("invalid key '{key}'")));
        }
        if value.is_empty() {
            return Err(ConfigError::at(origin, format!("key '{key}' has no value")));
        }
        let entry = Entry {
            key: key.to_string(),
            value: value.to_string(),
            origin,
        };
        match &current {
            None => {
                if key != "preset" {
                    return Err(ConfigError::at(origin, format!("key '{key}' must be inside a section")));
                }
                if doc.preset.is_some() {
                    return Err(ConfigError::at(origin, "preset given twice"));
                }
                doc.preset = Some(entry);
            }
            Some(section) => {
                let entries = &mut doc.sections.get_mut(section).expect("inserted").1;
                if key != "element" && entries.iter().any(|e| e.key == key) {
                    return Err(ConfigError {
                        section: Some(section.clone()),
                        key: Some(key.to_string()),
                        ..ConfigError::at(origin, "key given twice")
                    });
                }
                entries.push(entry);
            }
        }
    }
    Ok(doc)
}

/// Apply `user` on top of `base`: keys replace keys, and a user `[train]`
/// with any element replaces the whole element list.
fn overlay(mut base: Document, user: Document) -> Document {
    for (name, (origin, entries)) in user.sections {
        let slot = base.sections.entry(name.clone()).or_insert((origin, Vec::new()));
        slot.0 = origin;
        if name == "train" && entries.iter().any(|e| e.key == "element") {
            slot.1.retain(|e| e.key != "element");
        }
        for e in entries {
            match slot.1.iter_mut().find(|old| old.key == e.key && e.key != "element") {
                Some(old) => *old = e,
                None => slot.1.push(e),
            }
        }
    }
    base
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub n: usize,
    pub dx: f64,
}

impl GridConfig {
    pub fn spec(&self) -> GridSpec {
        GridSpec::new(self.n, self.dx).expect("validated")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxiconAngle {
    Apex(f64),
    Base(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PumpMode {
    BgClosedForm {
        w0: f64,
        kt: f64,
    },
    /// Gaussian laser through an axicon, then an ideal relay of
    /// `magnification` onto the crystal.
    AxiconChain {
        laser_waist: f64,
        angle: AxiconAngle,
        refractive_index: f64,
        magnification: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpConfig {
    pub wavelength: f64,
    /// `None` means degenerate pairs at twice the pump wavelength.
    pub signal_wavelength: Option<f64>,
    pub mode: PumpMode,
    pub sheet_z_max: f64,
    pub sheet_planes: usize,
}

impl PumpConfig {
    pub fn signal_wavelength(&self) -> f64 {
        self.signal_wavelength.unwrap_or(2.0 * self.wavelength)
    }

    pub fn idler_wavelength(&self) -> f64 {
        let ls = self.signal_wavelength();
        1.0 / (1.0 / self.wavelength - 1.0 / ls)
    }

    pub fn axicon(&self) -> Option<AxiconSpec> {
        match self.mode {
            PumpMode::AxiconChain { angle, refractive_index, .. } => Some(
                match angle {
                    AxiconAngle::Apex(a) => AxiconSpec::new(a, refractive_index),
                    AxiconAngle::Base(a) => AxiconSpec::from_base_angle(a, refractive_index),
                }
                .expect("validated"),
            ),
            PumpMode::BgClosedForm { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainElement {
    pub element: Element,
    pub tap: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KCenter {
    /// The pump ring peak on the +kx axis.
    Auto,
    Fixed([f64; 2]),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeraldConfig {
    pub k_center: KCenter,
    pub fiber_diameter: f64,
    pub focal_length: f64,
    pub sampling: HeraldSampling,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Acceptance {
    Auto,
    Radius(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinglesConfig {
    pub acceptance: Acceptance,
    pub sampling: HeraldSampling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub z: Vec<f64>,
    pub fp1_fiber_diameter: f64,
    pub fiber_diameter: f64,
    pub axis: Axis,
    pub half_width: f64,
    pub step: f64,
    pub range_tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub cfld: bool,
    pub csv: bool,
    pub pgm: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: String,
    pub formats: Formats,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: "run".into(),
            formats: Formats {
                cfld: true,
                csv: true,
                pgm: true,
            },
        }
    }
}

/// A fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: Option<GridConfig>,
    pub pump: Option<PumpConfig>,
    pub train: Option<Vec<TrainElement>>,
    pub herald: Option<HeraldConfig>,
    pub singles: Option<SinglesConfig>,
    pub scan: Option<ScanConfig>,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    PumpSim,
    SpdcSim,
    Sweep,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::PumpSim => "pump-sim",
            Scenario::SpdcSim => "spdc-sim",
            Scenario::Sweep => "sweep",
        }
    }
}

/// Typed access to one section's entries; flags anything left unread.
struct Reader<'a> {
    section: &'static str,
    origin: Origin,
    entries: &'a [Entry],
    used: Vec<bool>,
}

impl<'a> Reader<'a> {
    fn new(section: &'static str, origin: Origin, entries: &'a [Entry]) -> Self {
        Self {
            section,
            origin,
            entries,
            used: vec![false; entries.len()],
        }
    }

    fn err(&self, e: &Entry, message: impl Into<String>) -> ConfigError {
        ConfigError {
            origin: Some(e.origin),
            section: Some(self.section.into()),
            key: Some(e.key.clone()),
            message: message.into(),
        }
    }

    fn missing(&self, key: &str) -> ConfigError {
        ConfigError {
            origin: Some(self.origin),
            section: Some(self.section.into()),
            key: Some(key.into()),
            message: "required key is missing".into(),
        }
    }

    fn raw(&mut self, key: &str) -> Option<&'a Entry> {
        let i = self.entries.iter().position(|e| e.key == key)?;
        self.used[i] = true;
        Some(&self.entries[i])
    }

    fn all(&mut self, key: &str) -> Vec<&'a Entry> {
        let mut out = Vec::new();
        for (i, e) in self.entries.iter().enumerate() {
            if e.key == key {
                self.used[i] = true;
                out.push(e);
            }
        }
        out
    }

    fn opt<T>(&mut self, key: &str, f: impl FnOnce(&str) -> Result<T, String>) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => f(&e.value).map(Some).map_err(|m| self.err(e, m)),
        }
    }

    fn req<T>(&mut self, key: &str, f: impl FnOnce(&str) -> Result<T, String>) -> Result<T, ConfigError> {
        self.opt(key, f)?.ok_or_else(|| self.missing(key))
    }

    /// Check a derived value against its source entry.
    fn check(&mut self, key: &str, ok: bool, message: impl Into<String>) -> Result<(), ConfigError> {
        if ok {
            return Ok(());
        }
        match self.entries.iter().find(|e| e.key == key) {
            Some(e) => Err(self.err(e, message)),
            None => Err(ConfigError {
                key: Some(key.into()),
                ..self.missing(key)
            }
            .with_message(message)),
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.iter().zip(&self.used).find(|(_, u)| !**u) {
            Some((e, _)) => Err(self.err(e, "unknown key")),
            None => Ok(()),
        }
    }
}

impl ConfigError {
    fn with_message(mut self, message: impl Into<String>) -> Self {
        self.message = message.into();
        self
    }
}

fn quantity(dim: Dimension) -> impl Fn(&str) -> Result<f64, String> {
    move |v| parse_quantity(v, dim).map_err(|e| e.0)
}

fn number(v: &str) -> Result<f64, String> {
    parse_number(v).map_err(|e| e.0)
}

fn count(v: &str) -> Result<usize, String> {
    v.trim().parse::<usize>().map_err(|_| format!("'{v}' is not a non-negative integer"))
}

fn sampling(v: &str) -> Result<HeraldSampling, String> {
    let v = v.trim();
    if v == "uniform-disk" {
        return Ok(HeraldSampling::UniformDisk);
    }
    let dims = v
        .strip_prefix("polar")
        .map(str::trim)
        .and_then(|d| d.split_once('x'))
        .ok_or_else(|| format!("'{v}' is neither 'polar <radial>x<azimuthal>' nor 'uniform-disk'"))?;
    let n_radial = count(dims.0)?;
    let n_azimuthal = count(dims.1)?;
    if n_radial == 0 || n_azimuthal == 0 {
        return Err("quadrature node counts must be at least 1".into());
    }
    Ok(HeraldSampling::Polar { n_radial, n_azimuthal })
}

fn format_sampling(s: HeraldSampling) -> String {
    match s {
        HeraldSampling::UniformDisk => "uniform-disk".into(),
        HeraldSampling::Polar { n_radial, n_azimuthal } => format!("polar {n_radial}x{n_azimuthal}"),
    }
}

fn axis(v: &str) -> Result<Axis, String> {
    match v.trim() {
        "x" => Ok(Axis::X),
        "y" => Ok(Axis::Y),
        other => Err(format!("axis must be x or y, found '{other}'")),
    }
}

fn read_grid(r: &mut Reader) -> Result<GridConfig, ConfigError> {
    let n = r.req("n", count)?;
    let dx = r.req("dx", quantity(Dimension::Length))?;
    if let Err(e) = GridSpec::new(n, dx) {
        let key = if n >= 16 && n.is_power_of_two() { "dx" } else { "n" };
        r.check(key, false, e.to_string())?;
    }
    Ok(GridConfig { n, dx })
}

fn read_pump(r: &mut Reader) -> Result<PumpConfig, ConfigError> {
    let wavelength = r.req("wavelength", quantity(Dimension::Length))?;
    r.check("wavelength", wavelength > 0.0, "must be positive")?;
    let signal_wavelength = r.opt("signal_wavelength", quantity(Dimension::Length))?;
    if let Some(ls) = signal_wavelength {
        r.check("signal_wavelength", ls > wavelength, "must exceed the pump wavelength")?;
    }
    let sheet_z_max = r.opt("sheet_z_max", quantity(Dimension::Length))?.unwrap_or(1e6);
    r.check("sheet_z_max", sheet_z_max > 0.0, "must be positive")?;
    let sheet_planes = r.opt("sheet_planes", count)?.unwrap_or(51);
    r.check("sheet_planes", sheet_planes >= 2, "at least 2 planes")?;
    let mode = match r.req("mode", |v| Ok(v.to_string()))?.as_str() {
        "bg-closed-form" => {
            let w0 = r.req("w0", quantity(Dimension::Length))?;
            let kt = r.req("kt", quantity(Dimension::Wavenumber))?;
            if let Err(e) = BGParams::new(w0, kt, wavelength) {
                let key = if w0 > 0.0 { "kt" } else { "w0" };
                r.check(key, false, e.to_string())?;
            }
            PumpMode::BgClosedForm { w0, kt }
        }
        "axicon-chain" => {
            let laser_waist = r.req("laser_waist", quantity(Dimension::Length))?;
            r.check("laser_waist", laser_waist > 0.0, "must be positive")?;
            let apex = r.opt("axicon_apex", quantity(Dimension::Angle))?;
            let base = r.opt("axicon_base_angle", quantity(Dimension::Angle))?;
            let refractive_index = r.req("refractive_index", number)?;
            let (angle, key, spec) = match (apex, base) {
                (Some(a), None) => (AxiconAngle::Apex(a), "axicon_apex", AxiconSpec::new(a, refractive_index)),
                (None, Some(b)) => (AxiconAngle::Base(b), "axicon_base_angle", AxiconSpec::from_base_angle(b, refractive_index)),
                (Some(_), Some(_)) => return Err(r.check("axicon_base_angle", false, "give axicon_apex or axicon_base_angle, not both").unwrap_err()),
                (None, None) => return Err(r.missing("axicon_apex")),
            };
            if let Err(e) = spec {
                r.check(key, false, e.to_string())?;
            }
            let magnification = r.req("magnification", number)?;
            r.check("magnification", magnification > 0.0, "must be positive")?;
            PumpMode::AxiconChain {
                laser_waist,
                angle,
                refractive_index,
                magnification,
            }
        }
        other => {
            return Err(r
                .check("mode", false, format!("unknown mode '{other}' (bg-closed-form or axicon-chain)"))
                .unwrap_err())
        }
    };
    Ok(PumpConfig {
        wavelength,
        signal_wavelength,
        mode,
        sheet_z_max,
        sheet_planes,
    })
}

/// `kind, key = value, ...` for one `element` line.
fn parse_element(text: &str) -> Result<TrainElement, String> {
    let mut parts = text.split(',').map(str::trim);
    let kind = parts.next().unwrap_or_default();
    let mut fields: Vec<(&str, &str)> = Vec::new();
    for p in parts {
        let (k, v) = p.split_once('=').ok_or_else(|| format!("expected 'key = value' in element, found '{p}'"))?;
        let (k, v) = (k.trim(), v.trim());
        if fields.iter().any(|(old, _)| *old == k) {
            return Err(format!("element key '{k}' given twice"));
        }
        fields.push((k, v));
    }
    let mut used = vec![false; fields.len()];
    let mut get = |key: &str| -> Option<&str> {
        let i = fields.iter().position(|(k, _)| *k == key)?;
        used[i] = true;
        Some(fields[i].1)
    };
    let length = |v: &str| parse_quantity(v, Dimension::Length).map_err(|e| e.0);
    fn need<'v>(key: &str, v: Option<&'v str>) -> Result<&'v str, String> {
        v.ok_or_else(|| format!("element needs '{key}'"))
    }
    let tap = get("tap").map(str::to_string);
    let element = match kind {
        "free-space" => {
            let z = length(need("z", get("z"))?)?;
            let model = match get("model").unwrap_or("paraxial") {
                "paraxial" => PropagationModel::Paraxial,
                "exact" => PropagationModel::Exact,
                m => return Err(format!("unknown propagation model '{m}'")),
            };
            Element::FreeSpace { z, model }
        }
        "lens" => Element::ThinLens {
            f: length(need("f", get("f"))?)?,
            radius: get("radius").map(length).transpose()?,
        },
        "aperture" => Element::CircularAperture {
            radius: length(need("radius", get("radius"))?)?,
        },
        "magnifier" => Element::IdealMagnifier {
            m: parse_number(need("m", get("m"))?).map_err(|e| e.0)?,
        },
        "fourier" => Element::FourierSystem {
            f: length(need("f", get("f"))?)?,
        },
        "axicon" => {
            let index = parse_number(need("index", get("index"))?).map_err(|e| e.0)?;
            let angle = |v: &str| parse_quantity(v, Dimension::Angle).map_err(|e| e.0);
            let spec = match (get("apex"), get("base_angle")) {
                (Some(a), None) => AxiconSpec::new(angle(a)?, index),
                (None, Some(b)) => AxiconSpec::from_base_angle(angle(b)?, index),
                _ => return Err("axicon element needs exactly one of 'apex' or 'base_angle'".into()),
            };
            Element::Axicon(spec.map_err(|e| e.to_string())?)
        }
        other => {
            return Err(format!(
                "unknown element kind '{other}' (free-space, lens, aperture, magnifier, fourier, axicon)"
            ))
        }
    };
    if let Some(i) = used.iter().position(|u| !u) {
        return Err(format!("unknown key '{}' for {kind} element", fields[i].0));
    }
    if let Some(t) = &tap {
        if t.is_empty() || t.contains(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '-')) {
            return Err(format!("tap label '{t}' must be alphanumeric"));
        }
    }
    element.validate().map_err(|e| e.to_string())?;
    Ok(TrainElement { element, tap })
}

fn format_element(e: &TrainElement) -> String {
    let len = |v: f64| format_quantity(v, Dimension::Length);
    let mut s = match &e.element {
        Element::FreeSpace { z, model } => format!(
            "free-space, z = {}, model = {}",
            len(*z),
            match model {
                PropagationModel::Paraxial => "paraxial",
                PropagationModel::Exact => "exact",
            }
        ),
        Element::ThinLens { f, radius } => match radius {
            Some(r) => format!("lens, f = {}, radius = {}", len(*f), len(*r)),
            None => format!("lens, f = {}", len(*f)),
        },
        Element::CircularAperture { radius } => format!("aperture, radius = {}", len(*radius)),
        Element::IdealMagnifier { m } => format!("magnifier, m = {m}"),
        Element::FourierSystem { f } => format!("fourier, f = {}", len(*f)),
        Element::Axicon(a) => format!(
            "axicon, apex = {}, index = {}",
            format_quantity(a.apex_angle(), Dimension::Angle),
            a.refractive_index()
        ),
    };
    if let Some(t) = &e.tap {
        s.push_str(&format!(", tap = {t}"));
    }
    s
}

fn read_train(r: &mut Reader) -> Result<Vec<TrainElement>, ConfigError> {
    let entries = r.all("element");
    if entries.is_empty() {
        return Err(r.missing("element"));
    }
    let mut out = Vec::with_capacity(entries.len());
    for e in entries {
        let el = parse_element(&e.value).map_err(|m| r.err(e, m))?;
        if let Some(t) = &el.tap {
            if out.iter().any(|o: &TrainElement| o.tap.as_deref() == Some(t)) {
                return Err(r.err(e, format!("tap label '{t}' used twice")));
            }
        }
        out.push(el);
    }
    Ok(out)
}

fn read_herald(r: &mut Reader) -> Result<HeraldConfig, ConfigError> {
    let k_center = r.req("k_center", |v| {
        if v.trim() == "auto" {
            return Ok(KCenter::Auto);
        }
        let (a, b) = v.split_once(',').ok_or("expected 'auto' or '<kx>, <ky>' with units")?;
        Ok(KCenter::Fixed([quantity(Dimension::Wavenumber)(a)?, quantity(Dimension::Wavenumber)(b)?]))
    })?;
    let fiber_diameter = r.req("fiber_diameter", quantity(Dimension::Length))?;
    r.check("fiber_diameter", fiber_diameter >= 0.0, "must be ≥ 0")?;
    let focal_length = r.req("focal_length", quantity(Dimension::Length))?;
    r.check("focal_length", focal_length > 0.0, "must be positive")?;
    let sampling = r.opt("sampling", sampling)?.unwrap_or_default();
    Ok(HeraldConfig {
        k_center,
        fiber_diameter,
        focal_length,
        sampling,
    })
}

fn read_singles(r: &mut Reader) -> Result<SinglesConfig, ConfigError> {
    let acceptance = r
        .opt("acceptance", |v| {
            if v.trim() == "auto" {
                Ok(Acceptance::Auto)
            } else {
                let k = quantity(Dimension::Wavenumber)(v)?;
                if k > 0.0 {
                    Ok(Acceptance::Radius(k))
                } else {
                    Err("acceptance radius must be positive".into())
                }
            }
        })?
        .unwrap_or(Acceptance::Auto);
    let sampling = r.opt("sampling", sampling)?.unwrap_or(HeraldSampling::UniformDisk);
    Ok(SinglesConfig { acceptance, sampling })
}

fn read_scan(r: &mut Reader) -> Result<ScanConfig, ConfigError> {
    let z = r.req("z", |v| v.split(',').map(quantity(Dimension::Length)).collect::<Result<Vec<_>, _>>())?;
    r.check("z", z.windows(2).all(|w| w[1] > w[0]), "planes must be strictly increasing")?;
    let fp1_fiber_diameter = r.req("fp1_fiber_diameter", quantity(Dimension::Length))?;
    r.check("fp1_fiber_diameter", fp1_fiber_diameter >= 0.0, "must be ≥ 0")?;
    let fiber_diameter = r.req("fiber_diameter", quantity(Dimension::Length))?;
    r.check("fiber_diameter", fiber_diameter > 0.0, "must be positive")?;
    let axis = r.opt("axis", axis)?.unwrap_or(Axis::Y);
    let half_width = r.req("half_width", quantity(Dimension::Length))?;
    r.check("half_width", half_width > 0.0, "must be positive")?;
    let step = r.req("step", quantity(Dimension::Length))?;
    r.check("step", step > 0.0 && half_width / step <= 1e6, "must be positive and give at most 2e6 samples")?;
    let range_tolerance = r.opt("range_tolerance", number)?.unwrap_or(0.2);
    r.check("range_tolerance", range_tolerance > 0.0, "must be positive")?;
    Ok(ScanConfig {
        z,
        fp1_fiber_diameter,
        fiber_diameter,
        axis,
        half_width,
        step,
        range_tolerance,
    })
}

fn read_output(r: &mut Reader) -> Result<OutputConfig, ConfigError> {
    let directory = r.opt("directory", |v| Ok(v.to_string()))?.unwrap_or_else(|| "run".into());
    let formats = r
        .opt("formats", |v| {
            let mut f = Formats {
                cfld: false,
                csv: false,
                pgm: false,
            };
            for item in v.split(',').map(str::trim) {
                match item {
                    "cfld" => f.cfld = true,
                    "csv" => f.csv = true,
                    "pgm" => f.pgm = true,
                    other => return Err(format!("unknown format '{other}' (cfld, csv, pgm)")),
                }
            }
            Ok(f)
        })?
        .unwrap_or(OutputConfig::default().formats);
    Ok(OutputConfig { directory, formats })
}

fn section<T>(
    doc: &Document,
    name: &'static str,
    read: impl FnOnce(&mut Reader) -> Result<T, ConfigError>,
) -> Result<Option<T>, ConfigError> {
    let Some((origin, entries)) = doc.sections.get(name) else { return Ok(None) };
    let mut r = Reader::new(name, *origin, entries);
    let value = read(&mut r)?;
    r.finish()?;
    Ok(Some(value))
}

impl RunConfig {
    /// Parse configuration text, applying a preset if one is named.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let user = parse_document(text, false)?;
        let doc = match &user.preset {
            None => user,
            Some(p) => {
                let body = PRESETS
                    .iter()
                    .find(|(name, _)| *name == p.value)
                    .ok_or_else(|| {
                        ConfigError {
                            key: Some("preset".into()),
                            ..ConfigError::at(p.origin, format!("unknown preset '{}'", p.value))
                        }
                    })?
                    .1;
                overlay(parse_document(body, true)?, user)
            }
        };
        Ok(Self {
            grid: section(&doc, "grid", read_grid)?,
            pump: section(&doc, "pump", read_pump)?,
            train: section(&doc, "train", read_train)?,
            herald: section(&doc, "herald", read_herald)?,
            singles: section(&doc, "singles", read_singles)?,
            scan: section(&doc, "scan", read_scan)?,
            output: section(&doc, "output", read_output)?.unwrap_or_default(),
        })
    }

    /// Check that every block `scenario` reads is present.
    pub fn require(&self, scenario: Scenario) -> Result<(), ConfigError> {
        let mut needed = vec![("grid", self.grid.is_some()), ("pump", self.pump.is_some())];
        if scenario != Scenario::PumpSim {
            needed.extend([("train", self.train.is_some()), ("herald", self.herald.is_some()), ("scan", self.scan.is_some())]);
        }
        match needed.iter().find(|(_, present)| !present) {
            Some((name, _)) => Err(ConfigError {
                section: Some((*name).into()),
                ..ConfigError::new(format!("block required by {} is missing", scenario.name()))
            }),
            None => Ok(()),
        }
    }

    /// Canonical text of the resolved configuration; parsing it yields an
    /// equal `RunConfig`.
    pub fn render(&self) -> String {
        let len = |v: f64| format_quantity(v, Dimension::Length);
        let wn = |v: f64| format_quantity(v, Dimension::Wavenumber);
        let mut s = String::new();
        if let Some(g) = &self.grid {
            s += &format!("[grid]\nn = {}\ndx = {}\n\n", g.n, len(g.dx));
        }
        if let Some(p) = &self.pump {
            s += "[pump]\n";
            match p.mode {
                PumpMode::BgClosedForm { w0, kt } => {
                    s += &format!("mode = bg-closed-form\nw0 = {}\nkt = {}\n", len(w0), wn(kt));
                }
                PumpMode::AxiconChain {
                    laser_waist,
                    angle,
                    refractive_index,
                    magnification,
                } => {
                    s += &format!("mode = axicon-chain\nlaser_waist = {}\n", len(laser_waist));
                    s += &match angle {
                        AxiconAngle::Apex(a) => format!("axicon_apex = {}\n", format_quantity(a, Dimension::Angle)),
                        AxiconAngle::Base(a) => format!("axicon_base_angle = {}\n", format_quantity(a, Dimension::Angle)),
                    };
                    s += &format!("refractive_index = {refractive_index}\nmagnification = {magnification}\n");
                }
            }
            s += &format!("wavelength = {}\n", len(p.wavelength));
            if let Some(ls) = p.signal_wavelength {
                s += &format!("signal_wavelength = {}\n", len(ls));
            }
            s += &format!("sheet_z_max = {}\nsheet_planes = {}\n\n", len(p.sheet_z_max), p.sheet_planes);
        }
        if let Some(t) = &self.train {
            s += "[train]\n";
            for e in t {
                s += &format!("element = {}\n", format_element(e));
            }
            s += "\n";
        }
        if let Some(h) = &self.herald {
            let kc = match h.k_center {
                KCenter::Auto => "auto".to_string(),
                KCenter::Fixed([x, y]) => format!("{}, {}", wn(x), wn(y)),
            };
            s += &format!(
                "[herald]\nk_center = {kc}\nfiber_diameter = {}\nfocal_length = {}\nsampling = {}\n\n",
                len(h.fiber_diameter),
                len(h.focal_length),
                format_sampling(h.sampling)
            );
        }
        if let Some(si) = &self.singles {
            let acc = match si.acceptance {
                Acceptance::Auto => "auto".to_string(),
                Acceptance::Radius(k) => wn(k),
            };
            s += &format!("[singles]\nacceptance = {acc}\nsampling = {}\n\n", format_sampling(si.sampling));
        }
        if let Some(sc) = &self.scan {
            let z: Vec<String> = sc.z.iter().map(|&z| len(z)).collect();
            s += &format!(
                "[scan]\nz = {}\nfp1_fiber_diameter = {}\nfiber_diameter = {}\naxis = {}\nhalf_width = {}\nstep = {}\nrange_tolerance = {}\n\n",
                z.join(", "),
                len(sc.fp1_fiber_diameter),
                len(sc.fiber_diameter),
                match sc.axis {
                    Axis::X => "x",
                    Axis::Y => "y",
                },
                len(sc.half_width),
                len(sc.step),
                sc.range_tolerance
            );
        }
        let o = &self.output;
        let formats: Vec<&str> = [("cfld", o.formats.cfld), ("csv", o.formats.csv), ("pgm", o.formats.pgm)]
            .iter()
            .filter(|(_, on)| *on)
            .map(|(n, _)| *n)
            .collect();
        s += &format!("[output]\ndirectory = {}\nformats = {}\n", o.directory, formats.join(", "));
        s
    }
}
