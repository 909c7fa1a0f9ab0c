//! The simulation commands.

use std::path::{Path, PathBuf};

use bessel_herald::beams::{bg_spectrum, gaussian_field, BGParams};
use bessel_herald::io::{encode_field, encode_map, map_csv, map_pgm, pgm};
use bessel_herald::optics::{propagate, run_train, Element, OpticalTrain, PropagationModel};
use bessel_herald::spdc::{
    conditional_spectrum_scan, heralded_intensity, z_sweep, HeraldSpec, PumpState, ScanSpec, Sweep,
};
use bessel_herald::{ComplexField, GridSpec, RealMap};

use crate::config::{Acceptance, ConfigError, KCenter, PumpConfig, PumpMode, RunConfig, Scenario};
use crate::error::CliError;
use crate::manifest::{Manifest, RunDir};
use crate::report::{map_report, profiles_csv, summary_csv, sweep_report};

/// Result of a finished command: its manifest and a short human summary.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub directory: PathBuf,
    pub manifest: Manifest,
    pub summary: String,
}

/// Parse `config_text` and run `scenario`, writing into `out` or the
/// configured output directory.
pub fn run(scenario: Scenario, config_text: &str, out: Option<&Path>) -> Result<Outcome, CliError> {
    let cfg = RunConfig::parse(config_text)?;
    cfg.require(scenario)?;
    let directory = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    let mut dir = RunDir::create(&directory, cfg.output.formats)?;
    let summary = match scenario {
        Scenario::PumpSim => pump_sim(&cfg, &mut dir)?,
        Scenario::SpdcSim => spdc_sim(&cfg, &mut dir)?,
        Scenario::Sweep => sweep(&cfg, &mut dir)?,
    };
    let manifest = dir.finish(scenario.name(), config_text, cfg.render())?;
    Ok(Outcome {
        directory,
        manifest,
        summary,
    })
}

fn write_field(dir: &mut RunDir, stem: &str, field: &ComplexField) -> Result<String, CliError> {
    if dir.formats().cfld {
        dir.write(&format!("{stem}.cfld"), &encode_field(field))?;
    }
    write_map_views(dir, stem, &field.intensity())
}

fn write_map(dir: &mut RunDir, stem: &str, map: &RealMap) -> Result<String, CliError> {
    if dir.formats().cfld {
        dir.write(&format!("{stem}.cfld"), &encode_map(map))?;
    }
    write_map_views(dir, stem, map)
}

/// CSV, PGM and the analysis report of a map; returns the report.
fn write_map_views(dir: &mut RunDir, stem: &str, map: &RealMap) -> Result<String, CliError> {
    let f = dir.formats();
    if f.csv {
        dir.write(&format!("{stem}.csv"), map_csv(map).as_bytes())?;
    }
    if f.pgm {
        dir.write(&format!("{stem}.pgm"), &map_pgm(map))?;
    }
    let report = map_report(map)?;
    dir.write(&format!("{stem}.report.txt"), report.as_bytes())?;
    Ok(report)
}

/// Pump at the crystal in both domains.
pub fn pump_fields(grid: GridSpec, pump: &PumpConfig, warnings: &mut Vec<String>) -> Result<(ComplexField, ComplexField), CliError> {
    match pump.mode {
        PumpMode::BgClosedForm { w0, kt } => {
            let p = BGParams::new(w0, kt, pump.wavelength)?;
            let spectrum = bg_spectrum(&p, &grid)?;
            Ok((spectrum.to_position()?, spectrum))
        }
        PumpMode::AxiconChain {
            laser_waist,
            magnification,
            ..
        } => {
            let laser_grid = grid.with_dx(grid.dx() / magnification)?;
            let laser = gaussian_field(laser_waist, pump.wavelength, 0.0, &laser_grid)?;
            let ax = pump.axicon().expect("axicon mode");
            let train = OpticalTrain::new(
                pump.wavelength,
                vec![Element::Axicon(ax), Element::IdealMagnifier { m: magnification }],
            )?;
            let run = run_train(laser, &train)?;
            for i in run.aliasing {
                warnings.push(format!("pump preparation element {i} risks aliasing"));
            }
            let field = run.output.normalized()?;
            let spectrum = field.to_momentum()?;
            Ok((field, spectrum))
        }
    }
}

fn pump_state(cfg: &RunConfig, warnings: &mut Vec<String>) -> Result<PumpState, CliError> {
    let p = cfg.pump.as_ref().expect("required");
    let (_, spectrum) = pump_fields(cfg.grid.expect("required").spec(), p, warnings)?;
    Ok(PumpState::new(spectrum, p.wavelength, p.signal_wavelength(), p.idler_wavelength())?)
}

fn pump_sim(cfg: &RunConfig, dir: &mut RunDir) -> Result<String, CliError> {
    let pump = cfg.pump.as_ref().expect("required");
    let grid = cfg.grid.expect("required").spec();
    let (position, spectrum) = pump_fields(grid, pump, &mut dir.warnings)?;
    dir.lap("pump");
    write_field(dir, "pump_position", &position)?;
    let fit = write_field(dir, "pump_momentum", &spectrum)?;
    dir.lap("maps");

    // intensity along y through x = 0 as the pump propagates
    let n = grid.n();
    let planes: Vec<f64> = (0..pump.sheet_planes)
        .map(|j| pump.sheet_z_max * j as f64 / (pump.sheet_planes - 1) as f64)
        .collect();
    let mut columns = Vec::with_capacity(planes.len());
    for &z in &planes {
        let p = propagate(&position, z, pump.wavelength, PropagationModel::Paraxial)?;
        if p.aliasing_risk() {
            dir.warnings.push(format!("pump sheet: aliasing risk at z = {z} um"));
        }
        let g = *p.field.grid();
        columns.push((0..n).map(|iy| (g.coord(iy, p.field.domain()), p.field.at(n / 2, iy).norm_sqr())).collect::<Vec<_>>());
    }
    let mut csv = String::from("z_um,y_um,intensity\n");
    for (z, col) in planes.iter().zip(&columns) {
        for (y, v) in col {
            csv.push_str(&format!("{z},{y},{v}\n"));
        }
    }
    dir.write("pump_yz.csv", csv.as_bytes())?;
    // rows run from +y at the top; columns are z
    let image: Vec<f64> = (0..n).rev().flat_map(|iy| columns.iter().map(move |c| c[iy].1)).collect();
    dir.write("pump_yz.pgm", &pgm(&image, planes.len(), n))?;
    dir.lap("sheet");
    Ok(format!("pump momentum map:\n{fit}"))
}

fn signal_optics(cfg: &RunConfig, pump: &PumpState) -> Result<(OpticalTrain, HeraldSpec), CliError> {
    let elements = cfg.train.as_ref().expect("required");
    let mut train = OpticalTrain::new(pump.signal_wavelength(), elements.iter().map(|e| e.element.clone()).collect())?;
    for (i, e) in elements.iter().enumerate() {
        if let Some(t) = &e.tap {
            train = train.tap(i, t.clone())?;
        }
    }
    let h = cfg.herald.expect("required");
    let center = match h.k_center {
        KCenter::Auto => [pump.ring_peak_kx(), 0.0],
        KCenter::Fixed(k) => k,
    };
    let radius = HeraldSpec::fiber_radius_k(0.5 * h.fiber_diameter, pump.k_idler(), h.focal_length);
    Ok((train, HeraldSpec::new(center, radius, h.sampling)?))
}

/// Focal length of the first Fourier system: the signal Fourier plane.
fn fp1_focal_length(cfg: &RunConfig) -> Result<f64, CliError> {
    cfg.train
        .iter()
        .flatten()
        .find_map(|e| match e.element {
            Element::FourierSystem { f } => Some(f.abs()),
            _ => None,
        })
        .ok_or_else(|| {
            CliError::Config(ConfigError {
                origin: None,
                section: Some("train".into()),
                key: Some("element".into()),
                message: "no fourier element defines the signal Fourier plane".into(),
            })
        })
}

fn spdc_sim(cfg: &RunConfig, dir: &mut RunDir) -> Result<String, CliError> {
    let pump = pump_state(cfg, &mut dir.warnings)?;
    let (train, herald) = signal_optics(cfg, &pump)?;
    let scan = cfg.scan.as_ref().expect("required");
    let f1 = fp1_focal_length(cfg)?;
    dir.lap("pump");
    let fiber_k = HeraldSpec::fiber_radius_k(0.5 * scan.fp1_fiber_diameter, pump.k_signal(), f1);
    let with_fiber = conditional_spectrum_scan(&pump, &herald, fiber_k, None)?;
    let herald_only = conditional_spectrum_scan(&pump, &herald, 0.0, None)?;
    dir.lap("conditional spectra");
    let fit_fiber = write_map(dir, "conditional_fp1", &with_fiber)?;
    let fit_herald = write_map(dir, "conditional_herald", &herald_only)?;
    let heralded = heralded_intensity(&pump, &herald, &train, 0.0)?;
    dir.lap("heralded intensity");
    let spot = write_map(dir, "heralded_signal", &heralded)?;
    dir.lap("outputs");
    Ok(format!(
        "conditional spectrum, herald fiber only:\n{fit_herald}\nconditional spectrum, herald and signal fibers:\n{fit_fiber}\nheralded signal after the train:\n{spot}"
    ))
}

/// Run the configured sweep without writing anything.
pub fn compute_sweep(cfg: &RunConfig, warnings: &mut Vec<String>) -> Result<Sweep, CliError> {
    let pump = pump_state(cfg, warnings)?;
    let (train, herald) = signal_optics(cfg, &pump)?;
    let scan = cfg.scan.as_ref().expect("required");
    let acceptance = match cfg.singles {
        None => None,
        Some(s) => {
            let radius = match s.acceptance {
                Acceptance::Auto => pump.singles_acceptance()?.aperture_radius_k(),
                Acceptance::Radius(k) => k,
            };
            Some(HeraldSpec::new([0.0, 0.0], radius, s.sampling)?)
        }
    };
    let spec = ScanSpec::new(0.5 * scan.fiber_diameter, scan.axis, scan.half_width, scan.step)?;
    let sweep = z_sweep(&pump, &herald, acceptance.as_ref(), &train, &scan.z, &spec)?;
    warnings.extend(sweep.warnings.iter().cloned());
    Ok(sweep)
}

fn sweep(cfg: &RunConfig, dir: &mut RunDir) -> Result<String, CliError> {
    let sweep = compute_sweep(cfg, &mut dir.warnings)?;
    dir.lap("sweep");
    let tolerance = cfg.scan.as_ref().expect("required").range_tolerance;
    dir.write("profiles.csv", profiles_csv(&sweep.planes).as_bytes())?;
    let summary = summary_csv(&sweep.planes);
    dir.write("summary.csv", summary.as_bytes())?;
    let report = sweep_report(&sweep, tolerance);
    dir.write("sweep_report.txt", report.as_bytes())?;
    dir.lap("outputs");
    Ok(format!("{summary}\n{report}"))
}
