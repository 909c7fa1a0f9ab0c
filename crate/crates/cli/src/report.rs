//! Text reports shared by the simulation commands and `analyze`, so a stored
//! artifact re-analysed later yields byte-identical text.

use std::fmt::Write as _;

use bessel_herald::analysis::{annulus_fit, fwhm, AnnulusOutcome, Profile};
use bessel_herald::spdc::{scan_profile, Axis, ScanResult, ScanSpec, Sweep};
use bessel_herald::{Domain, RealMap, Result};

/// Ring fit of a momentum map.
pub fn fit_report(map: &RealMap) -> Result<String> {
    Ok(format_fit(&annulus_fit(map)?))
}

pub fn format_fit(outcome: &AnnulusOutcome) -> String {
    match outcome {
        AnnulusOutcome::Annulus(f) => format!(
            "kind = annulus\nkt_fit = {} rad/um\ndelta_k = {} rad/um\nw0_fit = {} um\ncenter = {} rad/um, {} rad/um\nresidual = {}\n",
            f.kt_fit, f.delta_k, f.w0_fit, f.center[0], f.center[1], f.residual
        ),
        AnnulusOutcome::NoAnnulus { center, reason } => {
            format!("kind = no-annulus\ncenter = {} rad/um, {} rad/um\nreason = {reason}\n", center[0], center[1])
        }
    }
}

/// Band-limited line through the centroid of a position map, as wide as the
/// grid allows, at a quarter of the pitch.
pub fn centroid_line(map: &RealMap, axis: Axis) -> Result<Profile> {
    let g = map.grid();
    let c = map.centroid()?;
    let along = match axis {
        Axis::X => c[0],
        Axis::Y => c[1],
    };
    let step = map.pitch() / 4.0;
    let room = (along - g.coord(0, Domain::Position)).min(g.max_coord(Domain::Position) - along);
    let half_width = ((room / step).floor() - 1.0).max(1.0) * step;
    scan_profile(map, &ScanSpec::new(step, axis, half_width, step)?)
}

/// Centroid, peak and line widths of a position map.
pub fn spot_report(map: &RealMap) -> Result<String> {
    let c = map.centroid()?;
    let mut s = format!("kind = spot\ncentroid = {} um, {} um\npeak = {}\n", c[0], c[1], map.max());
    for (axis, name) in [(Axis::X, "x"), (Axis::Y, "y")] {
        match fwhm(&centroid_line(map, axis)?) {
            Ok(w) => writeln!(s, "fwhm_{name} = {w} um").unwrap(),
            Err(e) => writeln!(s, "fwhm_{name} = none ({e})").unwrap(),
        }
    }
    Ok(s)
}

/// Report for any stored map, chosen by its domain.
pub fn map_report(map: &RealMap) -> Result<String> {
    match map.domain() {
        Domain::Momentum => fit_report(map),
        Domain::Position => spot_report(map),
    }
}

/// Read a value back from a `key = value` report line.
pub fn report_value(report: &str, key: &str) -> Option<f64> {
    report.lines().find_map(|l| {
        let (k, v) = l.split_once(" = ")?;
        (k == key).then(|| v.split_whitespace().next()?.trim_end_matches(',').parse().ok())?
    })
}

pub const PROFILES_HEADER: [&str; 6] = ["z_um", "offset_um", "coincidence_coord_um", "coincidences", "singles_coord_um", "singles"];
pub const SUMMARY_HEADER: [&str; 6] = ["z_um", "r_c", "r_s", "r_c_over_r_s", "fwhm_c_um", "fwhm_s_um"];

fn csv_text(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
}

pub fn profiles_csv(planes: &[ScanResult]) -> String {
    let rows = planes.iter().flat_map(|p| {
        let c = &p.coincidences;
        let s = &p.singles;
        (0..c.len()).map(move |i| {
            vec![
                p.z.to_string(),
                (c.coords()[i] - c.coords()[c.len() / 2]).to_string(),
                c.coords()[i].to_string(),
                c.values()[i].to_string(),
                s.coords()[i].to_string(),
                s.values()[i].to_string(),
            ]
        })
    });
    csv_text(&PROFILES_HEADER, rows)
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn summary_csv(planes: &[ScanResult]) -> String {
    let rows = planes.iter().map(|p| {
        vec![
            p.z.to_string(),
            p.r_c.to_string(),
            p.r_s.to_string(),
            (p.r_c / p.r_s).to_string(),
            opt(p.fwhm_c),
            opt(p.fwhm_s),
        ]
    });
    csv_text(&SUMMARY_HEADER, rows)
}

pub fn sweep_report(sweep: &Sweep, tolerance: f64) -> String {
    let mut s = format!("planes = {}\nrange_tolerance = {tolerance}\n", sweep.planes.len());
    for (name, range) in [("heralded_range", sweep.heralded_range(tolerance)), ("singles_range", sweep.singles_range(tolerance))] {
        match range {
            Ok(r) => writeln!(s, "{name} = {r} um").unwrap(),
            Err(e) => writeln!(s, "{name} = unavailable ({e})").unwrap(),
        }
    }
    if let (Some(first), Some(last)) = (sweep.planes.first(), sweep.planes.last()) {
        let r0 = first.r_c / first.r_s;
        let r1 = last.r_c / last.r_s;
        writeln!(s, "ratio_first = {r0}\nratio_last = {r1}\nratio_gain = {}", r1 / r0).unwrap();
    }
    s
}

/// Rebuild scan results from `profiles.csv` text.
pub fn parse_profiles_csv(text: &str) -> std::result::Result<Vec<ScanResult>, String> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().ne(PROFILES_HEADER) {
        return Err(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()));
    }
    let mut groups: Vec<(f64, [Vec<f64>; 4])> = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        // the offset column is derived and only has to be a number
        let v: Vec<f64> = rec
            .iter()
            .enumerate()
            .map(|(c, f)| f.parse::<f64>().ok().filter(|x| c == 1 || x.is_finite()))
            .collect::<Option<_>>()
            .ok_or_else(|| format!("row {}: expected finite numbers", i + 2))?;
        if v.len() != 6 {
            return Err(format!("row {}: expected 6 fields", i + 2));
        }
        if groups.last().is_none_or(|g| g.0 != v[0]) {
            if groups.iter().any(|g| g.0 == v[0]) {
                return Err(format!("row {}: plane z = {} is split", i + 2, v[0]));
            }
            groups.push((v[0], Default::default()));
        }
        let g = &mut groups.last_mut().expect("pushed").1;
        for (col, x) in g.iter_mut().zip(&v[2..]) {
            col.push(*x);
        }
    }
    if groups.is_empty() {
        return Err("no rows".into());
    }
    groups
        .into_iter()
        .map(|(z, [cc, c, sc, s])| {
            let coincidences = Profile::new(cc, c, Domain::Position).map_err(|e| e.to_string())?;
            let singles = Profile::new(sc, s, Domain::Position).map_err(|e| e.to_string())?;
            Ok(ScanResult {
                z,
                r_c: coincidences.max(),
                r_s: singles.max(),
                fwhm_c: fwhm(&coincidences).ok(),
                fwhm_s: fwhm(&singles).ok(),
                coincidences,
                singles,
            })
        })
        .collect()
}
