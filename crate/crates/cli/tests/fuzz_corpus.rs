//! Replays the checked-in fuzz seeds through the same checks as the fuzz
//! targets, so they run on stable toolchains too.

use std::path::PathBuf;

use bessel_herald::io::{decode, encode_field, encode_map, Stored};
use bessel_herald_cli::report::{parse_profiles_csv, profiles_csv};
use bessel_herald_cli::units::{format_quantity, parse_quantity, Dimension};
use bessel_herald_cli::RunConfig;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn cfld_seeds() {
    let mut decoded = 0;
    for (name, data) in seeds("cfld_decode") {
        if let Ok(stored) = decode(&data) {
            let again = match &stored {
                Stored::Amplitude(f) => encode_field(f),
                Stored::Intensity(m) => encode_map(m),
            };
            assert_eq!(again, data, "{name}");
            decoded += 1;
        }
    }
    assert_eq!(decoded, 2);
}

#[test]
fn config_seeds() {
    for (name, data) in seeds("config_parse") {
        let text = String::from_utf8(data).unwrap();
        let cfg = RunConfig::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(RunConfig::parse(&cfg.render()).unwrap(), cfg, "{name}");
    }
}

#[test]
fn scan_csv_seeds() {
    for (name, data) in seeds("scan_csv") {
        let text = String::from_utf8(data).unwrap();
        if let Ok(planes) = parse_profiles_csv(&text) {
            assert_eq!(parse_profiles_csv(&profiles_csv(&planes)).unwrap().len(), planes.len(), "{name}");
            assert_eq!(planes.len(), 3);
        }
    }
}

#[test]
fn quantity_seeds() {
    for (name, data) in seeds("quantity") {
        let text = String::from_utf8(data).unwrap();
        let parsed: Vec<_> = [Dimension::Length, Dimension::Wavenumber, Dimension::Angle]
            .into_iter()
            .filter_map(|d| parse_quantity(&text, d).ok().map(|v| (d, v)))
            .collect();
        assert_eq!(parsed.len(), 1, "{name}");
        let (d, v) = parsed[0];
        assert_eq!(parse_quantity(&format_quantity(v, d), d), Ok(v));
    }
}
