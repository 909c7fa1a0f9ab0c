use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bessel_herald_cli::manifest::Manifest;
use bessel_herald_cli::report::report_value;

const SMALL_PUMP: &str = "\
[grid]
n = 256
dx = 14 um
[pump]
mode = bg-closed-form
wavelength = 406 nm
w0 = 500 um
kt = 0.02 rad/um
sheet_z_max = 50 cm
sheet_planes = 5
[output]
formats = cfld, pgm
";

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bessel-herald"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_config(dir: &Path, command: &str, config: &str, out: &str, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{out}.cfg"));
    std::fs::write(&cfg, config).unwrap();
    let mut args = vec![command, cfg.to_str().unwrap(), "-o", out];
    args.extend_from_slice(extra);
    bin(dir, &args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p: PathBuf = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect()
}

#[test]
fn missing_grid_block_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = SMALL_PUMP.replace("[grid]\nn = 256\ndx = 14 um\n", "");
    let o = run_config(tmp.path(), "pump-sim", &cfg, "run", &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("[grid]"));
}

#[test]
fn diagnostics_name_line_and_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = SMALL_PUMP.replace("dx = 14 um", "dx = 14");
    let o = run_config(tmp.path(), "pump-sim", &cfg, "run", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3: [grid] dx:"), "{}", stderr(&o));
}

#[test]
fn undersampled_pump_is_a_numerical_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = SMALL_PUMP.replace("n = 256", "n = 16");
    let o = run_config(tmp.path(), "pump-sim", &cfg, "run", &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn zero_kt_records_no_annulus() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = SMALL_PUMP.replace("kt = 0.02", "kt = 0");
    let o = run_config(tmp.path(), "pump-sim", &cfg, "run", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = std::fs::read_to_string(tmp.path().join("run/pump_momentum.report.txt")).unwrap();
    assert!(report.starts_with("kind = no-annulus\n"), "{report}");
}

#[test]
fn pump_sim_writes_listed_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_config(tmp.path(), "pump-sim", SMALL_PUMP, "run", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let run = tmp.path().join("run");
    let m = Manifest::read(&run).unwrap().unwrap();
    let mut listed: Vec<&str> = m.files.iter().map(|f| f.path.as_str()).collect();
    listed.sort();
    let on_disk: Vec<String> = files(&run).into_keys().filter(|n| n != "manifest.json").collect();
    assert_eq!(listed, on_disk);
    assert!(on_disk.iter().all(|n| !n.ends_with(".csv") || n == "pump_yz.csv"));
    assert!(m.resolved_config.contains("w0 = 500 um"));
    let report = std::fs::read_to_string(run.join("pump_momentum.report.txt")).unwrap();
    let kt = report_value(&report, "kt_fit").unwrap();
    assert!((kt - 0.02).abs() < 0.02 * 0.02, "{kt}");
    let pgm = std::fs::read(run.join("pump_yz.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n5 256\n255\n"));
}

#[test]
fn axicon_chain_pump_lands_on_the_deflection_ring() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "[grid]\nn = 512\ndx = 28 um\n[pump]\nmode = axicon-chain\nwavelength = 406 nm\nlaser_waist = 1 mm\n\
               axicon_base_angle = 0.5 deg\nrefractive_index = 1.46\nmagnification = 2\nsheet_planes = 2\n\
               [output]\nformats = cfld\n";
    let o = run_config(tmp.path(), "pump-sim", cfg, "run", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = std::fs::read_to_string(tmp.path().join("run/pump_momentum.report.txt")).unwrap();
    let want = 2.0 * std::f64::consts::PI / 0.406 * 0.46 * 0.5f64.to_radians() / 2.0;
    let kt = report_value(&report, "kt_fit").unwrap();
    assert!((kt - want).abs() < 0.02 * want, "{kt} vs {want}");
}

#[test]
fn analyze_reproduces_inline_reports_bit_for_bit() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run_config(tmp.path(), "pump-sim", SMALL_PUMP, "run", &[]).status.code(), Some(0));
    let o = bin(tmp.path(), &["analyze", "run", "-o", "again"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).is_empty(), "{}", stderr(&o));
    for name in ["pump_momentum.report.txt", "pump_position.report.txt"] {
        let inline = std::fs::read(tmp.path().join("run").join(name)).unwrap();
        assert_eq!(std::fs::read(tmp.path().join("again").join(name)).unwrap(), inline, "{name}");
        let stdout = String::from_utf8(o.stdout.clone()).unwrap();
        assert!(stdout.contains(&format!("== {name}\n{}", String::from_utf8(inline).unwrap())));
    }
    let same = bin(tmp.path(), &["analyze", "run", "-o", "run"]);
    assert_eq!(same.status.code(), Some(2));
}

#[test]
fn analyze_detects_truncation() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run_config(tmp.path(), "pump-sim", SMALL_PUMP, "run", &[]).status.code(), Some(0));
    let target = tmp.path().join("run/pump_momentum.cfld");
    let bytes = std::fs::read(&target).unwrap();
    std::fs::write(&target, &bytes[..bytes.len() - 100]).unwrap();
    let o = bin(tmp.path(), &["analyze", "run"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("checksum mismatch"), "{}", stderr(&o));
    // without a manifest the container itself is found truncated
    std::fs::remove_file(tmp.path().join("run/manifest.json")).unwrap();
    let o = bin(tmp.path(), &["analyze", "run/pump_momentum.cfld"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("payload"), "{}", stderr(&o));
}

#[test]
fn analyze_without_manifest_warns_and_fits() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run_config(tmp.path(), "pump-sim", SMALL_PUMP, "run", &[]).status.code(), Some(0));
    std::fs::remove_file(tmp.path().join("run/manifest.json")).unwrap();
    let before = files(&tmp.path().join("run"));
    let o = bin(tmp.path(), &["analyze", "run"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning: no manifest"), "{}", stderr(&o));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("== pump_momentum.report.txt\nkind = annulus"));
    assert_eq!(files(&tmp.path().join("run")), before);
}

#[test]
fn resolved_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run_config(tmp.path(), "pump-sim", SMALL_PUMP, "a", &["--threads", "1"]).status.code(), Some(0));
    let resolved = Manifest::read(&tmp.path().join("a")).unwrap().unwrap().resolved_config;
    assert_eq!(run_config(tmp.path(), "pump-sim", &resolved, "b", &["--threads", "3"]).status.code(), Some(0));
    let (mut a, mut b) = (files(&tmp.path().join("a")), files(&tmp.path().join("b")));
    let (ma, mb) = (a.remove("manifest.json").unwrap(), b.remove("manifest.json").unwrap());
    assert_eq!(a, b);
    let (ma, mb): (Manifest, Manifest) = (serde_json::from_slice(&ma).unwrap(), serde_json::from_slice(&mb).unwrap());
    assert_eq!(ma.files, mb.files);
    assert_eq!(ma.resolved_config, mb.resolved_config);
}

#[test]
fn point_herald_spot_width() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "preset = paper-defaults\n[herald]\nfiber_diameter = 0 um\nsampling = polar 1x1\n[output]\nformats = cfld\n";
    let o = run_config(tmp.path(), "spdc-sim", cfg, "run", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = std::fs::read_to_string(tmp.path().join("run/heralded_signal.report.txt")).unwrap();
    // central lobe of J0² at kt/3: 2·x½/(kt/3) with J0(x½)² = 1/2
    let x_half = 1.126_35;
    let want = 2.0 * x_half / (0.046 / 3.0);
    for key in ["fwhm_x", "fwhm_y"] {
        let w = report_value(&report, key).unwrap();
        assert!((w - want).abs() < 0.02 * want, "{key} = {w} vs {want}");
        assert!((w - 146.9).abs() < 0.02 * 146.9);
    }
}

#[test]
fn zero_quadrature_nodes_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "preset = paper-defaults\n[herald]\nfiber_diameter = 0 um\nsampling = polar 0x0\n";
    let o = run_config(tmp.path(), "spdc-sim", cfg, "run", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4: [herald] sampling"), "{}", stderr(&o));
    assert!(!tmp.path().join("run").exists());
}

#[test]
fn single_plane_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "preset = paper-defaults\n[scan]\nz = 10 cm\nhalf_width = 2 mm\nstep = 10 um\n";
    let o = run_config(tmp.path(), "sweep", cfg, "run", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let run = tmp.path().join("run");
    let summary = std::fs::read_to_string(run.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2, "{summary}");
    assert!(summary.lines().nth(1).unwrap().starts_with("100000,"));
    let profiles = std::fs::read_to_string(run.join("profiles.csv")).unwrap();
    assert_eq!(profiles.lines().count(), 1 + 401);
    let report = std::fs::read_to_string(run.join("sweep_report.txt")).unwrap();
    assert!(report.contains("heralded_range = unavailable"), "{report}");
    assert!(report.contains("ratio_gain = 1\n"), "{report}");
    // the stored scan re-analyses to the same summary
    let o = bin(tmp.path(), &["analyze", "run", "-o", "again"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(tmp.path().join("again/summary.csv")).unwrap(), summary);
    assert_eq!(std::fs::read_to_string(tmp.path().join("again/sweep_report.txt")).unwrap(), report);
}

#[test]
fn print_preset_parses_back() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin(tmp.path(), &["print-preset"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(
        bessel_herald_cli::RunConfig::parse(&text).unwrap(),
        bessel_herald_cli::RunConfig::parse("preset = paper-defaults").unwrap()
    );
    assert_eq!(bin(tmp.path(), &["print-preset", "nope"]).status.code(), Some(2));
}
