//! Re-analysis of stored run artifacts.

use std::path::{Path, PathBuf};

use bessel_herald::io::decode;
use bessel_herald::spdc::Sweep;

use crate::error::CliError;
use crate::manifest::{sha256_hex, Manifest};
use crate::report::{map_report, parse_profiles_csv, summary_csv, sweep_report};

pub const PROFILES_NAME: &str = "profiles.csv";

/// Reports regenerated from stored artifacts, one per input file.
#[derive(Debug, Clone, Default)]
pub struct Analysis {
    /// `(report file name, contents)`.
    pub reports: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

impl Analysis {
    pub fn text(&self) -> String {
        self.reports.iter().map(|(name, body)| format!("== {name}\n{body}")).collect()
    }
}

fn inputs(path: &Path) -> Result<(PathBuf, Vec<PathBuf>), CliError> {
    let meta = std::fs::metadata(path).map_err(CliError::io(path))?;
    if meta.is_file() {
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        return Ok((dir, vec![path.to_path_buf()]));
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(CliError::io(path))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|e| e == "cfld") || p.file_name().is_some_and(|n| n == PROFILES_NAME)
        })
        .collect();
    files.sort();
    Ok((path.to_path_buf(), files))
}

/// Analyse a run directory or a single artifact. Checksums are verified
/// against the directory's manifest when it exists; `out`, if given,
/// receives the report files and must differ from the input directory.
pub fn analyze(path: &Path, out: Option<&Path>, tolerance: f64) -> Result<Analysis, CliError> {
    let (dir, files) = inputs(path)?;
    let mut result = Analysis::default();
    let manifest = Manifest::read(&dir)?;
    if manifest.is_none() {
        result
            .warnings
            .push(format!("no manifest in {}; checksums not verified", dir.display()));
    }
    if files.is_empty() {
        result.warnings.push(format!("no .cfld or {PROFILES_NAME} files in {}", dir.display()));
    }
    for file in &files {
        let name = file.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        let bytes = std::fs::read(file).map_err(CliError::io(file))?;
        match manifest.as_ref().map(|m| m.record(&name)) {
            Some(Some(rec)) => {
                let found = sha256_hex(&bytes);
                if rec.sha256 != found || rec.bytes != bytes.len() as u64 {
                    return Err(CliError::Corrupt {
                        path: file.clone(),
                        reason: format!(
                            "checksum mismatch: manifest lists {} ({} bytes), file is {found} ({} bytes)",
                            rec.sha256,
                            rec.bytes,
                            bytes.len()
                        ),
                    });
                }
            }
            Some(None) => result.warnings.push(format!("{name} is not listed in the manifest")),
            None => {}
        }
        let corrupt = |reason: String| CliError::Corrupt {
            path: file.clone(),
            reason,
        };
        if name == PROFILES_NAME {
            let text = String::from_utf8(bytes).map_err(|e| corrupt(e.to_string()))?;
            let planes = parse_profiles_csv(&text).map_err(corrupt)?;
            result.reports.push(("summary.csv".into(), summary_csv(&planes)));
            let sweep = Sweep { planes, warnings: Vec::new() };
            result.reports.push(("sweep_report.txt".into(), sweep_report(&sweep, tolerance)));
        } else {
            let stored = decode(&bytes).map_err(|e| corrupt(e.to_string()))?;
            let stem = name.trim_end_matches(".cfld");
            result.reports.push((format!("{stem}.report.txt"), map_report(&stored.intensity())?));
        }
    }
    if let Some(out) = out {
        std::fs::create_dir_all(out).map_err(CliError::io(out))?;
        let same = match (out.canonicalize(), dir.canonicalize()) {
            (Ok(a), Ok(b)) => a == b,
            _ => false,
        };
        if same {
            return Err(CliError::Usage("analysis output directory must differ from the input directory".into()));
        }
        for (name, body) in &result.reports {
            let p = out.join(name);
            std::fs::write(&p, body).map_err(CliError::io(&p))?;
        }
    }
    Ok(result)
}
