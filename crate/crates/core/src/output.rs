//! CSV and JSON renderings of patches, tables and reports.
//!
//! Every rendering carries the hash of the configuration that produced it:
//! CSV files open with a `# config_hash: ...` comment line ahead of the
//! header, JSON documents have a `config_hash` field.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::averaging::ConvergenceTable;
use crate::diffraction::{ComparisonReport, DiffractionSpectrum};
use crate::error::{Error, Result};
use crate::modelset::Patch;
use crate::torus::TorusParameter;
use crate::window::Window;

/// Crate version recorded in every provenance header.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A named output file held in memory until written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    /// Path relative to the output directory.
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: impl Into<String>, contents: String) -> Self {
        Self {
            name: name.into(),
            contents,
        }
    }
}

/// Write artifacts under `dir`, creating it if needed; returns the paths.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    artifacts
        .iter()
        .map(|a| {
            let path = dir.join(&a.name);
            std::fs::write(&path, &a.contents)?;
            Ok(path)
        })
        .collect()
}

/// A CSV document: hash comment, header row, then `rows`.
pub fn csv_document(config_hash: &str, header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    wtr.write_record(header).map_err(csv_err)?;
    for r in rows {
        wtr.write_record(r).map_err(csv_err)?;
    }
    let body = wtr.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    let body = String::from_utf8(body).map_err(|e| Error::Io(e.to_string()))?;
    Ok(format!("# config_hash: {config_hash}\n{body}"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Pretty JSON with a trailing newline.
pub fn json_document<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn axis_names(prefix: &str, count: usize) -> Vec<String> {
    if count == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=count).map(|i| format!("{prefix}{i}")).collect()
    }
}

/// One row per point: integer coordinates, physical, internal.
pub fn patch_csv(patch: &Patch, m: usize, config_hash: &str) -> Result<String> {
    let dim = patch.d() + m;
    let mut header = axis_names("n", dim);
    header.extend(axis_names("x", patch.d()));
    header.extend(axis_names("h", m));
    let rows: Vec<Vec<String>> = patch
        .points
        .iter()
        .map(|p| {
            p.n.iter()
                .map(|v| v.to_string())
                .chain(p.x.iter().map(|&v| num(v)))
                .chain(p.x_star.iter().map(|&v| num(v)))
                .collect()
        })
        .collect();
    csv_document(config_hash, &header, &rows)
}

#[derive(Serialize)]
struct PatchDocument<'a> {
    config_hash: &'a str,
    tool_version: &'a str,
    cps_id: &'a str,
    window_id: &'a str,
    window: &'a Window,
    s: &'a [f64],
    t: &'a [f64],
    region: &'a crate::geometry::Aabb,
    count: usize,
    points: &'a [crate::cps::LatticePoint],
}

pub fn patch_json(patch: &Patch, window: &Window, config_hash: &str) -> Result<String> {
    json_document(&PatchDocument {
        config_hash,
        tool_version: TOOL_VERSION,
        cps_id: &patch.cps_id,
        window_id: &patch.window_id,
        window,
        s: &patch.s,
        t: &patch.t,
        region: &patch.region,
        count: patch.len(),
        points: &patch.points,
    })
}

pub fn convergence_csv(table: &ConvergenceTable, config_hash: &str) -> Result<String> {
    let header: Vec<String> = [
        "R",
        "value_re",
        "value_im",
        "prediction_re",
        "prediction_im",
        "abs_error",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            vec![
                num(r.radius),
                num(r.value.re),
                num(r.value.im),
                num(r.prediction.re),
                num(r.prediction.im),
                num(r.abs_error),
            ]
        })
        .collect();
    csv_document(config_hash, &header, &rows)
}

pub fn spectrum_csv(spectrum: &DiffractionSpectrum, config_hash: &str) -> Result<String> {
    let (d, m) = spectrum
        .peaks
        .first()
        .map_or((1, 1), |p| (p.k.len(), p.l.len()));
    let mut header = axis_names("k", d);
    header.extend(axis_names("l", m));
    header.push("intensity".into());
    let rows: Vec<Vec<String>> = spectrum
        .peaks
        .iter()
        .map(|p| {
            p.k.iter()
                .chain(&p.l)
                .map(|&v| num(v))
                .chain(std::iter::once(num(p.intensity)))
                .collect()
        })
        .collect();
    csv_document(config_hash, &header, &rows)
}

pub fn report_csv(report: &ComparisonReport, config_hash: &str) -> Result<String> {
    let header: Vec<String> = [
        "label",
        "predicted_re",
        "predicted_im",
        "empirical_re",
        "empirical_im",
        "abs_error",
        "tolerance",
        "pass",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.label.clone(),
                num(r.predicted.re),
                num(r.predicted.im),
                num(r.empirical.re),
                num(r.empirical.im),
                num(r.abs_error),
                num(r.tolerance),
                r.pass.to_string(),
            ]
        })
        .collect();
    csv_document(config_hash, &header, &rows)
}

/// Plain-text digest of a report: counts, worst row, failing labels.
pub fn report_summary(title: &str, report: &ComparisonReport, config_hash: &str) -> String {
    let mut out = format!(
        "{title}\nconfig_hash: {config_hash}\npredicted: {}\nempirical: {}\nrows: {}, failures: {}, max error: {:.3e}\n",
        report.predicted_source,
        report.empirical_source,
        report.rows.len(),
        report.failures().count(),
        report.max_error(),
    );
    for r in report.failures() {
        out.push_str(&format!(
            "  FAIL {}: |error| {:.3e} > {:.1e}\n",
            r.label, r.abs_error, r.tolerance
        ));
    }
    out
}

#[derive(Serialize)]
struct TorusDocument<'a> {
    config_hash: &'a str,
    tool_version: &'a str,
    recoveries: &'a [TorusRecovery],
}

/// One recovered parameter with the draw it came from, if known.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorusRecovery {
    pub radius: f64,
    pub s0: Vec<f64>,
    pub t0: Vec<f64>,
    pub recovered: TorusParameter,
    pub contains_draw: bool,
}

pub fn torus_json(recoveries: &[TorusRecovery], config_hash: &str) -> Result<String> {
    json_document(&TorusDocument {
        config_hash,
        tool_version: TOOL_VERSION,
        recoveries,
    })
}
