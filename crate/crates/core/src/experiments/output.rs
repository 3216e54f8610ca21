use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

use super::fit::RegressionReport;
use super::run::{SweepResult, SweepRow};
use super::spec::SweepSpec;

#[derive(Debug, Serialize)]
struct JsonReport<'a> {
    experiment: &'a str,
    spec_hash: &'a str,
    quantity: &'a str,
    note: Option<&'a str>,
    verdict: Option<&'a str>,
    inconclusive: usize,
    report: Option<&'a RegressionReport>,
    rows: &'a [SweepRow],
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub spec: PathBuf,
    pub csv: PathBuf,
    pub json: PathBuf,
}

/// Writes `<stem>.spec` (the canonical spec, tolerance included),
/// `<stem>.csv` (the table) and `<stem>.json` (the regression report and
/// per-row diagnostics) under `dir`.
pub fn write_outputs(
    dir: &Path,
    spec: &SweepSpec,
    result: &SweepResult,
    report: Option<&RegressionReport>,
) -> Result<OutputPaths> {
    std::fs::create_dir_all(dir)?;
    let stem = spec.file_stem();
    let paths = OutputPaths {
        spec: dir.join(format!("{stem}.spec")),
        csv: dir.join(format!("{stem}.csv")),
        json: dir.join(format!("{stem}.json")),
    };
    std::fs::write(&paths.spec, spec.render())?;
    std::fs::write(&paths.csv, result.to_csv())?;
    let json = JsonReport {
        experiment: spec.experiment.as_str(),
        spec_hash: &result.spec_hash,
        quantity: spec.quantity.as_str(),
        note: spec.note.as_deref(),
        verdict: report.map(|r| if r.passed() { "pass" } else { "fail" }),
        inconclusive: result.inconclusive_count(),
        report,
        rows: &result.rows,
    };
    let text = serde_json::to_string_pretty(&json).map_err(|e| crate::Error::Io(e.to_string()))?;
    std::fs::write(&paths.json, text + "\n")?;
    Ok(paths)
}
