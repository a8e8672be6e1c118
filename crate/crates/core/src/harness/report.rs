//! Writing reports to disk.
//!
//! Layout of the report directory:
//!
//! - `report.json`: the full [`Report`]
//! - `summary.csv`: STOI per method and budget, columns
//!   `method,budget,median,q1,q3,n`
//! - `summary_si_sdr.csv`, `summary_spectral_distance.csv`: same columns
//! - `curves/<model>_r<r>.csv`: learned metrics, columns `layer,r,y,f`
//! - `timing.json`: wall-clock figures (not reproducible)

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::experiment::{Report, Timing};
use crate::error::{Error, Result};
use crate::metric_recovery::write_curves_csv;

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Summary table of one metric.
pub fn summary_csv(report: &Report, metric: &str) -> String {
    let mut out = String::from("method,budget,median,q1,q3,n\n");
    for s in report.summaries.iter().filter(|s| s.metric == metric) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            s.method, s.budget, s.stats.median, s.stats.q1, s.stats.q3, s.stats.n
        );
    }
    out
}

pub fn report_json(report: &Report) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::InvalidArgument(e.to_string()))
}

/// Writes every report artifact into `dir`, creating it if needed, and
/// returns the paths written.
pub fn emit_report(report: &Report, timing: Option<&Timing>, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, contents: &[u8]| -> Result<()> {
        let p = dir.join(name);
        write_file(&p, contents)?;
        written.push(p);
        Ok(())
    };
    put("report.json", report_json(report)?.as_bytes())?;
    put("summary.csv", summary_csv(report, "stoi").as_bytes())?;
    put(
        "summary_si_sdr.csv",
        summary_csv(report, "si_sdr").as_bytes(),
    )?;
    put(
        "summary_spectral_distance.csv",
        summary_csv(report, "spectral_distance").as_bytes(),
    )?;
    if let Some(t) = timing {
        let text =
            serde_json::to_string_pretty(t).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        put("timing.json", text.as_bytes())?;
    }
    if report.curves.iter().any(|m| !m.curves.is_empty()) {
        let curves_dir = dir.join("curves");
        fs::create_dir_all(&curves_dir).map_err(|e| Error::io(&curves_dir, e))?;
        for m in &report.curves {
            let mut rs: Vec<f64> = m.curves.iter().map(|c| c.r_value).collect();
            rs.dedup();
            for r in rs {
                let subset: Vec<_> = m
                    .curves
                    .iter()
                    .filter(|c| c.r_value == r)
                    .cloned()
                    .collect();
                let mut buf = Vec::new();
                write_curves_csv(&subset, &mut buf).expect("writing to memory");
                let p = curves_dir.join(format!("{}_r{}.csv", m.model, r));
                write_file(&p, &buf)?;
                written.push(p);
            }
        }
    }
    Ok(written)
}

pub fn load_report(path: &Path) -> Result<Report> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}
