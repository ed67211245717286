use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use tempfile::NamedTempFile;

use crate::error::{Error, Result};
use crate::metrics::Calibration;
use crate::rng::RNG_ALGORITHM;
use crate::solvers::SolverConfig;

use super::histogram::HistogramGrid;
use super::sweep::{DeltaRow, SweepRow};

pub const SWEEP_COLUMNS: &[&str] = &[
    "elevation_deg",
    "n_elements",
    "trial",
    "snr_db",
    "ber",
    "qber",
    "skr_bits_s",
    "cost",
    "feasible",
    "solver_evals",
    "delta_snr_db",
    "delta_qber_pp",
];

pub const HISTOGRAM_COLUMNS: &[&str] =
    &["attenuation", "quantum_level", "classical_level", "count", "chi_square", "feasible"];

/// Run description written as `#` comment lines at the top of every CSV.
#[derive(Debug, Clone)]
pub struct CsvMeta<'a> {
    pub kind: &'a str,
    pub seed: u64,
    pub solver: &'a SolverConfig,
    pub calibration: &'a Calibration,
    /// Adds a `generated_unix` line; leave off for byte-reproducible files.
    pub timestamp: bool,
}

impl CsvMeta<'_> {
    pub fn header_lines(&self) -> Vec<String> {
        let c = self.calibration;
        let reference = c.reference_transmittance.map_or_else(|| "none".to_string(), |r| r.to_string());
        let mut lines = vec![
            format!("risqkd {} version={}", self.kind, env!("CARGO_PKG_VERSION")),
            format!(
                "seed={} rng={} solver={} objective={:?}",
                self.seed,
                RNG_ALGORITHM,
                self.solver.kind.name(),
                self.solver.objective
            )
            .to_lowercase(),
            format!(
                "calibration rf_gain_offset_db={} effective_visibility={} reference_transmittance={} raw_rate_scale={} element_amp_scale={}",
                c.rf_gain_offset_db, c.effective_visibility, reference, c.raw_rate_scale, c.element_amp_scale
            ),
        ];
        if self.timestamp {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
            lines.push(format!("generated_unix={secs}"));
        }
        lines
    }
}

fn write_header(out: &mut String, meta: &CsvMeta<'_>, columns: &[&str]) {
    for line in meta.header_lines() {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "{}", columns.join(","));
}

/// Sweep rows joined with their deltas, one line per row.
pub fn sweep_csv(rows: &[SweepRow], deltas: &[DeltaRow], meta: &CsvMeta<'_>) -> Result<String> {
    if rows.len() != deltas.len() {
        return Err(Error::structural("one delta row per sweep row expected"));
    }
    let mut out = String::new();
    write_header(&mut out, meta, SWEEP_COLUMNS);
    for (r, d) in rows.iter().zip(deltas) {
        let _ = writeln!(
            out,
            "{},{},{},{},{:e},{},{},{},{},{},{},{}",
            r.elevation_deg,
            r.n_elements,
            r.trial,
            r.snr_db,
            r.ber,
            r.qber,
            r.skr_bits_s,
            r.cost,
            r.feasible,
            r.solver_evals,
            d.delta_snr_db,
            d.delta_qber_pp
        );
    }
    Ok(out)
}

pub fn histogram_csv(grids: &[HistogramGrid], meta: &CsvMeta<'_>) -> String {
    let mut out = String::new();
    write_header(&mut out, meta, HISTOGRAM_COLUMNS);
    for g in grids {
        for (q, row) in g.counts.iter().enumerate() {
            for (c, count) in row.iter().enumerate() {
                let _ = writeln!(out, "{},{q},{c},{count},{},{}", g.attenuation, g.chi_square, g.feasible);
            }
        }
    }
    out
}

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
