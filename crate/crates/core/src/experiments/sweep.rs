use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{Calibration, Metrics, BB84_QBER_LIMIT};
use crate::solvers::{enforce_security, optimize};

use super::config::RunConfig;
use super::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub elevation_deg: f64,
    pub n_elements: usize,
    pub trial: usize,
    pub snr_db: f64,
    pub ber: f64,
    pub qber: f64,
    pub skr_bits_s: f64,
    pub cost: f64,
    /// The reported configuration satisfies `QBER ≤ 0.11`.
    pub feasible: bool,
    pub solver_evals: u64,
}

impl SweepRow {
    fn from_metrics(s: &Scenario, m: &Metrics, feasible: bool, solver_evals: u64) -> Self {
        Self {
            elevation_deg: s.elevation_deg,
            n_elements: s.n_elements,
            trial: s.trial,
            snr_db: m.snr_db(),
            ber: m.ber,
            qber: m.qber,
            skr_bits_s: m.skr_bits_s,
            cost: m.cost,
            feasible,
            solver_evals,
        }
    }
}

/// Builds, optimizes and scores one `(θ, N, trial)` point.
///
/// Bare links are evaluated directly. Otherwise the configured solver runs
/// and the security constraint is enforced; an infeasible outcome is
/// reported as a row with `feasible = false`.
pub fn evaluate_point(cfg: &RunConfig, cal: &Calibration, elevation_deg: f64, n: usize, trial: usize) -> Result<SweepRow> {
    let scenario = Scenario::build(cfg, cal, elevation_deg, n, trial, 1.0)?;
    if n == 0 {
        let m = scenario.baseline();
        return Ok(SweepRow::from_metrics(&scenario, &m, m.qber <= BB84_QBER_LIMIT, 0));
    }
    let solver = cfg.solver.with_seed(scenario.solver_seed(cfg));
    let raw = optimize(&scenario.objective, &solver)?;
    let evals = raw.evaluations;
    match enforce_security(raw.clone(), &scenario.objective) {
        Ok(best) => {
            let m = scenario.objective.metrics(&best.best_bits)?;
            Ok(SweepRow::from_metrics(&scenario, &m, true, evals))
        }
        Err(Error::Infeasible { .. }) => {
            let m = scenario.objective.metrics(&raw.best_bits)?;
            Ok(SweepRow::from_metrics(&scenario, &m, false, evals))
        }
        Err(e) => Err(e),
    }
}

/// All `(trial, θ, N)` points in that nesting order, evaluated in parallel.
pub fn sweep_elevation(cfg: &RunConfig, cal: &Calibration) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let points: Vec<(usize, f64, usize)> = (0..cfg.sweep.trials)
        .flat_map(|t| {
            cfg.sweep
                .elevations_deg
                .iter()
                .flat_map(move |&e| cfg.sweep.ris_sizes.iter().map(move |&n| (t, e, n)))
        })
        .collect();
    points.par_iter().map(|&(t, e, n)| evaluate_point(cfg, cal, e, n, t)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub elevation_deg: f64,
    pub n_elements: usize,
    pub trial: usize,
    /// `SNR(N) - SNR(0)` in dB.
    pub delta_snr_db: f64,
    /// `QBER(0) - QBER(N)` in percentage points.
    pub delta_qber_pp: f64,
}

/// Improvements over the bare link at the same `(θ, trial)`.
pub fn delta_metrics(rows: &[SweepRow]) -> Result<Vec<DeltaRow>> {
    rows.iter()
        .map(|r| {
            let base = rows
                .iter()
                .find(|b| b.n_elements == 0 && b.trial == r.trial && b.elevation_deg == r.elevation_deg)
                .ok_or_else(|| {
                    Error::structural(format!(
                        "no N=0 baseline row for elevation {} deg, trial {}",
                        r.elevation_deg, r.trial
                    ))
                })?;
            Ok(DeltaRow {
                elevation_deg: r.elevation_deg,
                n_elements: r.n_elements,
                trial: r.trial,
                delta_snr_db: r.snr_db - base.snr_db,
                delta_qber_pp: 100.0 * (base.qber - r.qber),
            })
        })
        .collect()
}
