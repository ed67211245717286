use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::Calibration;
use crate::ris::Band;
use crate::solvers::optimize_secure;

use super::config::RunConfig;
use super::scenario::Scenario;

/// Joint (quantum level, classical level) occupancy of one optimized surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramGrid {
    pub attenuation: f64,
    /// `counts[quantum_level][classical_level]`.
    pub counts: Vec<Vec<usize>>,
    /// Pearson χ² against the uniform distribution over all bins.
    pub chi_square: f64,
    /// False when no configuration met the QBER constraint; counts are then zero.
    pub feasible: bool,
    pub qber: f64,
}

impl HistogramGrid {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn occupied_bins(&self) -> usize {
        self.counts.iter().flatten().filter(|&&c| c > 0).count()
    }
}

/// `Σ (O - E)² / E` with `E = total / bins`.
pub fn chi_square_uniform(counts: &[Vec<usize>]) -> f64 {
    let bins = counts.iter().map(Vec::len).sum::<usize>();
    let total: usize = counts.iter().flatten().sum();
    if bins == 0 || total == 0 {
        return 0.0;
    }
    let expected = total as f64 / bins as f64;
    counts.iter().flatten().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

/// Optimizes the configured surface at the histogram elevation once per
/// attenuation level and bins each element's phase pair.
///
/// Attenuation multiplies every deterministic power gain; the cascade
/// offsets and fading draw are the same for all levels.
pub fn phase_histogram(cfg: &RunConfig, cal: &Calibration, attenuation_levels: &[f64]) -> Result<Vec<HistogramGrid>> {
    cfg.validate()?;
    let n = cfg.ris.n_elements;
    let elevation = cfg.sweep.histogram_elevation_deg;
    attenuation_levels
        .par_iter()
        .map(|&att| {
            if !(att > 0.0 && att <= 1.0) {
                return Err(Error::Config(format!("attenuation level {att} outside (0, 1]")));
            }
            let scenario = Scenario::build(cfg, cal, elevation, n, 0, att)?;
            let layout = *scenario.objective.layout();
            let mut counts = vec![vec![0usize; layout.levels(Band::Classical)]; layout.levels(Band::Quantum)];
            let solver = cfg.solver.with_seed(scenario.solver_seed(cfg));
            match optimize_secure(&scenario.objective, &solver) {
                Ok(best) => {
                    for e in 0..n {
                        let q = layout.level(&best.best_bits, e, Band::Quantum) as usize;
                        let c = layout.level(&best.best_bits, e, Band::Classical) as usize;
                        counts[q][c] += 1;
                    }
                    Ok(HistogramGrid {
                        attenuation: att,
                        chi_square: chi_square_uniform(&counts),
                        counts,
                        feasible: true,
                        qber: scenario.objective.qber(&best.best_bits)?,
                    })
                }
                Err(Error::Infeasible { best_qber, .. }) => Ok(HistogramGrid {
                    attenuation: att,
                    chi_square: 0.0,
                    counts,
                    feasible: false,
                    qber: best_qber,
                }),
                Err(e) => Err(e),
            }
        })
        .collect()
}
