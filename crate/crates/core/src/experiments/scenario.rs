use crate::channels::{
    gamma_gamma_shape, mean_pointing_gain, optical_direct_gain, rf_direct_gain, sample_turbulence, FadingSample,
};
use crate::error::Result;
use crate::geometry::LinkGeometry;
use crate::metrics::{Calibration, MetricModel, Metrics};
use crate::objective::ExactObjective;
use crate::ris::{cascade_gains, Band, BandParams, ChannelState};
use crate::rng::split_seed;

use super::config::{FadingMode, RunConfig};

/// Labels mixed into per-point seeds besides the band labels.
pub const SOLVER_LABEL: u64 = 0x50;
pub const FADING_LABEL: u64 = 0x46;

/// Seed for one sweep point:
/// `split_seed(master, [ris_offset_phase_seed, round(1000·θ°), N, trial, label])`.
///
/// Points are keyed by value, so adding elevations or sizes to a sweep never
/// changes the seeds of existing points.
pub fn point_seed(cfg: &RunConfig, elevation_deg: f64, n_elements: usize, trial: usize, label: u64) -> u64 {
    let millideg = (elevation_deg * 1000.0).round() as u64;
    split_seed(cfg.seed, &[cfg.ris.ris_offset_phase_seed, millideg, n_elements as u64, trial as u64, label])
}

/// Optical fading for one point. Turbulence is drawn per (trial, elevation)
/// and shared by every surface size so that sizes are compared on the same
/// channel realisation.
pub fn fading_at(cfg: &RunConfig, elevation_deg: f64, trial: usize) -> Result<FadingSample> {
    match cfg.sweep.fading {
        FadingMode::Mean => Ok(FadingSample::mean(&cfg.optical)),
        FadingMode::Sampled => {
            let shape = gamma_gamma_shape(cfg.optical.rytov_variance)?;
            let seed = point_seed(cfg, elevation_deg, 0, trial, FADING_LABEL);
            let chi = sample_turbulence(shape, seed, 1)?[0];
            FadingSample::new(chi, mean_pointing_gain(&cfg.optical))
        }
    }
}

/// One fully built link: geometry, channels and exact objective.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub elevation_deg: f64,
    pub n_elements: usize,
    pub trial: usize,
    pub geometry: LinkGeometry,
    pub fading: FadingSample,
    pub objective: ExactObjective,
}

impl Scenario {
    /// Builds the point `(θ, N, trial)` with all deterministic amplitudes
    /// multiplied by `sqrt(attenuation)`.
    pub fn build(
        cfg: &RunConfig,
        cal: &Calibration,
        elevation_deg: f64,
        n_elements: usize,
        trial: usize,
        attenuation: f64,
    ) -> Result<Self> {
        let geometry = LinkGeometry::at_degrees(elevation_deg, &cfg.geometry)?;
        let fading = fading_at(cfg, elevation_deg, trial)?;
        let ris = cfg.ris.with_elements(n_elements);
        let seed = |band: Band| point_seed(cfg, elevation_deg, n_elements, trial, band.seed_label());
        let optical_fading = (fading.turbulence_gain * fading.pointing_gain).sqrt();
        let cascade_quantum = cascade_gains(
            BandParams::Quantum(&cfg.optical),
            &ris,
            &geometry,
            seed(Band::Quantum),
            cal.element_amp_scale * optical_fading,
        )?;
        let cascade_classical =
            cascade_gains(BandParams::Classical(&cfg.rf), &ris, &geometry, seed(Band::Classical), 1.0)?;
        let state = ChannelState::new(
            optical_direct_gain(&cfg.optical, &geometry, &fading)?,
            rf_direct_gain(&cfg.rf, &geometry),
            cascade_quantum,
            cascade_classical,
        )?
        .scaled(attenuation.sqrt());
        let model = MetricModel::for_direct_rf(&cfg.optical, &cfg.rf, *cal, &cfg.weights, state.direct_classical)?;
        let objective = ExactObjective::new(state, ris.layout(), model)?;
        Ok(Self { elevation_deg, n_elements, trial, geometry, fading, objective })
    }

    /// Metrics without the surface.
    pub fn baseline(&self) -> Metrics {
        self.objective.baseline_metrics()
    }

    /// Solver seed for this point.
    pub fn solver_seed(&self, cfg: &RunConfig) -> u64 {
        point_seed(cfg, self.elevation_deg, self.n_elements, self.trial, SOLVER_LABEL)
    }
}
