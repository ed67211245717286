use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channels::{OpticalParams, RfParams};
use crate::error::{Error, Result};
use crate::geometry::GeometryParams;
use crate::metrics::{Calibration, CostWeights};
use crate::ris::RisConfig;
use crate::solvers::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FadingMode {
    /// Unit turbulence gain and mean pointing loss.
    #[default]
    Mean,
    /// One Gamma-Gamma turbulence draw per (trial, elevation).
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub elevations_deg: Vec<f64>,
    pub ris_sizes: Vec<usize>,
    pub attenuation_levels: Vec<f64>,
    pub trials: usize,
    pub fading: FadingMode,
    pub histogram_elevation_deg: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            elevations_deg: (2..=18).map(|k| 5.0 * k as f64).collect(),
            ris_sizes: vec![0, 128, 265, 512],
            attenuation_levels: vec![1.0, 0.6, 0.3, 0.1],
            trials: 1,
            fading: FadingMode::Mean,
            histogram_elevation_deg: 45.0,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.elevations_deg.is_empty() || self.ris_sizes.is_empty() || self.attenuation_levels.is_empty() {
            return Err(Error::Config("sweep lists must be non-empty".into()));
        }
        let in_range = |e: f64| e > 0.0 && e <= 90.0;
        if let Some(e) = self.elevations_deg.iter().find(|&&e| !in_range(e)) {
            return Err(Error::Config(format!("sweep elevation {e} outside (0, 90]")));
        }
        if !in_range(self.histogram_elevation_deg) {
            return Err(Error::Config("sweep.histogram_elevation_deg outside (0, 90]".into()));
        }
        if let Some(a) = self.attenuation_levels.iter().find(|&&a| !(a > 0.0 && a <= 1.0)) {
            return Err(Error::Config(format!("attenuation level {a} outside (0, 1]")));
        }
        if self.trials == 0 {
            return Err(Error::Config("sweep.trials must be at least 1".into()));
        }
        Ok(())
    }
}

/// Measured operating points the calibration reproduces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Anchors {
    pub snr_elevation_deg: f64,
    pub snr_db: f64,
    pub qber_low_elevation_deg: f64,
    pub qber_low: f64,
    pub qber_high_elevation_deg: f64,
    pub qber_high: f64,
    pub skr_elevation_deg: f64,
    pub skr_bits_s: f64,
    pub ris_elevation_deg: f64,
    /// Surface size for the amplitude fit; 0 skips that step.
    pub ris_elements: usize,
    /// Fractional SKR gain of the optimized surface over the bare link.
    pub ris_skr_gain: f64,
}

impl Default for Anchors {
    fn default() -> Self {
        Self {
            snr_elevation_deg: 10.0,
            snr_db: 11.0,
            qber_low_elevation_deg: 20.0,
            qber_low: 0.012,
            qber_high_elevation_deg: 80.0,
            qber_high: 0.009,
            skr_elevation_deg: 80.0,
            skr_bits_s: 3500.0,
            ris_elevation_deg: 80.0,
            ris_elements: 512,
            ris_skr_gain: 1.02,
        }
    }
}

impl Anchors {
    pub fn validate(&self) -> Result<()> {
        let elevations = [
            self.snr_elevation_deg,
            self.qber_low_elevation_deg,
            self.qber_high_elevation_deg,
            self.skr_elevation_deg,
            self.ris_elevation_deg,
        ];
        if elevations.iter().any(|&e| !(e > 0.0 && e <= 90.0)) {
            return Err(Error::Config("anchor elevations must lie in (0, 90]".into()));
        }
        if !(self.qber_low > 0.0 && self.qber_low < 0.5 && self.qber_high > 0.0 && self.qber_high < 0.5) {
            return Err(Error::Config("anchor QBERs must lie in (0, 0.5)".into()));
        }
        if !(self.skr_bits_s > 0.0 && self.ris_skr_gain > 0.0) {
            return Err(Error::Config("anchor SKR and RIS gain must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub geometry: GeometryParams,
    pub optical: OpticalParams,
    pub rf: RfParams,
    pub ris: RisConfig,
    pub weights: CostWeights,
    pub solver: SolverConfig,
    pub sweep: SweepSpec,
    pub anchors: Anchors,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            output_dir: PathBuf::from("out"),
            geometry: GeometryParams::default(),
            optical: OpticalParams::default(),
            rf: RfParams::default(),
            ris: RisConfig::default(),
            weights: CostWeights::default(),
            solver: SolverConfig::default(),
            sweep: SweepSpec::default(),
            anchors: Anchors::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.optical.validate()?;
        self.rf.validate()?;
        self.ris.validate()?;
        self.weights.validate()?;
        self.solver.validate()?;
        self.sweep.validate()?;
        self.anchors.validate()?;
        if self.anchors.ris_elements != 0 && self.anchors.ris_elements != self.ris.n_elements {
            return Err(Error::Config(format!(
                "anchors.ris_elements = {} but ris.n_elements = {}",
                self.anchors.ris_elements, self.ris.n_elements
            )));
        }
        Ok(())
    }

    /// Parses and validates a TOML document. Unknown keys are errors.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

pub fn calibration_to_toml(cal: &Calibration) -> Result<String> {
    toml::to_string(cal).map_err(|e| Error::Config(e.to_string()))
}

pub fn calibration_from_toml(text: &str) -> Result<Calibration> {
    let cal: Calibration = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cal.validate()?;
    Ok(cal)
}
