//! Dual-band reconfigurable intelligent surface.
//!
//! Each of the `N` elements carries two independent quantized phases, one for
//! the optical band and one for the RF band. A phase is stored as `b` binary
//! variables, `θ = (2π / 2^b) Σ_k 2^k x_k`, and the full decision vector lays
//! out all quantum-band bits first (element-major, bit-minor) followed by all
//! classical-band bits.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{
    friis_amplitude, optical_extinction, optical_rx_gain, optical_tx_gain, propagation_phase,
    rf_impairment_amplitude, ComplexGain, OpticalParams, RfParams,
};
use crate::error::{Error, Result};
use crate::geometry::LinkGeometry;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Quantum,
    Classical,
}

impl Band {
    pub const BOTH: [Band; 2] = [Band::Quantum, Band::Classical];

    /// Stable label used when deriving per-band seeds.
    pub fn seed_label(self) -> u64 {
        match self {
            Band::Quantum => 0x51,
            Band::Classical => 0x43,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RisConfig {
    pub n_elements: usize,
    pub bits_quantum: u32,
    pub bits_classical: u32,
    /// Aperture gain of one unit cell. A cell one wavelength on a side in
    /// its band has gain 4π, which is the same number in both bands.
    pub element_gain: f64,
    pub ris_to_ground_km: f64,
    pub ris_offset_phase_seed: u64,
}

impl Default for RisConfig {
    fn default() -> Self {
        Self {
            n_elements: 512,
            bits_quantum: 2,
            bits_classical: 2,
            element_gain: 4.0 * PI,
            ris_to_ground_km: 0.5,
            ris_offset_phase_seed: 0,
        }
    }
}

impl RisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bits_quantum == 0 || self.bits_classical == 0 {
            return Err(Error::Config("ris phase resolution must be at least one bit per band".into()));
        }
        if self.bits_quantum > 16 || self.bits_classical > 16 {
            return Err(Error::Config("ris phase resolution above 16 bits is not supported".into()));
        }
        if !(self.element_gain >= 0.0 && self.element_gain.is_finite()) {
            return Err(Error::Config("ris.element_gain must be finite and >= 0".into()));
        }
        if !(self.ris_to_ground_km > 0.0 && self.ris_to_ground_km.is_finite()) {
            return Err(Error::Config("ris.ris_to_ground_km must be positive".into()));
        }
        Ok(())
    }

    pub fn layout(&self) -> VariableLayout {
        VariableLayout::new(self.n_elements, self.bits_quantum, self.bits_classical)
    }

    pub fn with_elements(&self, n_elements: usize) -> Self {
        Self { n_elements, ..*self }
    }
}

/// Bijection between `(element, band, bit)` and decision-variable indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableLayout {
    pub n_elements: usize,
    pub bits_quantum: u32,
    pub bits_classical: u32,
}

impl VariableLayout {
    pub fn new(n_elements: usize, bits_quantum: u32, bits_classical: u32) -> Self {
        Self { n_elements, bits_quantum, bits_classical }
    }

    pub fn bits(&self, band: Band) -> u32 {
        match band {
            Band::Quantum => self.bits_quantum,
            Band::Classical => self.bits_classical,
        }
    }

    pub fn levels(&self, band: Band) -> usize {
        1usize << self.bits(band)
    }

    pub fn dim(&self) -> usize {
        self.n_elements * (self.bits_quantum + self.bits_classical) as usize
    }

    fn block_start(&self, band: Band) -> usize {
        match band {
            Band::Quantum => 0,
            Band::Classical => self.n_elements * self.bits_quantum as usize,
        }
    }

    /// Index of bit `k` of element `n` (zero-based) in `band`.
    pub fn index_of(&self, n: usize, band: Band, k: u32) -> Result<usize> {
        if n >= self.n_elements || k >= self.bits(band) {
            return Err(Error::structural(format!(
                "variable (element {n}, {band:?}, bit {k}) outside layout with {} elements and {} bits",
                self.n_elements,
                self.bits(band)
            )));
        }
        Ok(self.block_start(band) + n * self.bits(band) as usize + k as usize)
    }

    /// Inverse of [`index_of`](Self::index_of).
    pub fn variable(&self, index: usize) -> Result<(usize, Band, u32)> {
        if index >= self.dim() {
            return Err(Error::structural(format!("variable index {index} >= dim {}", self.dim())));
        }
        let classical_start = self.block_start(Band::Classical);
        let (band, offset) = if index < classical_start {
            (Band::Quantum, index)
        } else {
            (Band::Classical, index - classical_start)
        };
        let b = self.bits(band) as usize;
        Ok((offset / b, band, (offset % b) as u32))
    }

    /// Phase level of element `n` in `band` encoded in `bits`.
    pub fn level(&self, bits: &[bool], n: usize, band: Band) -> u32 {
        let b = self.bits(band) as usize;
        let start = self.block_start(band) + n * b;
        bits[start..start + b]
            .iter()
            .enumerate()
            .fold(0u32, |acc, (k, &x)| acc | (u32::from(x) << k))
    }

    /// Encodes per-element phase levels into a decision vector.
    pub fn encode(&self, levels_quantum: &[u32], levels_classical: &[u32]) -> Result<Vec<bool>> {
        if levels_quantum.len() != self.n_elements || levels_classical.len() != self.n_elements {
            return Err(Error::structural("level arrays must have one entry per element"));
        }
        let mut bits = vec![false; self.dim()];
        for band in Band::BOTH {
            let levels = match band {
                Band::Quantum => levels_quantum,
                Band::Classical => levels_classical,
            };
            let b = self.bits(band);
            for (n, &m) in levels.iter().enumerate() {
                if m as usize >= self.levels(band) {
                    return Err(Error::structural(format!("level {m} needs more than {b} bits")));
                }
                for k in 0..b {
                    bits[self.block_start(band) + n * b as usize + k as usize] = (m >> k) & 1 == 1;
                }
            }
        }
        Ok(bits)
    }
}

/// Phase of level `m` with `bits` of resolution.
pub fn level_phase(m: u32, bits: u32) -> f64 {
    TAU * m as f64 / (1u64 << bits) as f64
}

/// A complete dual-band phase assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub bits: Vec<bool>,
    pub phases_quantum: Vec<f64>,
    pub phases_classical: Vec<f64>,
}

impl PhaseConfig {
    pub fn zeros(layout: &VariableLayout) -> Self {
        Self {
            bits: vec![false; layout.dim()],
            phases_quantum: vec![0.0; layout.n_elements],
            phases_classical: vec![0.0; layout.n_elements],
        }
    }

    pub fn phases(&self, band: Band) -> &[f64] {
        match band {
            Band::Quantum => &self.phases_quantum,
            Band::Classical => &self.phases_classical,
        }
    }
}

/// Decodes a decision vector into per-element quantized phases.
pub fn decode_phases(bits: &[bool], layout: &VariableLayout) -> Result<PhaseConfig> {
    if bits.len() != layout.dim() {
        return Err(Error::structural(format!(
            "decision vector has {} bits, layout needs {}",
            bits.len(),
            layout.dim()
        )));
    }
    let decode_band = |band: Band| -> Vec<f64> {
        (0..layout.n_elements)
            .map(|n| level_phase(layout.level(bits, n, band), layout.bits(band)))
            .collect()
    };
    Ok(PhaseConfig {
        bits: bits.to_vec(),
        phases_quantum: decode_band(Band::Quantum),
        phases_classical: decode_band(Band::Classical),
    })
}

/// Direct and per-element cascade gains for both bands at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    pub direct_quantum: ComplexGain,
    pub direct_classical: ComplexGain,
    pub cascade_quantum: Vec<ComplexGain>,
    pub cascade_classical: Vec<ComplexGain>,
}

impl ChannelState {
    pub fn new(
        direct_quantum: ComplexGain,
        direct_classical: ComplexGain,
        cascade_quantum: Vec<ComplexGain>,
        cascade_classical: Vec<ComplexGain>,
    ) -> Result<Self> {
        if cascade_quantum.len() != cascade_classical.len() {
            return Err(Error::structural("cascade arrays must have equal length"));
        }
        Ok(Self { direct_quantum, direct_classical, cascade_quantum, cascade_classical })
    }

    /// A state without any RIS.
    pub fn direct_only(direct_quantum: ComplexGain, direct_classical: ComplexGain) -> Self {
        Self { direct_quantum, direct_classical, cascade_quantum: Vec::new(), cascade_classical: Vec::new() }
    }

    pub fn n_elements(&self) -> usize {
        self.cascade_quantum.len()
    }

    pub fn direct(&self, band: Band) -> ComplexGain {
        match band {
            Band::Quantum => self.direct_quantum,
            Band::Classical => self.direct_classical,
        }
    }

    pub fn cascades(&self, band: Band) -> &[ComplexGain] {
        match band {
            Band::Quantum => &self.cascade_quantum,
            Band::Classical => &self.cascade_classical,
        }
    }

    /// Multiplies every deterministic amplitude by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |v: &[ComplexGain]| v.iter().map(|g| g.scaled(factor)).collect();
        Self {
            direct_quantum: self.direct_quantum.scaled(factor),
            direct_classical: self.direct_classical.scaled(factor),
            cascade_quantum: scale(&self.cascade_quantum),
            cascade_classical: scale(&self.cascade_classical),
        }
    }
}

/// Band-specific inputs for the cascade model.
#[derive(Debug, Clone, Copy)]
pub enum BandParams<'a> {
    Quantum(&'a OpticalParams),
    Classical(&'a RfParams),
}

/// Per-element RIS cascade gains for one band.
///
/// Each element's path is the satellite-to-RIS Friis factor over the slant
/// range, times the RIS-to-ground Friis factor over `ris_to_ground_km`, the
/// end-point antenna gains, the cell gain, and the band's atmospheric factor
/// on the long segment. The short RIS-to-ground hop is lossless. Per-element
/// phase offsets are uniform on `[0, 2π)` from `seed`.
pub fn cascade_gains(
    params: BandParams<'_>,
    cfg: &RisConfig,
    geom: &LinkGeometry,
    seed: u64,
    amplitude_scale: f64,
) -> Result<Vec<ComplexGain>> {
    let (wavelength, antennas, segment) = match params {
        BandParams::Quantum(p) => (
            p.wavelength_m,
            (optical_tx_gain(p)? * optical_rx_gain(p)).sqrt(),
            optical_extinction(p, geom),
        ),
        BandParams::Classical(p) => (
            p.wavelength_m,
            (p.tx_gain * p.rx_gain).sqrt(),
            rf_impairment_amplitude(p, geom),
        ),
    };
    let amplitude = friis_amplitude(wavelength, geom.slant_range_km)
        * friis_amplitude(wavelength, cfg.ris_to_ground_km)
        * antennas
        * cfg.element_gain
        * segment
        * amplitude_scale;
    let carrier = propagation_phase(geom.slant_range_km + cfg.ris_to_ground_km, wavelength);
    let mut rng = rng_from_seed(seed);
    Ok((0..cfg.n_elements)
        .map(|_| {
            let offset: f64 = rng.random_range(0.0..TAU);
            ComplexGain::new(amplitude, carrier + offset)
        })
        .collect())
}

/// `H_direct + Σ_n g_n e^{jθ_n}` as a complex number.
pub fn composite_complex(direct: ComplexGain, cascades: &[ComplexGain], phases: &[f64]) -> Complex64 {
    cascades
        .iter()
        .zip(phases)
        .fold(direct.to_complex(), |acc, (g, &theta)| {
            acc + Complex64::from_polar(g.amplitude, g.phase_rad + theta)
        })
}

/// RIS-assisted composite gain.
pub fn composite_gain(direct: ComplexGain, cascades: &[ComplexGain], phases: &[f64]) -> Result<ComplexGain> {
    if cascades.len() != phases.len() {
        return Err(Error::structural(format!(
            "{} cascades but {} phases",
            cascades.len(),
            phases.len()
        )));
    }
    if cascades.iter().all(|g| g.amplitude == 0.0) {
        return Ok(direct);
    }
    Ok(composite_complex(direct, cascades, phases).into())
}

/// Greedy per-element alignment to the direct path: picks the level that
/// maximises `Re(g_n e^{jθ} e^{-j∠H_direct})`, lowest level on ties.
pub fn best_quantized_alignment(direct: ComplexGain, cascades: &[ComplexGain], bits: u32) -> Vec<u32> {
    let levels = 1u32 << bits;
    cascades
        .iter()
        .map(|g| {
            let tie_tol = 1e-12 * g.amplitude;
            let mut best = (0u32, f64::NEG_INFINITY);
            for m in 0..levels {
                let projection =
                    g.amplitude * (g.phase_rad + level_phase(m, bits) - direct.phase_rad).cos();
                if projection > best.1 + tie_tol {
                    best = (m, projection);
                }
            }
            best.0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GeometryParams;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn layout_indexing() {
        let layout = VariableLayout::new(100, 2, 2);
        assert_eq!(layout.dim(), 400);
        assert_eq!(layout.index_of(0, Band::Quantum, 0).unwrap(), 0);
        assert_eq!(layout.index_of(0, Band::Classical, 0).unwrap(), 200);
        assert_eq!(layout.index_of(3, Band::Quantum, 1).unwrap(), 7);
        assert!(layout.index_of(100, Band::Quantum, 0).is_err());
        assert!(layout.index_of(0, Band::Classical, 2).is_err());
        for i in 0..layout.dim() {
            let (n, band, k) = layout.variable(i).unwrap();
            assert_eq!(layout.index_of(n, band, k).unwrap(), i);
        }
        assert!(layout.variable(400).is_err());
    }

    #[test]
    fn decode_examples() {
        let layout = VariableLayout::new(1, 2, 2);
        let phase = |q: [bool; 2]| decode_phases(&[q[0], q[1], false, false], &layout).unwrap().phases_quantum[0];
        assert_eq!(phase([false, false]), 0.0);
        assert!((phase([true, false]) - FRAC_PI_2).abs() < 1e-15);
        assert!((phase([true, true]) - 1.5 * PI).abs() < 1e-15);
        assert!(matches!(decode_phases(&[true], &layout), Err(Error::Structural(_))));
    }

    #[test]
    fn encode_inverts_decode() {
        let layout = VariableLayout::new(3, 2, 3);
        let bits = layout.encode(&[0, 3, 2], &[7, 1, 4]).unwrap();
        assert_eq!((0..3).map(|n| layout.level(&bits, n, Band::Quantum)).collect::<Vec<_>>(), vec![0, 3, 2]);
        assert_eq!((0..3).map(|n| layout.level(&bits, n, Band::Classical)).collect::<Vec<_>>(), vec![7, 1, 4]);
        assert!(layout.encode(&[4, 0, 0], &[0, 0, 0]).is_err());
    }

    fn link() -> (LinkGeometry, OpticalParams) {
        let geom = LinkGeometry::at_degrees(45.0, &GeometryParams::default()).unwrap();
        (geom, OpticalParams::default())
    }

    #[test]
    fn cascade_edge_cases() {
        let (geom, optical) = link();
        let empty = RisConfig { n_elements: 0, ..Default::default() };
        assert!(cascade_gains(BandParams::Quantum(&optical), &empty, &geom, 1, 1.0).unwrap().is_empty());

        let transparent = RisConfig { n_elements: 8, element_gain: 0.0, ..Default::default() };
        let g = cascade_gains(BandParams::Quantum(&optical), &transparent, &geom, 1, 1.0).unwrap();
        assert!(g.iter().all(|g| g.amplitude == 0.0));

        let cfg = RisConfig { n_elements: 16, ..Default::default() };
        let a = cascade_gains(BandParams::Quantum(&optical), &cfg, &geom, 42, 1.0).unwrap();
        let b = cascade_gains(BandParams::Quantum(&optical), &cfg, &geom, 42, 1.0).unwrap();
        assert_eq!(a, b);
        let c = cascade_gains(BandParams::Quantum(&optical), &cfg, &geom, 43, 1.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn composite_examples() {
        let direct = ComplexGain::new(1.0, 0.0);
        assert_eq!(composite_gain(direct, &[], &[]).unwrap(), direct);

        let aligned = [ComplexGain::new(0.1, 0.0), ComplexGain::new(0.1, 0.0)];
        let h = composite_gain(direct, &aligned, &[0.0, 0.0]).unwrap();
        assert!((h.amplitude - 1.2).abs() < 1e-12 && h.phase_rad.abs() < 1e-12);

        let h = composite_gain(direct, &[ComplexGain::new(0.1, PI)], &[PI]).unwrap();
        assert!((h.amplitude - 1.1).abs() < 1e-12);
        assert!(h.phase_rad.abs() < 1e-12 || (h.phase_rad - TAU).abs() < 1e-12);

        assert!(composite_gain(direct, &aligned, &[0.0]).is_err());
    }

    #[test]
    fn alignment_examples() {
        let direct = ComplexGain::new(1.0, 0.7);
        assert_eq!(best_quantized_alignment(direct, &[ComplexGain::new(0.2, 0.7)], 2), vec![0]);
        let off = ComplexGain::new(0.2, 0.7 + 100f64.to_radians());
        assert_eq!(best_quantized_alignment(direct, &[off], 2), vec![3]);
        let orthogonal = ComplexGain::new(0.2, 0.7 + FRAC_PI_2);
        assert_eq!(best_quantized_alignment(direct, &[orthogonal], 1), vec![0]);
    }

    #[test]
    fn scaled_state_scales_everything() {
        let s = ChannelState::new(
            ComplexGain::new(2.0, 0.1),
            ComplexGain::new(3.0, 0.2),
            vec![ComplexGain::new(1.0, 0.3)],
            vec![ComplexGain::new(0.5, 0.4)],
        )
        .unwrap();
        let t = s.scaled(0.5);
        assert_eq!(t.direct_quantum.amplitude, 1.0);
        assert_eq!(t.cascade_classical[0].amplitude, 0.25);
        assert_eq!(t.cascade_quantum[0].phase_rad, 0.3);
    }
}
