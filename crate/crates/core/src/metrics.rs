//! Receiver metrics and the joint QBER/SNR cost.
//!
//! The RF side uses SNR, QPSK BER and spectral efficiency; the quantum side
//! uses visibility, QBER and secure key rate. [`MetricModel`] bundles the
//! constants needed to go from the two composite channel powers
//! `|H_Q^tot|²`, `|H_C^tot|²` to a full [`Metrics`] record, which is what the
//! optimizers and the sweep harness consume.

use std::f64::consts::{LN_2, SQRT_2};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::channels::{ComplexGain, OpticalParams, RfParams};
use crate::error::{Error, Result};

pub const BOLTZMANN: f64 = 1.380649e-23;

/// BB84 QBER above which no key can be distilled.
pub const BB84_QBER_LIMIT: f64 = 0.11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub snr_linear: f64,
    pub ber: f64,
    pub qber: f64,
    /// Secure key rate after clamping at zero.
    pub skr_bits_s: f64,
    /// The key-rate expression before clamping; negative when no key survives.
    pub skr_unclamped: f64,
    pub cost: f64,
}

impl Metrics {
    pub fn snr_db(&self) -> f64 {
        10.0 * self.snr_linear.log10()
    }

    pub fn is_secure(&self) -> bool {
        self.qber <= BB84_QBER_LIMIT
    }
}

/// Gaussian tail probability `Q(x) = P[Z > x]`.
pub fn gaussian_q(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Thermal noise power `k_B T B` in watts.
pub fn noise_power_w(rf: &RfParams) -> f64 {
    BOLTZMANN * rf.sys_temp_k * rf.bandwidth_hz
}

/// `P_t |H_C^tot|² / (k_B T B)`.
///
/// Antenna gains are already inside `H_C` (see
/// [`rf_direct_gain`](crate::channels::rf_direct_gain)) and are not applied a
/// second time here.
pub fn snr(rf: &RfParams, h_tot: ComplexGain) -> f64 {
    rf.tx_power_w * h_tot.power() / noise_power_w(rf)
}

/// QPSK bit error rate `Q(sqrt(2Γ))`.
pub fn ber_qpsk(snr: f64) -> f64 {
    gaussian_q((2.0 * snr.max(0.0)).sqrt())
}

/// Turbulence-degraded visibility `V0 exp(-σ_φ² / 2)`.
pub fn visibility(v0: f64, phase_variance: f64) -> f64 {
    v0 * (-phase_variance / 2.0).exp()
}

/// `½ (1 - V h) + p_dark`, clamped to `[0, ½ + p_dark]`.
pub fn qber(visibility: f64, h_norm_sq: f64, p_dark: f64) -> f64 {
    (0.5 * (1.0 - visibility * h_norm_sq) + p_dark).clamp(0.0, 0.5 + p_dark)
}

pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// `R_raw [1 - 2 h₂(ε)] - f_EC R_raw h₂(ε)`, without clamping.
pub fn skr_unclamped(raw_rate: f64, qber: f64, f_ec: f64) -> f64 {
    let h = binary_entropy(qber);
    raw_rate * (1.0 - 2.0 * h) - f_ec * raw_rate * h
}

/// Secure key rate, clamped at zero.
pub fn skr(raw_rate: f64, qber: f64, f_ec: f64) -> f64 {
    skr_unclamped(raw_rate, qber, f_ec).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// Range normalisation at the operating thresholds.
    #[default]
    Static,
    /// Swing weights re-normalised against the current SNR.
    Swing,
    /// Use `alpha` and `beta` as given.
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    pub alpha: f64,
    pub beta: f64,
    pub qber_threshold: f64,
    pub snr_target: f64,
    pub beta_o: f64,
    pub mode: WeightMode,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.011 / 101f64.log2(),
            qber_threshold: 0.011,
            snr_target: 100.0,
            beta_o: 0.01,
            mode: WeightMode::Static,
        }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err(Error::Config("weights.alpha and weights.beta must be >= 0".into()));
        }
        if !(self.qber_threshold > 0.0 && self.qber_threshold <= BB84_QBER_LIMIT) {
            return Err(Error::Config("weights.qber_threshold must lie in (0, 0.11]".into()));
        }
        if !(self.snr_target > 0.0) {
            return Err(Error::Config("weights.snr_target must be positive".into()));
        }
        Ok(())
    }

    /// Resolves `(α, β)` for a channel operating at `operating_snr`.
    /// Only the swing mode looks at the SNR.
    pub fn resolve(&self, operating_snr: f64) -> Result<Weights> {
        match self.mode {
            WeightMode::Static => static_weights(self),
            WeightMode::Swing => swing_weights(self, operating_snr),
            WeightMode::Manual => Ok(Weights { alpha: self.alpha, beta: self.beta }),
        }
    }
}

/// Resolved scalar weights of `F = α ε - β log₂(1 + Γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub alpha: f64,
    pub beta: f64,
}

/// `α = 1`, `β = ε★ / log₂(1 + Γ★)`.
pub fn static_weights(cw: &CostWeights) -> Result<Weights> {
    if !(cw.snr_target > 0.0) {
        return Err(Error::domain("SNR target must be positive"));
    }
    Ok(Weights { alpha: 1.0, beta: cw.qber_threshold / (1.0 + cw.snr_target).log2() })
}

/// `α = 1/ε★`, `β = β₀ log₂(1 + Γ★) / log₂(1 + Γ)`.
pub fn swing_weights(cw: &CostWeights, current_snr: f64) -> Result<Weights> {
    if !(current_snr > 0.0 && current_snr.is_finite()) {
        return Err(Error::domain(format!("swing weights need a positive SNR, got {current_snr}")));
    }
    if !(cw.qber_threshold > 0.0) {
        return Err(Error::domain("QBER threshold must be positive"));
    }
    Ok(Weights {
        alpha: 1.0 / cw.qber_threshold,
        beta: cw.beta_o * (1.0 + cw.snr_target).log2() / (1.0 + current_snr).log2(),
    })
}

/// `F = α ε - β log₂(1 + Γ)`.
pub fn cost(qber: f64, snr: f64, weights: Weights) -> f64 {
    weights.alpha * qber - weights.beta * (1.0 + snr).log2()
}

/// Constants that pin the model to measured anchors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    /// Raw key rate (bits/s) per unit of normalised transmittance
    /// `|H_Q|² / |H_ref|²`.
    pub raw_rate_scale: f64,
    pub effective_visibility: f64,
    /// `|H_ref|²`. When absent the uncalibrated QBER uses `|H_Q|²` directly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_transmittance: Option<f64>,
    pub rf_gain_offset_db: f64,
    /// Multiplier on the optical-band cascade amplitude.
    pub element_amp_scale: f64,
}

impl Calibration {
    /// Raw model: visibility from phase variance, no normalisation, no offsets.
    pub fn uncalibrated(optical: &OpticalParams) -> Self {
        Self {
            raw_rate_scale: 1.0,
            effective_visibility: visibility(optical.baseline_visibility, optical.phase_variance),
            reference_transmittance: None,
            rf_gain_offset_db: 0.0,
            element_amp_scale: 1.0,
        }
    }

    /// Normalised transmittance `h = T / (T + T_ref)`; `min(T, 1)` without a reference.
    ///
    /// The saturating form is the background-count QBER model
    /// `ε = (½ Y₀ + e_d ηT) / (Y₀ + ηT)` rewritten as `½(1 - V h)`, with
    /// `V = 1 - 2e_d` and `T_ref = Y₀/η`.
    pub fn normalized_transmittance(&self, transmittance: f64) -> f64 {
        match self.reference_transmittance {
            Some(r) => transmittance / (transmittance + r),
            None => transmittance.clamp(0.0, 1.0),
        }
    }

    fn normalized_transmittance_slope(&self, transmittance: f64) -> f64 {
        match self.reference_transmittance {
            Some(r) => r / ((transmittance + r) * (transmittance + r)),
            None if (0.0..1.0).contains(&transmittance) => 1.0,
            None => 0.0,
        }
    }

    pub fn raw_rate(&self, transmittance: f64) -> f64 {
        match self.reference_transmittance {
            Some(r) => self.raw_rate_scale * transmittance / r,
            None => self.raw_rate_scale * transmittance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.raw_rate_scale > 0.0
            && self.effective_visibility > 0.0
            && self.effective_visibility <= 1.0
            && self.reference_transmittance.is_none_or(|r| r > 0.0)
            && self.rf_gain_offset_db.is_finite()
            && self.element_amp_scale >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid calibration constants: {self:?}")))
        }
    }
}

/// Everything needed to score a pair of composite channel powers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricModel {
    pub calibration: Calibration,
    pub dark_count_prob: f64,
    pub ec_inefficiency: f64,
    /// `Γ = snr_per_power · |H_C|²`.
    pub snr_per_power: f64,
    pub weights: Weights,
}

impl MetricModel {
    pub fn new(optical: &OpticalParams, rf: &RfParams, calibration: Calibration, weights: Weights) -> Self {
        let snr_per_power = rf.tx_power_w * 10f64.powf(calibration.rf_gain_offset_db / 10.0) / noise_power_w(rf);
        Self {
            calibration,
            dark_count_prob: optical.dark_count_prob,
            ec_inefficiency: optical.ec_inefficiency,
            snr_per_power,
            weights,
        }
    }

    /// Builds the model with weights resolved against the direct-path SNR.
    ///
    /// Swing weights are frozen at the operating point: re-normalising by
    /// the SNR of each candidate would cancel the SNR term from the cost.
    pub fn for_direct_rf(
        optical: &OpticalParams,
        rf: &RfParams,
        calibration: Calibration,
        cw: &CostWeights,
        direct_classical: ComplexGain,
    ) -> Result<Self> {
        let probe = Self::new(optical, rf, calibration, Weights { alpha: 1.0, beta: 0.0 });
        let weights = cw.resolve(probe.snr(direct_classical.power()))?;
        Ok(Self { weights, ..probe })
    }

    pub fn snr(&self, classical_power: f64) -> f64 {
        self.snr_per_power * classical_power
    }

    pub fn qber(&self, quantum_power: f64) -> f64 {
        let h = self.calibration.normalized_transmittance(quantum_power);
        qber(self.calibration.effective_visibility, h, self.dark_count_prob)
    }

    pub fn cost(&self, quantum_power: f64, classical_power: f64) -> f64 {
        cost(self.qber(quantum_power), self.snr(classical_power), self.weights)
    }

    pub fn evaluate(&self, quantum_power: f64, classical_power: f64) -> Metrics {
        let snr = self.snr(classical_power);
        let qber = self.qber(quantum_power);
        let raw = self.calibration.raw_rate(quantum_power);
        let skr_raw = skr_unclamped(raw, qber, self.ec_inefficiency);
        Metrics {
            snr_linear: snr,
            ber: ber_qpsk(snr),
            qber,
            skr_bits_s: skr_raw.max(0.0),
            skr_unclamped: skr_raw,
            cost: cost(qber, snr, self.weights),
        }
    }

    /// `∂F/∂|H_Q|²`, ignoring the QBER clamp.
    pub fn cost_slope_quantum(&self, quantum_power: f64) -> f64 {
        -0.5 * self.weights.alpha
            * self.calibration.effective_visibility
            * self.calibration.normalized_transmittance_slope(quantum_power)
    }

    /// `∂F/∂|H_C|²`.
    pub fn cost_slope_classical(&self, classical_power: f64) -> f64 {
        let snr = self.snr(classical_power);
        -self.weights.beta * self.snr_per_power / ((1.0 + snr) * LN_2)
    }
}
