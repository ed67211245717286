#![allow(dead_code)]

use std::f64::consts::TAU;

use rand::Rng;
use risqkd::channels::{ComplexGain, OpticalParams, RfParams};
use risqkd::metrics::{Calibration, CostWeights, MetricModel, WeightMode};
use risqkd::objective::ExactObjective;
use risqkd::ris::{ChannelState, VariableLayout};
use risqkd::rng::rng_from_seed;

/// Random exact objective with `n` elements and `bits` per band.
///
/// Cascade amplitudes are a sizeable fraction of the direct path so the
/// landscape has real structure; every other instance uses swing weights.
pub fn random_instance(seed: u64, n: usize, bits: u32) -> ExactObjective {
    let mut rng = rng_from_seed(seed);
    let optical = OpticalParams::default();
    let rf = RfParams::default();
    let cal = Calibration {
        raw_rate_scale: 1000.0,
        effective_visibility: rng.random_range(0.9..0.99),
        reference_transmittance: Some(rng.random_range(0.2..2.0)),
        rf_gain_offset_db: 0.0,
        element_amp_scale: 1.0,
    };
    let mode = if seed.is_multiple_of(2) { WeightMode::Static } else { WeightMode::Swing };
    let weights = CostWeights { mode, ..Default::default() };
    let probe = MetricModel::new(&optical, &rf, cal, risqkd::metrics::Weights { alpha: 1.0, beta: 0.0 });
    // |H_C|² giving an SNR between 3 and 300
    let rf_amp = (rng.random_range(3.0..300.0) / probe.snr_per_power).sqrt();
    let mut gain = |scale: f64| ComplexGain::new(scale * rng.random_range(0.05..0.6), rng.random_range(0.0..TAU));
    let cq: Vec<ComplexGain> = (0..n).map(|_| gain(1.0)).collect();
    let cc: Vec<ComplexGain> = (0..n).map(|_| gain(rf_amp)).collect();
    let dq = ComplexGain::new(1.0, rng.random_range(0.0..TAU));
    let dc = ComplexGain::new(rf_amp, rng.random_range(0.0..TAU));
    let state = ChannelState::new(dq, dc, cq, cc).unwrap();
    let model = MetricModel::for_direct_rf(&optical, &rf, cal, &weights, dc).unwrap();
    ExactObjective::new(state, VariableLayout::new(n, bits, bits), model).unwrap()
}

pub fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()) + 1e-15
}
