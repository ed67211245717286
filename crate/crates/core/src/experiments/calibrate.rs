use crate::error::{Error, Result};
use crate::metrics::{binary_entropy, Calibration};
use crate::solvers::optimize_secure;

use super::config::RunConfig;
use super::scenario::Scenario;

const RELATIVE_TOLERANCE: f64 = 1e-6;
const MAX_BISECTIONS: usize = 400;

/// Finds a root of `f` on `[lo, hi]` by bisection, stopping once the bracket
/// is narrower than `tol·max(|mid|, 1)`.
pub fn bisect(mut f: impl FnMut(f64) -> Result<f64>, mut lo: f64, mut hi: f64, tol: f64, what: &str) -> Result<f64> {
    let (mut f_lo, f_hi) = (f(lo)?, f(hi)?);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::Calibration(format!(
            "{what}: no sign change on [{lo:.6e}, {hi:.6e}] (f = {f_lo:.6e}, {f_hi:.6e})"
        )));
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        if f_mid == 0.0 || (hi - lo).abs() <= tol * mid.abs().max(1.0) {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Fits the four calibration constants in order:
///
/// 1. `rf_gain_offset_db` so the bare-link SNR hits the SNR anchor;
/// 2. `|H_ref|²` and `V_eff` so the bare-link QBER hits both QBER anchors;
/// 3. `raw_rate_scale` so the bare-link SKR hits the SKR anchor;
/// 4. `element_amp_scale` so the optimized surface gives the anchored SKR
///    gain (skipped when `anchors.ris_elements == 0`).
///
/// Each step is a one-dimensional bisection that later steps do not disturb.
pub fn calibrate(cfg: &RunConfig) -> Result<Calibration> {
    cfg.validate()?;
    let a = &cfg.anchors;
    let mut cal = Calibration {
        raw_rate_scale: 1.0,
        effective_visibility: 1.0,
        reference_transmittance: Some(1.0),
        rf_gain_offset_db: 0.0,
        element_amp_scale: 1.0,
    };
    let bare = |cal: &Calibration, elevation: f64| Scenario::build(cfg, cal, elevation, 0, 0, 1.0);

    // 1. SNR offset; SNR in dB is affine in the offset.
    let raw_snr_db = bare(&cal, a.snr_elevation_deg)?.baseline().snr_db();
    cal.rf_gain_offset_db = bisect(
        |off| Ok(raw_snr_db + off - a.snr_db),
        -400.0,
        400.0,
        RELATIVE_TOLERANCE * 1e-3,
        "rf_gain_offset_db",
    )?;

    // 2. Reference transmittance; V_eff follows from the low-elevation anchor.
    let t_low = bare(&cal, a.qber_low_elevation_deg)?.objective.state().direct_quantum.power();
    let t_high = bare(&cal, a.qber_high_elevation_deg)?.objective.state().direct_quantum.power();
    let pd = cfg.optical.dark_count_prob;
    let contrast_low = 1.0 - 2.0 * (a.qber_low - pd);
    let visibility_for = |r: f64| contrast_low * (t_low + r) / t_low;
    let qber_high = |r: f64| {
        let h = t_high / (t_high + r);
        (0.5 * (1.0 - visibility_for(r) * h) + pd).clamp(0.0, 0.5 + pd)
    };
    let ln_r = bisect(
        |x| Ok(qber_high(x.exp()) - a.qber_high),
        t_low.ln() - 60.0,
        t_low.ln() + 20.0,
        RELATIVE_TOLERANCE * 1e-2,
        "reference transmittance",
    )?;
    let r = ln_r.exp();
    let visibility = visibility_for(r);
    if !(visibility > 0.0 && visibility <= 1.0) {
        return Err(Error::Calibration(format!(
            "QBER anchors need effective visibility {visibility:.6}, outside (0, 1]"
        )));
    }
    cal.reference_transmittance = Some(r);
    cal.effective_visibility = visibility;

    // 3. Raw-rate scale, fitted in log space.
    let skr_point = bare(&cal, a.skr_elevation_deg)?;
    let qber = skr_point.baseline().qber;
    let h = binary_entropy(qber);
    if 1.0 - 2.0 * h - cfg.optical.ec_inefficiency * h <= 0.0 {
        return Err(Error::Calibration(format!(
            "bare-link QBER {qber:.5} at {} deg leaves no secret key",
            a.skr_elevation_deg
        )));
    }
    let ln_scale = bisect(
        |x| {
            let trial = Calibration { raw_rate_scale: x.exp(), ..cal };
            Ok(bare(&trial, a.skr_elevation_deg)?.baseline().skr_bits_s.ln() - a.skr_bits_s.ln())
        },
        -200.0,
        200.0,
        RELATIVE_TOLERANCE,
        "raw_rate_scale",
    )?;
    cal.raw_rate_scale = ln_scale.exp();

    // 4. Optical cascade amplitude.
    if a.ris_elements > 0 {
        let gain_minus_target = |ln_s: f64| -> Result<f64> {
            let trial = Calibration { element_amp_scale: ln_s.exp(), ..cal };
            let scenario = Scenario::build(cfg, &trial, a.ris_elevation_deg, a.ris_elements, 0, 1.0)?;
            let solver = cfg.solver.with_seed(scenario.solver_seed(cfg));
            let best = optimize_secure(&scenario.objective, &solver)?;
            let skr = scenario.objective.metrics(&best.best_bits)?.skr_bits_s;
            Ok(skr / scenario.baseline().skr_bits_s - 1.0 - a.ris_skr_gain)
        };
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        let mut f_hi = gain_minus_target(hi)?;
        let mut steps = 0;
        while f_hi < 0.0 {
            lo = hi;
            hi += std::f64::consts::LN_2 * 4.0;
            f_hi = gain_minus_target(hi)?;
            steps += 1;
            if steps > 200 {
                return Err(Error::Calibration("element_amp_scale: SKR gain anchor unreachable".into()));
            }
        }
        if steps == 0 {
            let mut f_lo = f_hi;
            while f_lo >= 0.0 {
                hi = lo;
                lo -= std::f64::consts::LN_2 * 4.0;
                f_lo = gain_minus_target(lo)?;
                steps += 1;
                if steps > 200 {
                    return Err(Error::Calibration("element_amp_scale: SKR gain does not vanish".into()));
                }
            }
        }
        cal.element_amp_scale = bisect(gain_minus_target, lo, hi, RELATIVE_TOLERANCE * 1e-2, "element_amp_scale")?.exp();
    }

    cal.validate()?;
    Ok(cal)
}
