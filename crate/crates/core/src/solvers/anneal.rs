use rand::Rng;

use super::{SolverConfig, SolverResult, Tracker};
use crate::objective::{Objective, Walker};
use crate::rng::{rng_from_seed, split_seed};

const TEMPERATURE_SAMPLES: usize = 100;
const TEMPERATURE_LABEL: u64 = 0x7E;
const QUENCH_MAX_SWEEPS: usize = 100;

/// Ten times the standard deviation of the objective over 100 seeded
/// random vectors.
pub fn auto_temperature<O: Objective>(objective: &O, seed: u64) -> f64 {
    let dim = objective.dim();
    if dim == 0 {
        return 0.0;
    }
    let mut rng = rng_from_seed(split_seed(seed, &[TEMPERATURE_LABEL]));
    let mut bits = vec![false; dim];
    let values: Vec<f64> = (0..TEMPERATURE_SAMPLES)
        .map(|_| {
            bits.iter_mut().for_each(|b| *b = rng.random());
            objective.evaluate(&bits)
        })
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    10.0 * var.sqrt()
}

/// Single-flip Metropolis annealing with geometric cooling.
///
/// Each sweep proposes `dim` uniformly chosen flips and then multiplies the
/// temperature by `cooling_rate`. The first restart starts from all zeros,
/// later ones from random vectors. Every restart ends with a greedy
/// single-flip descent.
pub fn simulated_annealing<O: Objective>(objective: &O, cfg: &SolverConfig) -> SolverResult {
    let dim = objective.dim();
    let mut tracker = Tracker::new();
    let mut rng = rng_from_seed(cfg.seed);
    let t0 = cfg.initial_temp.unwrap_or_else(|| auto_temperature(objective, cfg.seed));
    if dim == 0 {
        let w = objective.walker(&[]);
        tracker.offer_walker(&w);
        return tracker.finish(objective);
    }
    for restart in 0..cfg.restarts {
        let start: Vec<bool> = if restart == 0 { vec![false; dim] } else { (0..dim).map(|_| rng.random()).collect() };
        let mut w = objective.walker(&start);
        tracker.offer_walker(&w);
        let mut temperature = t0;
        for _ in 0..cfg.max_iters {
            for _ in 0..dim {
                let i = rng.random_range(0..dim);
                let delta = w.flipped_value(i) - w.value();
                tracker.evaluations += 1;
                let accept = delta <= 0.0 || (temperature > 0.0 && rng.random::<f64>() < (-delta / temperature).exp());
                if accept {
                    w.flip(i);
                    if w.value() <= tracker.best_value() {
                        tracker.offer_walker(&w);
                    }
                }
            }
            temperature *= cfg.cooling_rate;
        }
        quench(&mut w, &mut tracker);
    }
    tracker.finish(objective)
}

fn quench<W: Walker>(w: &mut W, tracker: &mut Tracker) {
    for _ in 0..QUENCH_MAX_SWEEPS {
        let mut improved = false;
        for i in 0..w.bits().len() {
            tracker.evaluations += 1;
            if w.flipped_value(i) < w.value() {
                w.flip(i);
                improved = true;
            }
        }
        tracker.offer_walker(w);
        if !improved {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::QuboModel;
    use crate::solvers::SolverKind;

    fn frustrated() -> QuboModel {
        QuboModel::new(
            vec![1.0, -2.0, 0.5, -0.3, 0.8],
            vec![(0, 1, 1.5), (1, 2, -2.0), (2, 3, 1.0), (3, 4, -1.2), (0, 4, 0.7), (1, 3, 0.4)],
            0.0,
        )
        .unwrap()
    }

    fn cfg(seed: u64) -> SolverConfig {
        SolverConfig { kind: SolverKind::Anneal, seed, max_iters: 50, ..Default::default() }
    }

    #[test]
    fn deterministic_per_seed() {
        let m = frustrated();
        assert_eq!(simulated_annealing(&m, &cfg(9)), simulated_annealing(&m, &cfg(9)));
    }

    #[test]
    fn zero_temperature_is_descent() {
        let m = frustrated();
        let r = simulated_annealing(&m, &SolverConfig { initial_temp: Some(0.0), restarts: 1, ..cfg(1) });
        assert!(r.trace.windows(2).all(|p| p[1].best_value <= p[0].best_value));
        let w = m.walker(&r.best_bits);
        assert!((0..m.dim()).all(|i| w.flipped_value(i) >= w.value()));
    }

    #[test]
    fn finds_small_optimum_and_rescores() {
        let m = frustrated();
        let r = simulated_annealing(&m, &cfg(3));
        let oracle = crate::solvers::brute_force(&m).unwrap();
        assert_eq!(r.best_value, oracle.best_value);
        assert_eq!(r.best_value, m.evaluate(&r.best_bits));
    }

    #[test]
    fn auto_temperature_is_scale_free() {
        let m = frustrated();
        let scaled = QuboModel::new(
            m.linear().iter().map(|c| 10.0 * c).collect(),
            m.couplings().iter().map(|&(i, j, v)| (i, j, 10.0 * v)).collect(),
            0.0,
        )
        .unwrap();
        let (a, b) = (auto_temperature(&m, 4), auto_temperature(&scaled, 4));
        assert!(a > 0.0 && (b / a - 10.0).abs() < 1e-9);
    }
}
