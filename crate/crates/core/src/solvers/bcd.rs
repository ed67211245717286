use rand::Rng;

use super::{SolverConfig, SolverResult, Tracker};
use crate::objective::{ExactObjective, Objective, Walker};
use crate::ris::Band;
use crate::rng::rng_from_seed;

/// Joint `(quantum, classical)` level options of one element, ordered so
/// that earlier options have lexicographically smaller bit patterns.
fn option_order(bits_quantum: u32, bits_classical: u32) -> Vec<(u32, u32)> {
    let total = bits_quantum + bits_classical;
    (0u32..1 << total)
        .map(|pattern| {
            // bit j of the element's pattern, counted from the left
            let bit = |j: u32| (pattern >> (total - 1 - j)) & 1;
            let q = (0..bits_quantum).fold(0, |acc, k| acc | bit(k) << k);
            let c = (0..bits_classical).fold(0, |acc, k| acc | bit(bits_quantum + k) << k);
            (q, c)
        })
        .collect()
}

/// [`block_coordinate_descent`] with a callback receiving the objective value
/// after every element update.
pub fn block_coordinate_descent_with(
    objective: &ExactObjective,
    cfg: &SolverConfig,
    mut on_update: impl FnMut(f64),
) -> SolverResult {
    let layout = *objective.layout();
    let options = option_order(layout.bits_quantum, layout.bits_classical);
    let mut tracker = Tracker::new();
    let mut rng = rng_from_seed(cfg.seed);
    for restart in 0..cfg.restarts {
        let start = if restart == 0 {
            vec![false; layout.dim()]
        } else {
            (0..layout.dim()).map(|_| rng.random()).collect()
        };
        let mut w = objective.walker(&start);
        tracker.offer_walker(&w);
        if layout.n_elements == 0 {
            break;
        }
        for _ in 0..cfg.max_iters {
            let mut changed = false;
            for n in 0..layout.n_elements {
                let current = (w.level(n, Band::Quantum), w.level(n, Band::Classical));
                let mut best = (current, w.value());
                for &(q, c) in &options {
                    if (q, c) == current {
                        continue;
                    }
                    let v = w.element_value(n, q, c);
                    tracker.evaluations += 1;
                    if v < best.1 {
                        best = ((q, c), v);
                    }
                }
                if best.0 != current {
                    w.set_element(n, best.0 .0, best.0 .1);
                    changed = true;
                    tracker.offer_walker(&w);
                }
                on_update(w.value());
            }
            if !changed {
                break;
            }
        }
    }
    tracker.finish(objective)
}

/// Cyclic per-element exhaustive search on the exact objective.
///
/// Elements are visited in index order; each one tries all
/// `2^b_Q · 2^b_C` joint options with the rest held fixed and moves only on
/// strict improvement. Sweeps repeat until one makes no change or
/// `max_iters` sweeps have run. Later restarts begin from random vectors.
pub fn block_coordinate_descent(objective: &ExactObjective, cfg: &SolverConfig) -> SolverResult {
    block_coordinate_descent_with(objective, cfg, |_| {})
}
