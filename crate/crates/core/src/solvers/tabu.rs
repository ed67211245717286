use rand::Rng;

use super::{SolverConfig, SolverResult, Tracker};
use crate::objective::{Objective, Walker};
use crate::rng::rng_from_seed;

const STALL_FACTOR: usize = 4;

/// Steepest single-flip descent with a recency tabu list.
///
/// A flipped bit stays tabu for the next `tabu_tenure` moves unless flipping
/// it would beat the best value seen so far. When every move is tabu the
/// oldest one is taken. Each restart runs `max_iters` moves; the first starts
/// from all zeros, later ones from random vectors. After `4·dim` moves
/// without a new best the walk jumps to a random vector.
pub fn tabu_search<O: Objective>(objective: &O, cfg: &SolverConfig) -> SolverResult {
    let dim = objective.dim();
    let mut tracker = Tracker::new();
    let mut rng = rng_from_seed(cfg.seed);
    for restart in 0..cfg.restarts {
        let start: Vec<bool> = if restart == 0 { vec![false; dim] } else { (0..dim).map(|_| rng.random()).collect() };
        let mut w = objective.walker(&start);
        tracker.offer_walker(&w);
        if dim == 0 {
            break;
        }
        // Move number at which each bit becomes free again.
        let mut free_at = vec![0usize; dim];
        let stall_limit = STALL_FACTOR * dim;
        let mut last_gain = 0usize;
        for step in 0..cfg.max_iters {
            if step - last_gain > stall_limit {
                let kick: Vec<bool> = (0..dim).map(|_| rng.random()).collect();
                w = objective.walker(&kick);
                tracker.offer_walker(&w);
                free_at.iter_mut().for_each(|f| *f = 0);
                last_gain = step;
            }
            let mut chosen: Option<(usize, f64)> = None;
            for (i, &free) in free_at.iter().enumerate() {
                let v = w.flipped_value(i);
                tracker.evaluations += 1;
                let allowed = free <= step || v < tracker.best_value();
                if allowed && chosen.is_none_or(|(_, best)| v < best) {
                    chosen = Some((i, v));
                }
            }
            let i = match chosen {
                Some((i, _)) => i,
                None => (0..dim).min_by_key(|&i| free_at[i]).expect("dim > 0"),
            };
            w.flip(i);
            free_at[i] = step + 1 + cfg.tabu_tenure;
            if w.value() < tracker.best_value() {
                last_gain = step;
            }
            tracker.offer_walker(&w);
        }
    }
    tracker.finish(objective)
}
