//! Minimizers for binary objectives.
//!
//! All solvers are single-threaded, own their RNG and are bit-reproducible for
//! a given `(seed, config, objective)`. Ties are broken towards the
//! lexicographically smallest bit vector (with `false < true`).

mod anneal;
mod bcd;
mod brute;
mod tabu;

pub use anneal::{auto_temperature, simulated_annealing};
pub use bcd::{block_coordinate_descent, block_coordinate_descent_with};
pub use brute::{brute_force, BRUTE_FORCE_MAX_DIM};
pub use tabu::tabu_search;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::BB84_QBER_LIMIT;
use crate::objective::{ExactObjective, Objective, Walker};
use crate::qubo::build_qubo;
use crate::rng::split_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Brute,
    Anneal,
    Tabu,
    #[default]
    Bcd,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Brute => "brute",
            SolverKind::Anneal => "anneal",
            SolverKind::Tabu => "tabu",
            SolverKind::Bcd => "bcd",
        }
    }
}

/// What the search moves over. Final answers are always scored exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Quadratic,
    #[default]
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub seed: u64,
    /// Sweeps for annealing and block-coordinate descent, moves for tabu.
    pub max_iters: usize,
    /// Annealing start temperature; derived from the objective when absent.
    pub initial_temp: Option<f64>,
    pub cooling_rate: f64,
    pub tabu_tenure: usize,
    pub restarts: usize,
    pub objective: ObjectiveKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kind: SolverKind::Bcd,
            seed: 0,
            max_iters: 1000,
            initial_temp: None,
            cooling_rate: 0.97,
            tabu_tenure: 8,
            restarts: 3,
            objective: ObjectiveKind::Exact,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cooling_rate > 0.0 && self.cooling_rate < 1.0) {
            return Err(Error::Config(format!("solver.cooling_rate must lie in (0, 1), got {}", self.cooling_rate)));
        }
        if self.tabu_tenure == 0 {
            return Err(Error::Config("solver.tabu_tenure must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Config("solver.restarts must be at least 1".into()));
        }
        if self.initial_temp.is_some_and(|t| !(t >= 0.0 && t.is_finite())) {
            return Err(Error::Config("solver.initial_temp must be finite and >= 0".into()));
        }
        if self.kind == SolverKind::Bcd && self.objective == ObjectiveKind::Quadratic {
            return Err(Error::Config("block-coordinate descent runs on the exact objective only".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: u64,
    pub best_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub best_bits: Vec<bool>,
    pub best_value: f64,
    pub evaluations: u64,
    pub feasible: bool,
    /// Best-so-far value each time it improved.
    pub trace: Vec<TracePoint>,
    /// Best visited configuration satisfying the side constraint.
    pub best_feasible: Option<(Vec<bool>, f64)>,
}

impl SolverResult {
    /// `iteration,best_value` lines with a header.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,best_value\n");
        for p in &self.trace {
            out.push_str(&format!("{},{}\n", p.iteration, p.best_value));
        }
        out
    }
}

fn improves(value: f64, bits: &[bool], best: Option<(&[bool], f64)>) -> bool {
    match best {
        None => true,
        Some((best_bits, best_value)) => value < best_value || (value == best_value && bits < best_bits),
    }
}

/// Running best, best feasible and trace.
struct Tracker {
    best: Option<(Vec<bool>, f64)>,
    best_feasible: Option<(Vec<bool>, f64)>,
    trace: Vec<TracePoint>,
    evaluations: u64,
}

impl Tracker {
    fn new() -> Self {
        Self { best: None, best_feasible: None, trace: Vec::new(), evaluations: 0 }
    }

    fn best_value(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.1)
    }

    fn offer(&mut self, bits: &[bool], value: f64, feasible: impl FnOnce() -> bool) {
        if improves(value, bits, self.best.as_ref().map(|(b, v)| (b.as_slice(), *v))) {
            self.best = Some((bits.to_vec(), value));
            self.trace.push(TracePoint { iteration: self.evaluations, best_value: value });
        }
        if improves(value, bits, self.best_feasible.as_ref().map(|(b, v)| (b.as_slice(), *v))) && feasible() {
            self.best_feasible = Some((bits.to_vec(), value));
        }
    }

    fn offer_walker<W: Walker>(&mut self, w: &W) {
        self.offer(w.bits(), w.value(), || w.feasible());
    }

    /// Re-scores the winners on `objective` so no cached value leaks out.
    fn finish<O: Objective>(self, objective: &O) -> SolverResult {
        let (best_bits, _) = self.best.unwrap_or_else(|| (vec![false; objective.dim()], 0.0));
        let best_value = objective.evaluate(&best_bits);
        let best_feasible = self.best_feasible.map(|(b, _)| {
            let v = objective.evaluate(&b);
            (b, v)
        });
        SolverResult {
            feasible: objective.feasible(&best_bits),
            best_bits,
            best_value,
            evaluations: self.evaluations,
            trace: self.trace,
            best_feasible,
        }
    }
}

/// Runs the configured heuristic on `objective` directly.
pub fn run_heuristic<O: Objective>(objective: &O, cfg: &SolverConfig) -> Result<SolverResult> {
    match cfg.kind {
        SolverKind::Brute => brute_force(objective),
        SolverKind::Anneal => Ok(simulated_annealing(objective, cfg)),
        SolverKind::Tabu => Ok(tabu_search(objective, cfg)),
        SolverKind::Bcd => Err(Error::Config("block-coordinate descent needs the exact objective".into())),
    }
}

/// Maximum build-solve-rebuild rounds for the quadratic objective.
pub const RELINEARIZATION_ROUNDS: usize = 4;

/// Minimizes the exact cost with the configured solver.
///
/// With `objective = quadratic` the search runs on a QUBO built about the
/// current point, the answer is re-scored exactly, and the QUBO is rebuilt
/// about it while the exact cost keeps improving.
pub fn optimize(objective: &ExactObjective, cfg: &SolverConfig) -> Result<SolverResult> {
    cfg.validate()?;
    match (cfg.kind, cfg.objective) {
        (SolverKind::Bcd, _) => Ok(block_coordinate_descent(objective, cfg)),
        (_, ObjectiveKind::Exact) => run_heuristic(objective, cfg),
        (_, ObjectiveKind::Quadratic) => {
            let mut tracker = Tracker::new();
            let mut point = vec![false; objective.dim()];
            let mut current = objective.evaluate(&point);
            tracker.offer(&point, current, || objective.feasible(&point));
            for round in 0..RELINEARIZATION_ROUNDS {
                let model = build_qubo(objective, &point)?;
                let sub = run_heuristic(&model, &cfg.with_seed(split_seed(cfg.seed, &[round as u64])))?;
                tracker.evaluations += sub.evaluations;
                let value = objective.evaluate(&sub.best_bits);
                tracker.offer(&sub.best_bits, value, || objective.feasible(&sub.best_bits));
                if value < current {
                    point = sub.best_bits;
                    current = value;
                } else {
                    break;
                }
            }
            Ok(tracker.finish(objective))
        }
    }
}

/// Applies the BB84 constraint `QBER ≤ 0.11` to a result.
///
/// An infeasible winner is replaced by the best feasible configuration the
/// solver visited; if there was none the outcome is [`Error::Infeasible`].
pub fn enforce_security(result: SolverResult, objective: &ExactObjective) -> Result<SolverResult> {
    let qber = objective.qber(&result.best_bits)?;
    if qber <= BB84_QBER_LIMIT {
        return Ok(SolverResult { feasible: true, ..result });
    }
    match result.best_feasible.clone() {
        Some((bits, _)) => {
            let value = objective.try_evaluate(&bits)?;
            Ok(SolverResult { best_bits: bits, best_value: value, feasible: true, ..result })
        }
        None => Err(Error::Infeasible { best_qber: qber, threshold: BB84_QBER_LIMIT }),
    }
}

/// [`optimize`] followed by [`enforce_security`].
pub fn optimize_secure(objective: &ExactObjective, cfg: &SolverConfig) -> Result<SolverResult> {
    enforce_security(optimize(objective, cfg)?, objective)
}
