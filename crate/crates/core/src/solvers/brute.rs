use super::{SolverResult, Tracker};
use crate::error::{Error, Result};
use crate::objective::Objective;

/// Largest dimension [`brute_force`] will enumerate.
pub const BRUTE_FORCE_MAX_DIM: usize = 24;

/// Evaluates all `2^dim` vectors in lexicographic order.
pub fn brute_force<O: Objective>(objective: &O) -> Result<SolverResult> {
    let dim = objective.dim();
    if dim > BRUTE_FORCE_MAX_DIM {
        return Err(Error::domain(format!(
            "brute force refuses dim {dim}: 2^{dim} evaluations exceeds the cap of 2^{BRUTE_FORCE_MAX_DIM}"
        )));
    }
    let mut tracker = Tracker::new();
    let mut bits = vec![false; dim];
    for mask in 0u64..1 << dim {
        for (i, b) in bits.iter_mut().enumerate() {
            *b = (mask >> (dim - 1 - i)) & 1 == 1;
        }
        let value = objective.evaluate(&bits);
        tracker.evaluations += 1;
        tracker.offer(&bits, value, || objective.feasible(&bits));
    }
    Ok(tracker.finish(objective))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::QuboModel;

    #[test]
    fn examples() {
        let empty = QuboModel::new(vec![], vec![], 2.5).unwrap();
        let r = brute_force(&empty).unwrap();
        assert!(r.best_bits.is_empty());
        assert_eq!(r.best_value, 2.5);

        let tie = QuboModel::from_dense(&[vec![0.0, -2.0], vec![0.0, 0.0]], vec![1.0, 1.0], 0.0).unwrap();
        let r = brute_force(&tie).unwrap();
        assert_eq!(r.best_bits, vec![false, false]);
        assert_eq!(r.best_value, 0.0);

        let single = QuboModel::new(vec![-1.0], vec![], 0.25).unwrap();
        let r = brute_force(&single).unwrap();
        assert_eq!(r.best_bits, vec![true]);
        assert_eq!(r.best_value, -0.75);
        assert_eq!(r.evaluations, 2);
    }

    #[test]
    fn refuses_large_dimensions() {
        let big = QuboModel::new(vec![0.0; 25], vec![], 0.0).unwrap();
        assert!(matches!(brute_force(&big), Err(Error::Domain(_))));
    }
}
