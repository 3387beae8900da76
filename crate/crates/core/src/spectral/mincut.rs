//! Exhaustive k-way mincut over small graphs.

use crate::error::{Error, Result};
use crate::spectral::{cut_value, ContextPartition};
use crate::transition_graph::TransitionMatrix;

/// Largest visited-state count the exhaustive search accepts.
pub const MAX_ORACLE_STATES: usize = 12;

/// Minimizes [`cut_value`] over every partition of the visited states into
/// exactly `k` nonempty contexts.
///
/// Partitions are enumerated as restricted-growth strings in lexicographic
/// order and only a strictly smaller value replaces the incumbent, so ties
/// resolve to the lexicographically smallest assignment.
pub fn brute_force_mincut(t: &TransitionMatrix, k: usize) -> Result<(ContextPartition, f64)> {
    let visited = t.visited_states();
    if visited.len() > MAX_ORACLE_STATES {
        return Err(Error::TooManyStatesForOracle { visited: visited.len(), max: MAX_ORACLE_STATES });
    }
    if k == 0 || k > visited.len() {
        return Err(Error::TooFewStates { visited: visited.len(), k });
    }

    let m = visited.len();
    let mut labels = vec![0usize; m];
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut assignment = vec![None; t.n()];
    search(1, 1, &mut labels, k, &mut |labels| {
        for (i, &s) in visited.iter().enumerate() {
            assignment[s] = Some(labels[i]);
        }
        let value = cut_value(t, &ContextPartition::new(assignment.clone(), k)).expect("all visited states assigned");
        if best.as_ref().is_none_or(|(_, v)| value < *v) {
            best = Some((labels.to_vec(), value));
        }
    });

    let (labels, value) = best.expect("at least one partition exists");
    let mut assignment = vec![None; t.n()];
    for (i, &s) in visited.iter().enumerate() {
        assignment[s] = Some(labels[i]);
    }
    Ok((ContextPartition::new(assignment, k), value))
}

/// Fills `labels[pos..]` with every restricted-growth continuation that uses
/// exactly `k` labels; `used` is the number of labels in `labels[..pos]`.
fn search(pos: usize, used: usize, labels: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    let m = labels.len();
    if pos == m {
        if used == k {
            visit(labels);
        }
        return;
    }
    // not enough positions left to open the missing labels
    if k - used > m - pos {
        return;
    }
    for label in 0..=used.min(k - 1) {
        labels[pos] = label;
        let next_used = if label == used { used + 1 } else { used };
        search(pos + 1, next_used, labels, k, visit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn count_partitions(m: usize, k: usize) -> usize {
        let mut labels = vec![0; m];
        let mut n = 0;
        search(1, 1, &mut labels, k, &mut |_| n += 1);
        n
    }

    #[test]
    fn enumerates_stirling_numbers() {
        assert_eq!(count_partitions(4, 2), 7);
        assert_eq!(count_partitions(5, 3), 25);
        assert_eq!(count_partitions(10, 3), 9330);
        assert_eq!(count_partitions(6, 6), 1);
    }

    #[test]
    fn two_blocks_are_the_mincut() {
        let w = DMatrix::from_row_slice(4, 4, &[
            0.0, 1.0, 0.0, 0.0,
            1.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, 1.0, 0.0,
        ]);
        let t = TransitionMatrix::from_weights(&w);
        let (p, value) = brute_force_mincut(&t, 2).unwrap();
        assert_eq!(value, 0.0);
        assert_eq!(p.canonical(), vec![Some(0), Some(0), Some(1), Some(1)]);
    }

    #[test]
    fn uniform_matrix_cuts_off_a_singleton() {
        let t = TransitionMatrix::from_weights(&DMatrix::from_element(4, 4, 1.0));
        let balanced = ContextPartition::new(vec![Some(0), Some(0), Some(1), Some(1)], 2);
        assert!((cut_value(&t, &balanced).unwrap() - 2.0).abs() < 1e-15);
        let (p, value) = brute_force_mincut(&t, 2).unwrap();
        assert_eq!(value, cut_value(&t, &p).unwrap());
        assert!((value - 1.5).abs() < 1e-15);
        // lexicographically first among the four singleton splits
        assert_eq!(p.canonical(), vec![Some(0), Some(0), Some(0), Some(1)]);
    }

    #[test]
    fn oracle_bounds() {
        let t = TransitionMatrix::from_weights(&DMatrix::from_element(13, 13, 1.0));
        assert_eq!(brute_force_mincut(&t, 2).unwrap_err(), Error::TooManyStatesForOracle { visited: 13, max: 12 });
        let t = TransitionMatrix::from_weights(&DMatrix::from_element(3, 3, 1.0));
        assert!(matches!(brute_force_mincut(&t, 4), Err(Error::TooFewStates { .. })));
    }
}
