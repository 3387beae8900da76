//! Context discovery by spectral partitioning of the transition graph.
//!
//! States are embedded with the leading eigenvectors of the transition
//! operator, rows are scaled to unit length, and K-means groups the rows.
//! This approximately minimizes the total transition probability that
//! crosses context boundaries; [`mincut`] holds the exact exhaustive search
//! used to check that approximation on small graphs.

pub mod eigen;
pub mod lanczos;
pub mod mincut;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kmeans::{self, KMeansParams};
use crate::transition_graph::TransitionMatrix;

pub use mincut::brute_force_mincut;

/// Assignment of states to contexts. Unvisited states carry no context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextPartition {
    assignment: Vec<Option<usize>>,
    k: usize,
}

impl ContextPartition {
    pub fn new(assignment: Vec<Option<usize>>, k: usize) -> Self {
        debug_assert!(assignment.iter().flatten().all(|&c| c < k));
        Self { assignment, k }
    }

    /// Every state in one context.
    pub fn single(n: usize) -> Self {
        Self { assignment: vec![Some(0); n], k: 1 }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn context_of(&self, state: usize) -> Option<usize> {
        self.assignment.get(state).copied().flatten()
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    pub fn members(&self, context: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.assignment[i] == Some(context)).collect()
    }

    /// Context ids renumbered in order of first appearance, so two partitions
    /// that group states identically compare equal.
    pub fn canonical(&self) -> Vec<Option<usize>> {
        let mut map = vec![None; self.k];
        let mut next = 0;
        self.assignment
            .iter()
            .map(|c| {
                c.map(|c| {
                    *map[c].get_or_insert_with(|| {
                        next += 1;
                        next - 1
                    })
                })
            })
            .collect()
    }

    pub fn same_grouping(&self, other: &ContextPartition) -> bool {
        self.canonical() == other.canonical()
    }

    /// Relabels states: old state `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut assignment = vec![None; self.n()];
        for (i, &c) in self.assignment.iter().enumerate() {
            assignment[perm[i]] = c;
        }
        Self { assignment, k: self.k }
    }
}

/// States embedded in the space spanned by the leading eigenvectors.
#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    /// Real parts of the selected eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Resolved spectrum (real parts) of the decomposed operator, descending.
    /// Complete for dense solves; the leading part for sparse ones.
    pub spectrum: Vec<f64>,
    /// `n x k` eigenvector matrix; unvisited rows are zero.
    pub u: DMatrix<f64>,
    /// `u` with every nonzero row scaled to unit length.
    pub v: DMatrix<f64>,
    pub symmetrized: bool,
    /// The states that were embedded, ascending.
    pub visited: Vec<usize>,
}

/// Above this many visited states the symmetric embedding switches from a
/// dense decomposition to sparse Lanczos iteration.
pub const DENSE_LIMIT: usize = 600;

/// The matrix actually decomposed: the transition probabilities restricted to
/// visited states, averaged with their transpose when `symmetrize` is set.
pub fn operator(t: &TransitionMatrix, symmetrize: bool) -> (DMatrix<f64>, Vec<usize>) {
    let visited = t.visited_states();
    let m = visited.len();
    let mut local = vec![usize::MAX; t.n()];
    for (l, &s) in visited.iter().enumerate() {
        local[s] = l;
    }
    let mut sub = DMatrix::zeros(m, m);
    for (la, &a) in visited.iter().enumerate() {
        for e in t.row(a) {
            if local[e.to] != usize::MAX {
                sub[(la, local[e.to])] = e.prob;
            }
        }
    }
    let op = if symmetrize { (&sub + sub.transpose()) * 0.5 } else { sub };
    (op, visited)
}

pub fn embed(t: &TransitionMatrix, k: usize, symmetrize: bool) -> Result<SpectralEmbedding> {
    let visited = t.visited_states();
    if k < 2 || visited.len() < k {
        return Err(Error::TooFewStates { visited: visited.len(), k });
    }
    let pairs = if symmetrize && visited.len() > DENSE_LIMIT {
        lanczos::lanczos_top_k(&lanczos::SparseSymmetric::symmetrized(t, &visited), k)?
    } else {
        let (op, _) = operator(t, symmetrize);
        if symmetrize { eigen::symmetric_top_k(&op, k)? } else { eigen::general_top_k(&op, k)? }
    };

    let n = t.n();
    let mut u = DMatrix::zeros(n, k);
    for (row, &state) in visited.iter().enumerate() {
        u.set_row(state, &pairs.vectors.row(row));
    }
    let mut v = u.clone();
    for &state in &visited {
        let norm = v.row(state).norm();
        if norm > 0.0 {
            v.row_mut(state).iter_mut().for_each(|x| *x /= norm);
        }
    }
    Ok(SpectralEmbedding {
        eigenvalues: pairs.values,
        spectrum: pairs.spectrum,
        u,
        v,
        symmetrized: symmetrize,
        visited,
    })
}

/// K-means on the embedded rows; unvisited states stay unassigned.
pub fn cluster(emb: &SpectralEmbedding, k: usize, seed: u64) -> Result<ContextPartition> {
    cluster_with(emb, &KMeansParams::new(k), seed)
}

pub fn cluster_with(emb: &SpectralEmbedding, params: &KMeansParams, seed: u64) -> Result<ContextPartition> {
    let dim = emb.v.ncols();
    let mut flat = Vec::with_capacity(emb.visited.len() * dim);
    for &state in &emb.visited {
        flat.extend(emb.v.row(state).iter());
    }
    let fit = kmeans::fit(&flat, dim, params, seed)?;
    let mut assignment = vec![None; emb.v.nrows()];
    for (row, &state) in emb.visited.iter().enumerate() {
        assignment[state] = Some(fit.assignment[row]);
    }
    Ok(ContextPartition::new(assignment, params.k))
}

/// Total transition probability leaving each context, summed over contexts.
pub fn cut_value(t: &TransitionMatrix, p: &ContextPartition) -> Result<f64> {
    let mut total = 0.0;
    for i in t.visited_states() {
        let ci = p.context_of(i).ok_or(Error::UnassignedVisitedState(i))?;
        total += t.row(i).iter().filter(|e| p.context_of(e.to) != Some(ci)).map(|e| e.prob).sum::<f64>();
    }
    Ok(total)
}
