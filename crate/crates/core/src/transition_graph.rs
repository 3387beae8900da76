//! Empirical transition-probability graph over discrete states, with run
//! collapsing and the lift to transition-pair states.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A state sequence with no two equal consecutive entries.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StateSequence {
    ids: Vec<usize>,
}

impl StateSequence {
    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Consecutive `(from, to)` pairs.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.ids.windows(2).map(|w| (w[0], w[1]))
    }
}

/// Collapses runs of repeated ids into a single occurrence.
pub fn dedup(ids: &[usize]) -> StateSequence {
    dedup_runs(ids).0
}

/// Like [`dedup`], also returning the index in `ids` where each run starts.
pub fn dedup_runs(ids: &[usize]) -> (StateSequence, Vec<usize>) {
    let mut out = Vec::new();
    let mut starts = Vec::new();
    for (i, &id) in ids.iter().enumerate() {
        if out.last() != Some(&id) {
            out.push(id);
            starts.push(i);
        }
    }
    (StateSequence { ids: out }, starts)
}

/// One nonzero entry of a transition matrix row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub to: usize,
    pub count: u64,
    pub prob: f64,
}

/// Row-stochastic transition matrix with the counts it was estimated from,
/// stored as sorted sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    rows: Vec<Vec<Transition>>,
}

impl TransitionMatrix {
    /// Row-normalizes a nonnegative weight matrix. Rows with zero mass stay
    /// zero and count as unvisited; all counts are zero.
    pub fn from_weights(weights: &DMatrix<f64>) -> Self {
        assert!(weights.is_square(), "transition weights must be square");
        let rows = (0..weights.nrows())
            .map(|i| {
                let sum: f64 = weights.row(i).iter().sum();
                if sum <= 0.0 {
                    return Vec::new();
                }
                (0..weights.ncols())
                    .filter(|&j| weights[(i, j)] > 0.0)
                    .map(|j| Transition { to: j, count: 0, prob: weights[(i, j)] / sum })
                    .collect()
            })
            .collect();
        Self { rows }
    }

    fn from_count_rows(rows: Vec<BTreeMap<usize, u64>>) -> Self {
        let rows = rows
            .into_iter()
            .map(|row| {
                let total: u64 = row.values().sum();
                row.into_iter()
                    .map(|(to, count)| Transition { to, count, prob: count as f64 / total as f64 })
                    .collect()
            })
            .collect();
        Self { rows }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Nonzero entries of row `i`, by ascending target.
    pub fn row(&self, i: usize) -> &[Transition] {
        &self.rows[i]
    }

    fn entry(&self, i: usize, j: usize) -> Option<&Transition> {
        let row = &self.rows[i];
        row.binary_search_by_key(&j, |e| e.to).ok().map(|p| &row[p])
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.entry(i, j).map_or(0, |e| e.count)
    }

    pub fn row_count(&self, i: usize) -> u64 {
        self.rows[i].iter().map(|e| e.count).sum()
    }

    pub fn total_count(&self) -> u64 {
        (0..self.n()).map(|i| self.row_count(i)).sum()
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.entry(i, j).map_or(0.0, |e| e.prob)
    }

    /// Number of stored nonzero entries.
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Dense copy of the probabilities.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for e in row {
                m[(i, e.to)] = e.prob;
            }
        }
        m
    }

    pub fn is_visited(&self, i: usize) -> bool {
        !self.rows[i].is_empty()
    }

    /// States with at least one outgoing observation, ascending.
    pub fn visited_states(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.is_visited(i)).collect()
    }

    /// Relabels states: old state `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n());
        let mut rows = vec![Vec::new(); self.n()];
        for (i, row) in self.rows.iter().enumerate() {
            let mut moved: Vec<Transition> = row.iter().map(|e| Transition { to: perm[e.to], ..*e }).collect();
            moved.sort_by_key(|e| e.to);
            rows[perm[i]] = moved;
        }
        Self { rows }
    }
}

/// Counts consecutive pairs of `seq` into an `n`-state transition matrix.
pub fn build_matrix(seq: &StateSequence, n: usize) -> Result<TransitionMatrix> {
    if let Some(&id) = seq.ids.iter().find(|&&id| id >= n) {
        return Err(Error::IdOutOfRange { id, n });
    }
    let mut rows = vec![BTreeMap::new(); n];
    for (a, b) in seq.transitions() {
        *rows[a].entry(b).or_insert(0u64) += 1;
    }
    Ok(TransitionMatrix::from_count_rows(rows))
}

/// Dense ids for the observed ordered prototype pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairStateIndex {
    pairs: Vec<(usize, usize)>,
    lookup: HashMap<(usize, usize), usize>,
}

impl PairStateIndex {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, id: usize) -> (usize, usize) {
        self.pairs[id]
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn get(&self, from: usize, to: usize) -> Option<usize> {
        self.lookup.get(&(from, to)).copied()
    }

    fn intern(&mut self, pair: (usize, usize)) -> usize {
        let next = self.pairs.len();
        *self.lookup.entry(pair).or_insert_with(|| {
            self.pairs.push(pair);
            next
        })
    }

    /// Maps a prototype sequence onto pair ids; `None` marks a pair this
    /// index has never seen.
    pub fn map_sequence(&self, seq: &StateSequence) -> Vec<Option<usize>> {
        seq.transitions().map(|(a, b)| self.get(a, b)).collect()
    }
}

/// A prototype sequence re-expressed over transition-pair states.
#[derive(Debug, Clone, PartialEq)]
pub struct Lifted {
    pub index: PairStateIndex,
    /// The pair-state sequence `(s0,s1), (s1,s2), ...` as pair ids.
    pub sequence: StateSequence,
    pub matrix: TransitionMatrix,
}

/// Lifts a collapsed prototype sequence to pair states. Pair ids follow order
/// of first appearance.
pub fn lift(seq: &StateSequence) -> Result<Lifted> {
    if seq.len() < 3 {
        return Err(Error::SequenceTooShort { len: seq.len(), min: 3 });
    }
    let mut index = PairStateIndex::default();
    let ids: Vec<usize> = seq.transitions().map(|p| index.intern(p)).collect();
    let sequence = StateSequence { ids };
    let matrix = build_matrix(&sequence, index.len())?;
    Ok(Lifted { index, sequence, matrix })
}
