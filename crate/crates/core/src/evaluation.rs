//! Scoring of discovered contexts against ground truth, per-context
//! transition models, and the entropy and prediction comparisons between the
//! marginal model and the context-conditioned one.
//!
//! Per-context models attribute every observed transition `a -> b` to the
//! context of the state it lands in. Row `a` of the marginal matrix then
//! decomposes exactly as `T[a] = sum_c w[a][c] * P_c[a]`, where `w[a][c]` is
//! the fraction of departures from `a` that land in context `c`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::ContextPartition;
use crate::transition_graph::{StateSequence, TransitionMatrix};

/// Fraction of occurrences whose context's majority latent label equals
/// their own. Occurrences of unassigned states are ignored.
pub fn purity(partition: &ContextPartition, occurrences: &[(usize, Option<usize>)]) -> Result<f64> {
    let mut table: Vec<Vec<u64>> = vec![Vec::new(); partition.k()];
    let mut total = 0u64;
    for &(state, label) in occurrences {
        let label = label.ok_or(Error::ContinuousLatentUnsupported)?;
        let Some(c) = partition.context_of(state) else { continue };
        let row = &mut table[c];
        if row.len() <= label {
            row.resize(label + 1, 0);
        }
        row[label] += 1;
        total += 1;
    }
    if total == 0 {
        return Ok(0.0);
    }
    let majority: u64 = table.iter().map(|row| row.iter().copied().max().unwrap_or(0)).sum();
    Ok(majority as f64 / total as f64)
}

/// Occupancy-weighted within-context variance of the wall distance over its
/// global variance. Small values mean contexts are bands of similar `d`.
pub fn band_spread(partition: &ContextPartition, occurrences: &[(usize, f64)]) -> f64 {
    let assigned: Vec<(usize, f64)> = occurrences
        .iter()
        .filter_map(|&(s, d)| partition.context_of(s).map(|c| (c, d)))
        .collect();
    if assigned.is_empty() {
        return 0.0;
    }
    let n = assigned.len() as f64;
    let mean = assigned.iter().map(|&(_, d)| d).sum::<f64>() / n;
    let total_ss: f64 = assigned.iter().map(|&(_, d)| (d - mean).powi(2)).sum();
    if total_ss == 0.0 {
        return 0.0;
    }
    let k = partition.k();
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for &(c, d) in &assigned {
        sums[c] += d;
        counts[c] += 1;
    }
    let within_ss: f64 = assigned
        .iter()
        .map(|&(c, d)| (d - sums[c] / counts[c] as f64).powi(2))
        .sum();
    within_ss / total_ss
}

/// Sparse per-context transition models.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextModels {
    k: usize,
    /// `rows[c][i]`: sorted `(j, count)` for transitions from `i` landing in `c`.
    rows: Vec<Vec<Vec<(usize, u64)>>>,
    /// Departures from each state.
    source_counts: Vec<u64>,
    /// Fraction of all transitions attributed to each context.
    pub occupancy: Vec<f64>,
}

impl ContextModels {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.source_counts.len()
    }

    fn row_total(&self, c: usize, i: usize) -> u64 {
        self.rows[c][i].iter().map(|&(_, n)| n).sum()
    }

    /// `P_c[i][j]`; zero when context `c` has no departures from `i`.
    pub fn prob(&self, c: usize, i: usize, j: usize) -> f64 {
        let row = &self.rows[c][i];
        match row.binary_search_by_key(&j, |&(j, _)| j) {
            Ok(pos) => row[pos].1 as f64 / self.row_total(c, i) as f64,
            Err(_) => 0.0,
        }
    }

    /// Row `i` of `P_c` as `(j, probability)` pairs.
    pub fn row(&self, c: usize, i: usize) -> Vec<(usize, f64)> {
        let total = self.row_total(c, i) as f64;
        self.rows[c][i].iter().map(|&(j, n)| (j, n as f64 / total)).collect()
    }

    /// Dense `P_c`.
    pub fn matrix(&self, c: usize) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for (j, p) in self.row(c, i) {
                m[(i, j)] = p;
            }
        }
        m
    }

    /// Fraction of departures from `i` that land in context `c`.
    pub fn row_weight(&self, c: usize, i: usize) -> f64 {
        if self.source_counts[i] == 0 {
            0.0
        } else {
            self.row_total(c, i) as f64 / self.source_counts[i] as f64
        }
    }

    /// `sum_c w[i][c] * P_c[i][j]`, which recovers the marginal matrix.
    pub fn mixture(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for c in 0..self.k {
            for i in 0..n {
                let w = self.row_weight(c, i);
                for (j, p) in self.row(c, i) {
                    m[(i, j)] += w * p;
                }
            }
        }
        m
    }
}

impl ContextModels {
    /// Largest absolute entry of `mixture() - t`, computed row by row without
    /// dense matrices.
    pub fn max_mixture_error(&self, t: &TransitionMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for i in 0..self.n() {
            acc.clear();
            for e in t.row(i) {
                acc.insert(e.to, -e.prob);
            }
            for c in 0..self.k {
                let w = self.row_weight(c, i);
                for (j, p) in self.row(c, i) {
                    *acc.entry(j).or_insert(0.0) += w * p;
                }
            }
            worst = acc.values().fold(worst, |m, x| m.max(x.abs()));
        }
        worst
    }
}

/// Estimates one transition model per context from a collapsed sequence.
///
/// Each transition is attributed to the context of its destination; a
/// destination without a context (a state only ever seen last) falls back to
/// the context of the source.
pub fn fit_context_models(seq: &StateSequence, partition: &ContextPartition) -> Result<ContextModels> {
    let n = partition.n();
    let k = partition.k();
    let mut rows: Vec<Vec<Vec<(usize, u64)>>> = vec![vec![Vec::new(); n]; k];
    let mut source_counts = vec![0u64; n];
    let mut per_context = vec![0u64; k];
    for (a, b) in seq.transitions() {
        if a >= n || b >= n {
            return Err(Error::IdOutOfRange { id: a.max(b), n });
        }
        let source_ctx = partition.context_of(a).ok_or(Error::UnassignedVisitedState(a))?;
        let c = partition.context_of(b).unwrap_or(source_ctx);
        let row = &mut rows[c][a];
        match row.binary_search_by_key(&b, |&(j, _)| j) {
            Ok(pos) => row[pos].1 += 1,
            Err(pos) => row.insert(pos, (b, 1)),
        }
        source_counts[a] += 1;
        per_context[c] += 1;
    }
    let total: u64 = per_context.iter().sum();
    let occupancy = per_context
        .iter()
        .map(|&n| if total == 0 { 0.0 } else { n as f64 / total as f64 })
        .collect();
    Ok(ContextModels { k, rows, source_counts, occupancy })
}

fn entropy_bits(probs: impl Iterator<Item = f64>) -> f64 {
    -probs.filter(|&p| p > 0.0).map(|p| p * p.log2()).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub marginal_entropy: f64,
    pub posterior_entropy: f64,
    pub entropy_reduction: f64,
}

/// Source-frequency-weighted next-state entropy of the marginal matrix and of
/// the context-conditioned models, in bits.
pub fn entropy_report(t: &TransitionMatrix, models: &ContextModels) -> EntropyReport {
    assert_eq!(t.n(), models.n(), "models and matrix must share a state space");
    let total: u64 = models.source_counts.iter().sum();
    let (mut marginal, mut posterior) = (0.0, 0.0);
    if total > 0 {
        for i in 0..t.n() {
            let n_i = models.source_counts[i];
            if n_i == 0 {
                continue;
            }
            let f = n_i as f64 / total as f64;
            marginal += f * entropy_bits(t.row(i).iter().map(|e| e.prob));
            let cond: f64 = (0..models.k)
                .map(|c| models.row_weight(c, i) * entropy_bits(models.row(c, i).into_iter().map(|(_, p)| p)))
                .sum();
            posterior += f * cond;
        }
    }
    EntropyReport { marginal_entropy: marginal, posterior_entropy: posterior, entropy_reduction: marginal - posterior }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionAccuracy {
    pub marginal: f64,
    pub contextual: f64,
    /// Holdout transitions that were scored.
    pub scored: usize,
}

/// Top-1 next-state accuracy on held-out transitions.
///
/// The marginal predictor takes the argmax of the source row of `t`. The
/// contextual predictor takes the current context to be the context of the
/// state just observed and predicts the argmax of that context's row,
/// falling back to the marginal row when the context has no departures from
/// the state. Argmax ties go to the lowest state id. `None` entries mark
/// states unknown to the model: transitions from them are skipped and
/// transitions into them count as misses.
pub fn prediction_accuracy(
    holdout: &[Option<usize>],
    t: &TransitionMatrix,
    models: &ContextModels,
    partition: &ContextPartition,
) -> PredictionAccuracy {
    let n = t.n();
    let marginal_guess: Vec<Option<usize>> = (0..n)
        .map(|i| t.is_visited(i).then(|| argmax(t.row(i).iter().map(|e| (e.to, e.prob)))))
        .collect();
    let contextual_guess: Vec<Option<usize>> = (0..n)
        .map(|i| {
            let c = partition.context_of(i)?;
            let row = models.row(c, i);
            if row.is_empty() {
                marginal_guess[i]
            } else {
                Some(argmax(row.into_iter()))
            }
        })
        .collect();

    let (mut scored, mut hit_m, mut hit_c) = (0usize, 0usize, 0usize);
    for w in holdout.windows(2) {
        let Some(a) = w[0] else { continue };
        if a >= n || !t.is_visited(a) {
            continue;
        }
        scored += 1;
        if let Some(b) = w[1] {
            if marginal_guess[a] == Some(b) {
                hit_m += 1;
            }
            if contextual_guess[a].or(marginal_guess[a]) == Some(b) {
                hit_c += 1;
            }
        }
    }
    let rate = |h: usize| if scored == 0 { 0.0 } else { h as f64 / scored as f64 };
    PredictionAccuracy { marginal: rate(hit_m), contextual: rate(hit_c), scored }
}

fn argmax(it: impl Iterator<Item = (usize, f64)>) -> usize {
    let mut best = (usize::MAX, f64::NEG_INFINITY);
    for (j, p) in it {
        if p > best.1 || (p == best.1 && j < best.0) {
            best = (j, p);
        }
    }
    best.0
}

/// Everything reported about one run's discovered contexts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    /// Majority-label purity over all state occurrences (discrete latent only).
    pub purity: Option<f64>,
    /// Purity over occurrences during which the latent state did not change.
    pub purity_clean: Option<f64>,
    /// Within-context over global variance of wall distance (continuous latent only).
    pub band_spread: Option<f64>,
    pub marginal_entropy: f64,
    pub posterior_entropy: f64,
    pub entropy_reduction: f64,
    pub prediction_accuracy_marginal: f64,
    pub prediction_accuracy_contextual: f64,
    pub cut_value: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::transition_graph::{build_matrix, dedup};
    use rand::Rng;

    fn labels(ls: &[usize]) -> Vec<(usize, Option<usize>)> {
        ls.iter().enumerate().map(|(i, &l)| (i, Some(l))).collect()
    }

    #[test]
    fn perfect_partition_is_pure() {
        let p = ContextPartition::new(vec![Some(1), Some(1), Some(0), Some(0), Some(2)], 3);
        assert_eq!(purity(&p, &labels(&[4, 4, 7, 7, 1])).unwrap(), 1.0);
    }

    #[test]
    fn one_context_over_five_labels() {
        let occ: Vec<(usize, Option<usize>)> = (0..100).map(|i| (i, Some(i % 5))).collect();
        assert_eq!(purity(&ContextPartition::single(100), &occ).unwrap(), 0.2);
    }

    #[test]
    fn continuous_labels_are_rejected() {
        assert_eq!(purity(&ContextPartition::single(2), &[(0, None)]), Err(Error::ContinuousLatentUnsupported));
    }

    #[test]
    fn purity_ignores_relabeling() {
        let mut rng = substream(5, 0);
        let assignment: Vec<Option<usize>> = (0..40).map(|_| Some(rng.random_range(0..4))).collect();
        let occ: Vec<(usize, Option<usize>)> = (0..400).map(|_| (rng.random_range(0..40), Some(rng.random_range(0..3)))).collect();
        let p = ContextPartition::new(assignment.clone(), 4);
        let base = purity(&p, &occ).unwrap();
        let shuffled = ContextPartition::new(assignment.iter().map(|c| c.map(|c| (c + 1) % 4)).collect(), 4);
        assert_eq!(purity(&shuffled, &occ).unwrap(), base);
        let relabeled: Vec<_> = occ.iter().map(|&(s, l)| (s, l.map(|l| 9 - l))).collect();
        assert_eq!(purity(&p, &relabeled).unwrap(), base);
    }

    #[test]
    fn random_contexts_do_not_reduce_spread() {
        let mut rng = substream(42, 0);
        let n = 20_000;
        let occ: Vec<(usize, f64)> = (0..n).map(|i| (i, rng.random_range(1.0..3.0))).collect();
        let p = ContextPartition::new((0..n).map(|_| Some(rng.random_range(0..10))).collect(), 10);
        let ratio = band_spread(&p, &occ);
        assert!((ratio - 1.0).abs() <= 0.05, "{ratio}");
    }

    #[test]
    fn quantile_bands_shrink_spread_by_k_squared() {
        // uniform d on [a, b] split in k equal bins: each bin variance (w/k)^2/12
        // against w^2/12 overall, a ratio of 1/k^2
        let mut rng = substream(43, 0);
        let n = 50_000;
        let ds: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..3.0)).collect();
        let mut sorted = ds.clone();
        sorted.sort_by(f64::total_cmp);
        let k = 10;
        let cuts: Vec<f64> = (1..k).map(|q| sorted[q * n / k]).collect();
        let assign: Vec<Option<usize>> = ds.iter().map(|&d| Some(cuts.iter().filter(|&&c| d >= c).count())).collect();
        let occ: Vec<(usize, f64)> = ds.iter().enumerate().map(|(i, &d)| (i, d)).collect();
        let ratio = band_spread(&ContextPartition::new(assign, k), &occ);
        assert!((ratio - 0.01).abs() < 0.0005, "{ratio}");
    }

    /// 0 -> {1, 2}, 1 -> {0, 3}, 2 -> {3, 0}, 3 -> {2, 1}, each with equal weight.
    fn crossed_pairs() -> (StateSequence, ContextPartition) {
        let seq = dedup(&[0, 1, 0, 2, 3, 2, 0, 1, 3, 1, 0, 2, 3, 1, 3, 2, 0]);
        let p = ContextPartition::new(vec![Some(0), Some(0), Some(1), Some(1)], 2);
        (seq, p)
    }

    #[test]
    fn one_context_model_is_the_marginal() {
        let (seq, _) = crossed_pairs();
        let t = build_matrix(&seq, 4).unwrap();
        let models = fit_context_models(&seq, &ContextPartition::single(4)).unwrap();
        assert_eq!(models.matrix(0), t.to_dense());
        let r = entropy_report(&t, &models);
        assert_eq!(r.entropy_reduction, 0.0);
    }

    #[test]
    fn disconnected_blocks_give_block_models() {
        let seq = dedup(&[0, 1, 0, 1, 0, 2, 3, 2, 3, 2]);
        // the single cross step 0 -> 2 is the only link
        let p = ContextPartition::new(vec![Some(0), Some(0), Some(1), Some(1)], 2);
        let models = fit_context_models(&seq, &p).unwrap();
        let m0 = models.matrix(0);
        assert_eq!(m0[(0, 1)], 1.0);
        assert_eq!(m0[(1, 0)], 1.0);
        assert_eq!(m0.rows(2, 2).sum(), 0.0);
        assert_eq!(m0.columns(2, 2).sum(), 0.0);
        assert!((models.occupancy.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn deterministic_contexts_remove_one_bit() {
        let (seq, p) = crossed_pairs();
        let t = build_matrix(&seq, 4).unwrap();
        for i in 0..4 {
            let row: Vec<f64> = t.to_dense().row(i).iter().copied().filter(|&x| x > 0.0).collect();
            assert_eq!(row, vec![0.5, 0.5], "row {i}");
        }
        let models = fit_context_models(&seq, &p).unwrap();
        let r = entropy_report(&t, &models);
        assert!((r.marginal_entropy - 1.0).abs() < 1e-12);
        assert!(r.posterior_entropy.abs() < 1e-12);
        assert!((r.entropy_reduction - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixture_and_entropy_hold_for_random_partitions() {
        let mut rng = substream(77, 0);
        let ids: Vec<usize> = (0..3000).map(|_| rng.random_range(0..12)).collect();
        let seq = dedup(&ids);
        let t = build_matrix(&seq, 12).unwrap();
        for trial in 0..20 {
            let k = 2 + trial % 4;
            let p = ContextPartition::new((0..12).map(|_| Some(rng.random_range(0..k))).collect(), k);
            let models = fit_context_models(&seq, &p).unwrap();
            let diff = (models.mixture() - t.to_dense()).amax();
            assert!(diff <= 1e-12, "mixture off by {diff}");
            assert!((models.max_mixture_error(&t) - diff).abs() <= 1e-15);
            let r = entropy_report(&t, &models);
            assert!(r.entropy_reduction >= -1e-12);
            assert_eq!(r.entropy_reduction, r.marginal_entropy - r.posterior_entropy);
        }
    }

    #[test]
    fn unassigned_source_is_rejected() {
        let seq = dedup(&[0, 1, 2]);
        let p = ContextPartition::new(vec![Some(0), None, Some(0)], 1);
        assert_eq!(fit_context_models(&seq, &p), Err(Error::UnassignedVisitedState(1)));
    }

    #[test]
    fn two_cycle_is_perfectly_predictable() {
        let seq = dedup(&[0, 1, 0, 1, 0, 1, 0]);
        let t = build_matrix(&seq, 2).unwrap();
        let p = ContextPartition::new(vec![Some(0), Some(1)], 2);
        let models = fit_context_models(&seq, &p).unwrap();
        let holdout: Vec<Option<usize>> = [1, 0, 1, 0, 1].iter().map(|&s| Some(s)).collect();
        let acc = prediction_accuracy(&holdout, &t, &models, &p);
        assert_eq!((acc.marginal, acc.contextual, acc.scored), (1.0, 1.0, 4));
    }

    #[test]
    fn unknown_holdout_states() {
        let seq = dedup(&[0, 1, 0, 1]);
        let t = build_matrix(&seq, 2).unwrap();
        let p = ContextPartition::single(2);
        let models = fit_context_models(&seq, &p).unwrap();
        let acc = prediction_accuracy(&[Some(0), None, Some(1), Some(0)], &t, &models, &p);
        assert_eq!(acc.scored, 2);
        assert_eq!(acc.marginal, 0.5);
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax([(3, 0.5), (1, 0.5), (2, 0.1)].into_iter()), 1);
    }
}
