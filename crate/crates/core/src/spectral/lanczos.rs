//! Leading eigenpairs of a large sparse symmetric operator by Lanczos
//! iteration with full reorthogonalization.
//!
//! A single Krylov space only sees one copy of a repeated eigenvalue, so
//! converged vectors are locked and the iteration restarts in their
//! orthogonal complement until the restart finds nothing above the current
//! `k`-th eigenvalue.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use super::eigen::{canonicalize_sign, Eigenpairs, MAX_SWEEPS, TOLERANCE};
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::transition_graph::TransitionMatrix;

/// Largest Krylov basis built in one run.
const MAX_BASIS: usize = 1500;
/// Fixed seed for start vectors; the result does not depend on it beyond
/// rounding.
const START_SEED: u64 = 0x5eed_1a2c;

/// Symmetric matrix in compressed rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetric {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseSymmetric {
    /// `(P + P^T) / 2` where `P` is `t` restricted to `states`.
    pub fn symmetrized(t: &TransitionMatrix, states: &[usize]) -> Self {
        let mut local = vec![usize::MAX; t.n()];
        for (l, &s) in states.iter().enumerate() {
            local[s] = l;
        }
        let mut acc: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); states.len()];
        for (la, &a) in states.iter().enumerate() {
            for e in t.row(a) {
                let lb = local[e.to];
                if lb == usize::MAX {
                    continue;
                }
                *acc[la].entry(lb).or_insert(0.0) += 0.5 * e.prob;
                *acc[lb].entry(la).or_insert(0.0) += 0.5 * e.prob;
            }
        }
        Self { rows: acc.into_iter().map(|r| r.into_iter().collect()).collect() }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.n(), self.rows.iter().map(|r| r.iter().map(|&(j, a)| a * x[j]).sum()))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, a) in r {
                m[(i, j)] = a;
            }
        }
        m
    }
}

struct Found {
    values: Vec<f64>,
    vectors: Vec<DVector<f64>>,
}

/// The `k` largest eigenpairs of `op`. `spectrum` holds every eigenvalue
/// that was resolved, descending, which is at least the top `k`.
pub fn lanczos_top_k(op: &SparseSymmetric, k: usize) -> Result<Eigenpairs> {
    let n = op.n();
    assert!(k >= 1 && k <= n, "need 1 <= k <= n");
    let mut locked = Found { values: Vec::new(), vectors: Vec::new() };
    for attempt in 0.. {
        if locked.vectors.len() >= n {
            break;
        }
        let want = k.min(n - locked.vectors.len());
        let run = run(op, want, &locked.vectors, attempt)?;
        let kth = if locked.values.len() >= k {
            let mut v = locked.values.clone();
            v.sort_by(|a, b| b.total_cmp(a));
            v[k - 1]
        } else {
            f64::NEG_INFINITY
        };
        let top = run.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if top <= kth + TOLERANCE.sqrt() {
            break;
        }
        locked.values.extend(run.values);
        locked.vectors.extend(run.vectors);
        if attempt > k + 2 {
            return Err(Error::DecompositionFailure("Lanczos restarts kept finding new leading eigenvalues".into()));
        }
    }

    let mut order: Vec<usize> = (0..locked.values.len()).collect();
    order.sort_by(|&i, &j| locked.values[j].total_cmp(&locked.values[i]).then(i.cmp(&j)));
    let spectrum: Vec<f64> = order.iter().map(|&i| locked.values[i]).collect();
    let mut vectors = DMatrix::zeros(n, k);
    for (c, &i) in order.iter().take(k).enumerate() {
        vectors.set_column(c, &locked.vectors[i]);
        canonicalize_sign(&mut vectors, c);
    }
    Ok(Eigenpairs { values: spectrum[..k].to_vec(), values_imag: vec![0.0; k], spectrum, vectors })
}

fn orthogonalize(w: &mut DVector<f64>, against: &[DVector<f64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for q in against {
            let c = q.dot(w);
            w.axpy(-c, q, 1.0);
        }
    }
}

/// One Lanczos run in the complement of `locked`, returning the `want`
/// largest converged Ritz pairs.
fn run(op: &SparseSymmetric, want: usize, locked: &[DVector<f64>], attempt: usize) -> Result<Found> {
    let n = op.n();
    let limit = (n - locked.len()).min(MAX_BASIS);
    let mut rng = substream(START_SEED, attempt as u64);
    let mut q = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
    orthogonalize(&mut q, locked);
    let norm = q.norm();
    if norm == 0.0 {
        return Ok(Found { values: Vec::new(), vectors: Vec::new() });
    }
    q /= norm;

    let mut basis: Vec<DVector<f64>> = vec![q];
    let (mut alpha, mut beta): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    let mut next_check = (2 * want).max(20);
    loop {
        let j = basis.len() - 1;
        let mut w = op.apply(&basis[j]);
        alpha.push(basis[j].dot(&w));
        orthogonalize(&mut w, &basis);
        orthogonalize(&mut w, locked);
        let b = w.norm();
        let exhausted = b <= 1e-12 || basis.len() >= limit;
        if exhausted || basis.len() >= next_check {
            let m = alpha.len();
            let mut tri = DMatrix::zeros(m, m);
            for i in 0..m {
                tri[(i, i)] = alpha[i];
                if i + 1 < m {
                    tri[(i, i + 1)] = beta[i];
                    tri[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::try_new(tri, TOLERANCE * 1e-3, MAX_SWEEPS)
                .ok_or_else(|| Error::DecompositionFailure("tridiagonal eigenproblem did not converge".into()))?;
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
            let top = &order[..want.min(m)];
            let converged = top.iter().all(|&i| (b * eig.eigenvectors[(m - 1, i)]).abs() <= TOLERANCE);
            if converged || exhausted {
                if !converged && b > 1e-12 {
                    return Err(Error::DecompositionFailure(format!(
                        "Lanczos did not converge within {limit} basis vectors"
                    )));
                }
                let mut found = Found { values: Vec::new(), vectors: Vec::new() };
                for &i in top {
                    let mut x = DVector::zeros(n);
                    for (r, qv) in basis.iter().enumerate() {
                        x.axpy(eig.eigenvectors[(r, i)], qv, 1.0);
                    }
                    x /= x.norm();
                    found.values.push(eig.eigenvalues[i]);
                    found.vectors.push(x);
                }
                return Ok(found);
            }
            next_check = basis.len() + (basis.len() / 4).max(10);
        }
        beta.push(b);
        basis.push(w / b);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::eigen::symmetric_top_k;

    fn random_walk_matrix(n: usize, seed: u64) -> TransitionMatrix {
        let mut rng = substream(seed, 0);
        let w = DMatrix::from_fn(n, n, |i, j| {
            let near = i.abs_diff(j) <= 3 || (i * 7 + j * 3) % 17 == 0;
            if i != j && near { rng.random::<f64>() } else { 0.0 }
        });
        TransitionMatrix::from_weights(&w)
    }

    #[test]
    fn agrees_with_dense_solver() {
        for seed in 0..3 {
            let t = random_walk_matrix(150, seed);
            let states = t.visited_states();
            let op = SparseSymmetric::symmetrized(&t, &states);
            let a = op.to_dense();
            let dense = symmetric_top_k(&a, 6).unwrap();
            let sparse = lanczos_top_k(&op, 6).unwrap();
            for c in 0..6 {
                assert!((dense.values[c] - sparse.values[c]).abs() < 1e-9, "{c}: {} vs {}", dense.values[c], sparse.values[c]);
                let x = sparse.vectors.column(c).into_owned();
                assert!((&a * &x - &x * sparse.values[c]).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn finds_every_copy_of_a_repeated_eigenvalue() {
        // three disconnected rings: eigenvalue 1 with multiplicity 3
        let n = 90;
        let w = DMatrix::from_fn(n, n, |i, j| {
            let (bi, bj) = (i / 30, j / 30);
            let (ri, rj) = (i % 30, j % 30);
            if bi == bj && (ri + 1) % 30 == rj || bi == bj && (rj + 1) % 30 == ri { 1.0 } else { 0.0 }
        });
        let t = TransitionMatrix::from_weights(&w);
        let op = SparseSymmetric::symmetrized(&t, &t.visited_states());
        let ep = lanczos_top_k(&op, 3).unwrap();
        for c in 0..3 {
            assert!((ep.values[c] - 1.0).abs() < 1e-9, "{:?}", ep.values);
        }
        let gram = ep.vectors.transpose() * &ep.vectors;
        assert!((gram - DMatrix::identity(3, 3)).amax() < 1e-9);
    }

    #[test]
    fn symmetrized_operator_matches_dense_construction() {
        let t = random_walk_matrix(20, 9);
        let states = t.visited_states();
        let p = t.to_dense();
        let dense = (&p + p.transpose()) * 0.5;
        assert!((SparseSymmetric::symmetrized(&t, &states).to_dense() - dense).amax() < 1e-15);
    }
}
