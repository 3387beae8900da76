//! Lloyd's K-means with k-means++ seeding and best-of-N restarts.
//!
//! Iterations use Hamerly's bounds to skip distance computations that cannot
//! change an assignment; the result is the same fixed point plain Lloyd
//! iterations reach from the same seeding.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::substream;

const RESTART_STREAM_BASE: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
    /// Lloyd iterations stop once no center moves farther than this.
    pub tol: f64,
}

impl KMeansParams {
    pub fn new(k: usize) -> Self {
        Self { k, restarts: 10, max_iter: 300, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub dim: usize,
    /// Row-major `k x dim` centers.
    pub centers: Vec<f64>,
    pub assignment: Vec<usize>,
    pub inertia: f64,
    /// Final inertia of every restart, in restart order.
    pub restart_inertias: Vec<f64>,
    pub best_restart: usize,
}

impl KMeansFit {
    pub fn k(&self) -> usize {
        self.centers.len() / self.dim
    }

    pub fn center(&self, j: usize) -> &[f64] {
        &self.centers[j * self.dim..(j + 1) * self.dim]
    }
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest center; ties go to the lowest index.
pub fn nearest(point: &[f64], centers: &[f64], dim: usize) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centers.chunks_exact(dim).enumerate() {
        let d = sq_dist(point, c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

/// Number of distinct rows in a row-major `n x dim` buffer.
pub fn count_distinct(points: &[f64], dim: usize) -> usize {
    let mut rows: Vec<&[f64]> = points.chunks_exact(dim).collect();
    rows.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    rows.windows(2).filter(|w| w[0] != w[1]).count() + usize::from(!rows.is_empty())
}

/// Clusters the rows of `points` (row-major, `dim` columns).
pub fn fit(points: &[f64], dim: usize, params: &KMeansParams, seed: u64) -> Result<KMeansFit> {
    assert!(dim > 0 && points.len().is_multiple_of(dim), "points buffer must hold whole rows");
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    if params.k == 0 {
        return Err(Error::InvalidConfig(vec!["k must be >= 1".into()]));
    }
    let distinct = count_distinct(points, dim);
    if distinct < params.k {
        return Err(Error::FewerDistinctPointsThanR { distinct, requested: params.k });
    }

    let restarts = params.restarts.max(1);
    let runs: Vec<Run> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, RESTART_STREAM_BASE + r as u64);
            let init = plus_plus_init(points, dim, params.k, &mut rng);
            lloyd(points, dim, init, params)
        })
        .collect();

    let restart_inertias: Vec<f64> = runs.iter().map(|r| r.inertia).collect();
    let best_restart = restart_inertias
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .unwrap();
    let best = runs.into_iter().nth(best_restart).unwrap();
    Ok(KMeansFit {
        dim,
        centers: best.centers,
        assignment: best.assignment,
        inertia: best.inertia,
        restart_inertias,
        best_restart,
    })
}

/// k-means++ seeding: first center uniform, the rest drawn with probability
/// proportional to squared distance from the nearest chosen center.
fn plus_plus_init<R: Rng + ?Sized>(points: &[f64], dim: usize, k: usize, rng: &mut R) -> Vec<f64> {
    let n = points.len() / dim;
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut centers = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centers.extend_from_slice(row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(row(i), row(first))).collect();
    while centers.len() < k * dim {
        let total: f64 = d2.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &w) in d2.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            pick = Some(i);
            if acc > target {
                break;
            }
        }
        let pick = pick.expect("a point away from all chosen centers exists");
        centers.extend_from_slice(row(pick));
        let c = &centers[centers.len() - dim..];
        for (i, w) in d2.iter_mut().enumerate() {
            *w = w.min(sq_dist(row(i), c));
        }
    }
    centers
}

struct Run {
    centers: Vec<f64>,
    assignment: Vec<usize>,
    inertia: f64,
}

fn lloyd(points: &[f64], dim: usize, mut centers: Vec<f64>, params: &KMeansParams) -> Run {
    let n = points.len() / dim;
    let k = centers.len() / dim;
    let row = |i: usize| &points[i * dim..(i + 1) * dim];

    let mut assignment = vec![0usize; n];
    let mut upper = vec![0.0f64; n];
    let mut lower = vec![0.0f64; n];
    let full_pass = |centers: &[f64], assignment: &mut [usize], upper: &mut [f64], lower: &mut [f64]| {
        for i in 0..n {
            let (a, d1, d2) = two_nearest(row(i), centers, dim);
            assignment[i] = a;
            upper[i] = d1;
            lower[i] = d2;
        }
    };
    full_pass(&centers, &mut assignment, &mut upper, &mut lower);

    let mut half_gap = vec![0.0f64; k];
    let mut sums = vec![0.0f64; k * dim];
    let mut counts = vec![0usize; k];
    for _ in 0..params.max_iter {
        // recompute centers from the current assignment
        sums.iter_mut().for_each(|v| *v = 0.0);
        counts.iter_mut().for_each(|v| *v = 0);
        for (i, &a) in assignment.iter().enumerate() {
            counts[a] += 1;
            for (s, x) in sums[a * dim..(a + 1) * dim].iter_mut().zip(row(i)) {
                *s += x;
            }
        }
        let mut reseeded = false;
        let mut moved = vec![0.0f64; k];
        for j in 0..k {
            let c = &mut centers[j * dim..(j + 1) * dim];
            if counts[j] == 0 {
                continue;
            }
            let inv = 1.0 / counts[j] as f64;
            let mut d2 = 0.0;
            for (cv, s) in c.iter_mut().zip(&sums[j * dim..(j + 1) * dim]) {
                let nv = s * inv;
                d2 += (nv - *cv) * (nv - *cv);
                *cv = nv;
            }
            moved[j] = d2.sqrt();
        }
        for j in 0..k {
            if counts[j] == 0 {
                // move the empty center onto the point farthest from its own center
                let far = (0..n)
                    .map(|i| (i, sq_dist(row(i), &centers[assignment[i] * dim..(assignment[i] + 1) * dim])))
                    .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
                    .map(|(i, _)| i)
                    .unwrap();
                let p = row(far).to_vec();
                moved[j] = sq_dist(&p, &centers[j * dim..(j + 1) * dim]).sqrt();
                centers[j * dim..(j + 1) * dim].copy_from_slice(&p);
                counts[assignment[far]] -= 1;
                counts[j] = 1;
                assignment[far] = j;
                reseeded = true;
            }
        }

        let max_move = moved.iter().cloned().fold(0.0, f64::max);
        if max_move < params.tol && !reseeded {
            break;
        }

        if reseeded {
            full_pass(&centers, &mut assignment, &mut upper, &mut lower);
            continue;
        }

        // shift the bounds by the center motion
        let (mut top, mut top_j, mut second) = (0.0f64, usize::MAX, 0.0f64);
        for (j, &p) in moved.iter().enumerate() {
            if p > top {
                second = top;
                top = p;
                top_j = j;
            } else if p > second {
                second = p;
            }
        }
        for i in 0..n {
            let a = assignment[i];
            upper[i] += moved[a];
            lower[i] -= if a == top_j { second } else { top };
        }

        for j in 0..k {
            let cj = &centers[j * dim..(j + 1) * dim];
            let mut best = f64::INFINITY;
            for (l, cl) in centers.chunks_exact(dim).enumerate() {
                if l != j {
                    best = best.min(sq_dist(cj, cl));
                }
            }
            half_gap[j] = 0.5 * best.sqrt();
        }

        for i in 0..n {
            let a = assignment[i];
            let bound = half_gap[a].max(lower[i]);
            if upper[i] <= bound {
                continue;
            }
            upper[i] = sq_dist(row(i), &centers[a * dim..(a + 1) * dim]).sqrt();
            if upper[i] <= bound {
                continue;
            }
            let (b, d1, d2) = two_nearest(row(i), &centers, dim);
            assignment[i] = b;
            upper[i] = d1;
            lower[i] = d2;
        }
    }

    // exact final assignment against the final centers
    let mut inertia = 0.0;
    for (i, slot) in assignment.iter_mut().enumerate() {
        let a = nearest(row(i), &centers, dim);
        *slot = a;
        inertia += sq_dist(row(i), &centers[a * dim..(a + 1) * dim]);
    }
    Run { centers, assignment, inertia }
}

/// Nearest center index plus distances to the nearest and second-nearest.
fn two_nearest(point: &[f64], centers: &[f64], dim: usize) -> (usize, f64, f64) {
    let (mut best, mut d1, mut d2) = (0, f64::INFINITY, f64::INFINITY);
    for (j, c) in centers.chunks_exact(dim).enumerate() {
        let d = sq_dist(point, c);
        if d < d1 {
            d2 = d1;
            d1 = d;
            best = j;
        } else if d < d2 {
            d2 = d;
        }
    }
    (best, d1.sqrt(), d2.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    /// Unaccelerated Lloyd iterations from the same seeding.
    fn plain_lloyd(points: &[f64], dim: usize, mut centers: Vec<f64>, params: &KMeansParams) -> Vec<f64> {
        let k = centers.len() / dim;
        for _ in 0..params.max_iter {
            let mut sums = vec![0.0; k * dim];
            let mut counts = vec![0usize; k];
            for p in points.chunks_exact(dim) {
                let a = nearest(p, &centers, dim);
                counts[a] += 1;
                for d in 0..dim {
                    sums[a * dim + d] += p[d];
                }
            }
            let mut max_move: f64 = 0.0;
            for j in 0..k {
                if counts[j] == 0 {
                    continue;
                }
                let mut d2 = 0.0;
                for d in 0..dim {
                    let nv = sums[j * dim + d] / counts[j] as f64;
                    d2 += (nv - centers[j * dim + d]).powi(2);
                    centers[j * dim + d] = nv;
                }
                max_move = max_move.max(d2.sqrt());
            }
            if max_move < params.tol {
                break;
            }
        }
        centers
    }

    fn blobs(seed: u64, n: usize, centers: &[[f64; 2]], std: f64) -> Vec<f64> {
        let mut rng = substream(seed, 0);
        let noise = Normal::new(0.0, std).unwrap();
        let mut out = Vec::new();
        for c in centers {
            for _ in 0..n {
                out.push(c[0] + noise.sample(&mut rng));
                out.push(c[1] + noise.sample(&mut rng));
            }
        }
        out
    }

    #[test]
    fn exact_cover_has_zero_inertia() {
        let pts = [0.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        let fit = fit(&pts, 2, &KMeansParams::new(3), 1).unwrap();
        assert_eq!(fit.inertia, 0.0);
        let mut centers: Vec<[f64; 2]> = fit.centers.chunks(2).map(|c| [c[0], c[1]]).collect();
        centers.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(centers, vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert_eq!(fit(&[], 2, &KMeansParams::new(2), 1), Err(Error::EmptyInput));
        assert_eq!(
            fit(&[0.5, 0.5, 0.5, 0.5, 0.5, 0.5], 2, &KMeansParams::new(2), 1),
            Err(Error::FewerDistinctPointsThanR { distinct: 1, requested: 2 })
        );
    }

    #[test]
    fn nearest_prefers_lowest_index_on_ties() {
        let centers = [0.0, 0.0, 2.0, 0.0, 1.0, 5.0, 0.0, 0.0];
        assert_eq!(nearest(&[1.0, 0.0], &centers[..4], 2), 0);
        assert_eq!(nearest(&[0.0, 0.0], &centers, 2), 0);
    }

    #[test]
    fn distinct_count() {
        assert_eq!(count_distinct(&[1.0, 2.0, 1.0, 2.0, 3.0, 4.0], 2), 2);
        assert_eq!(count_distinct(&[], 2), 0);
    }

    #[test]
    fn accelerated_iterations_match_plain_lloyd() {
        let pts = blobs(9, 200, &[[0.0, 0.0], [1.0, 0.2], [0.3, 0.9], [0.8, 0.8]], 0.25);
        let params = KMeansParams::new(6);
        for r in 0..4u64 {
            let mut rng = substream(17, r);
            let init = plus_plus_init(&pts, 2, 6, &mut rng);
            let fast = lloyd(&pts, 2, init.clone(), &params);
            let slow = plain_lloyd(&pts, 2, init, &params);
            for (a, b) in fast.centers.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn best_restart_has_lowest_inertia() {
        let pts = blobs(4, 100, &[[0.0, 0.0], [1.0, 0.0], [0.5, 0.8]], 0.3);
        let fit = fit(&pts, 2, &KMeansParams::new(5), 3).unwrap();
        assert_eq!(fit.restart_inertias.len(), 10);
        assert!(fit.restart_inertias.iter().all(|&i| fit.inertia <= i));
        assert_eq!(fit.inertia, fit.restart_inertias[fit.best_restart]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn fit_is_deterministic_and_self_consistent(seed in 0u64..1000, n in 6usize..60, k in 1usize..5) {
            let mut rng = substream(seed, 99);
            let pts: Vec<f64> = (0..n * 2).map(|_| rng.random::<f64>()).collect();
            let params = KMeansParams { restarts: 3, ..KMeansParams::new(k) };
            let a = fit(&pts, 2, &params, seed).unwrap();
            let b = fit(&pts, 2, &params, seed).unwrap();
            prop_assert_eq!(&a, &b);
            for (i, p) in pts.chunks_exact(2).enumerate() {
                prop_assert_eq!(a.assignment[i], nearest(p, &a.centers, 2));
            }
            let recomputed: f64 = pts.chunks_exact(2).zip(&a.assignment).map(|(p, &j)| sq_dist(p, a.center(j))).sum();
            prop_assert!((recomputed - a.inertia).abs() < 1e-12);
        }
    }
}
