//! Dense eigensolvers behind the spectral embedding.

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen};

use crate::error::{Error, Result};

/// Convergence threshold on off-diagonal mass.
pub const TOLERANCE: f64 = 1e-10;
/// Iteration cap for the QR sweeps.
pub const MAX_SWEEPS: usize = 10_000;

/// Leading eigenpairs of a real matrix.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    /// All eigenvalues (real parts), descending.
    pub spectrum: Vec<f64>,
    /// Real parts of the selected eigenvalues, descending.
    pub values: Vec<f64>,
    /// Imaginary parts of the selected eigenvalues; zero for symmetric input.
    pub values_imag: Vec<f64>,
    /// One column per selected eigenvalue.
    pub vectors: DMatrix<f64>,
}

/// The `k` largest eigenpairs of a symmetric matrix.
pub fn symmetric_top_k(a: &DMatrix<f64>, k: usize) -> Result<Eigenpairs> {
    let n = a.nrows();
    let eig = SymmetricEigen::try_new(a.clone(), TOLERANCE, MAX_SWEEPS)
        .ok_or_else(|| Error::DecompositionFailure(format!("symmetric QR did not converge for n = {n}")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let spectrum: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, k);
    for (c, &i) in order.iter().take(k).enumerate() {
        vectors.set_column(c, &eig.eigenvectors.column(i));
        canonicalize_sign(&mut vectors, c);
    }
    Ok(Eigenpairs { values: spectrum[..k].to_vec(), values_imag: vec![0.0; k], spectrum, vectors })
}

/// The `k` eigenpairs of a general real matrix with the largest real part.
///
/// Complex eigenvectors are phase-aligned so their largest entry is real and
/// positive. A conjugate pair that is selected together contributes the real
/// and imaginary parts of one vector, which span the same real subspace.
pub fn general_top_k(a: &DMatrix<f64>, k: usize) -> Result<Eigenpairs> {
    let n = a.nrows();
    let schur = Schur::try_new(a.clone(), TOLERANCE, MAX_SWEEPS)
        .ok_or_else(|| Error::DecompositionFailure(format!("Schur iteration did not converge for n = {n}")))?;
    let mut lambdas: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    lambdas.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
    let spectrum: Vec<f64> = lambdas.iter().map(|l| l.re).collect();
    let scale = a.amax().max(1.0);

    let mut vectors = DMatrix::zeros(n, k);
    let mut values_imag = vec![0.0; k];
    let mut c = 0;
    while c < k {
        let lambda = lambdas[c];
        let v = inverse_iteration(a, lambda)?;
        values_imag[c] = lambda.im;
        let is_pair = lambda.im.abs() > 1e-9 * scale;
        vectors.set_column(c, &v.map(|z| z.re));
        canonicalize_sign(&mut vectors, c);
        if is_pair && c + 1 < k && (lambdas[c + 1] - lambda.conj()).norm() <= 1e-8 * scale {
            values_imag[c + 1] = lambdas[c + 1].im;
            vectors.set_column(c + 1, &v.map(|z| z.im));
            canonicalize_sign(&mut vectors, c + 1);
            c += 2;
        } else {
            c += 1;
        }
    }
    Ok(Eigenpairs { values: spectrum[..k].to_vec(), values_imag, spectrum, vectors })
}

/// Eigenvector for a known eigenvalue by shifted inverse iteration.
pub fn inverse_iteration(a: &DMatrix<f64>, lambda: Complex<f64>) -> Result<DVector<Complex<f64>>> {
    let n = a.nrows();
    let shift = lambda + Complex::new(1e-10, 1e-10) * lambda.norm().max(1.0);
    let mut m: DMatrix<Complex<f64>> = a.map(|x| Complex::new(x, 0.0));
    for i in 0..n {
        m[(i, i)] -= shift;
    }
    let lu = m.lu();
    // deterministic start with no special alignment
    let mut v = DVector::from_fn(n, |i, _| Complex::new(1.0 + 0.37 * ((i * 7919) % 101) as f64 / 101.0, 0.0));
    for _ in 0..4 {
        let next = lu
            .solve(&v)
            .ok_or_else(|| Error::DecompositionFailure("singular shifted matrix in inverse iteration".into()))?;
        let norm = next.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::DecompositionFailure("inverse iteration diverged".into()));
        }
        v = next / Complex::new(norm, 0.0);
    }
    // rotate so the largest-magnitude entry is real and positive
    let p = v.iter().enumerate().max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()).then(y.0.cmp(&x.0))).unwrap().0;
    let phase = v[p] / Complex::new(v[p].norm(), 0.0);
    Ok(v.map(|z| z / phase))
}

/// Flips column `c` so its largest-magnitude entry (first on ties) is positive.
pub fn canonicalize_sign(m: &mut DMatrix<f64>, c: usize) {
    let col = m.column(c);
    let mut best = 0;
    for i in 1..col.len() {
        if col[i].abs() > col[best].abs() {
            best = i;
        }
    }
    if !col.is_empty() && col[best] < 0.0 {
        m.column_mut(c).neg_mut();
    }
}
