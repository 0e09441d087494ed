//! Pearson correlation of propagated samples and factorisation of the
//! resulting correlation matrix.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{PintError, Result};
use crate::ode::StateVector;

/// Pairwise Pearson correlation between the components of a batch of
/// states. Components with zero spread get zero correlation with every
/// other component; the diagonal is exactly one.
pub fn pearson_correlation(batch: &[StateVector]) -> DMatrix<f64> {
    let Some(first) = batch.first() else {
        return DMatrix::identity(0, 0);
    };
    let d = first.dim();
    let m = batch.len();
    let mut r = DMatrix::identity(d, d);
    if m < 2 {
        return r;
    }

    let mean: Vec<f64> = (0..d)
        .map(|i| batch.iter().map(|x| x[i]).sum::<f64>() / m as f64)
        .collect();
    let spread: Vec<f64> = (0..d)
        .map(|i| {
            batch
                .iter()
                .map(|x| (x[i] - mean[i]).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();

    for i in 0..d {
        for j in (i + 1)..d {
            let rho = if spread[i] > 0.0 && spread[j] > 0.0 {
                let cross: f64 = batch
                    .iter()
                    .map(|x| (x[i] - mean[i]) * (x[j] - mean[j]))
                    .sum();
                (cross / (spread[i] * spread[j])).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            r[(i, j)] = if rho.is_finite() { rho } else { 0.0 };
            r[(j, i)] = r[(i, j)];
        }
    }
    r
}

/// Lower-triangular `L` with `L Lᵀ ≈ R`.
///
/// When plain Cholesky fails, negative eigenvalues are clipped, the diagonal
/// is rescaled back to one, and finally `10⁻¹²·d` jitter is added before
/// giving up.
pub fn factor_correlation(r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = r.clone().cholesky() {
        return Ok(ch.l());
    }
    let d = r.nrows();
    let repaired = nearest_correlation(r);
    if let Some(ch) = repaired.clone().cholesky() {
        return Ok(ch.l());
    }
    let jittered = &repaired + DMatrix::identity(d, d) * (1e-12 * d as f64);
    if let Some(ch) = jittered.cholesky() {
        return Ok(ch.l());
    }
    Err(PintError::Factorization {
        matrix: (0..d).map(|i| r.row(i).iter().copied().collect()).collect(),
    })
}

/// Eigenvalue clipping followed by rescaling to unit diagonal.
fn nearest_correlation(r: &DMatrix<f64>) -> DMatrix<f64> {
    let d = r.nrows();
    let sym = (r + r.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    let mut psd =
        &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let scale: Vec<f64> = (0..d)
        .map(|i| {
            let v = psd[(i, i)];
            if v > 0.0 {
                1.0 / v.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    for i in 0..d {
        for j in 0..d {
            psd[(i, j)] *= scale[i] * scale[j];
        }
        psd[(i, i)] = 1.0;
    }
    psd
}
