//! Symplectic form and symplectic spectra of Gaussian covariance matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Σ = ⊕ [[0, 1], [−1, 0]] for `modes` modes in (Q, P) pair ordering.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        s[(2 * k, 2 * k + 1)] = 1.0;
        s[(2 * k + 1, 2 * k)] = -1.0;
    }
    s
}

/// Symplectic eigenvalues (ascending) of a positive-definite 2n×2n matrix.
///
/// These are the moduli of the eigenvalues of iΣV. They are computed as the
/// square roots of the eigenvalues of −(V^½ Σ V^½)², a symmetric matrix with
/// the same spectrum, so the routine only relies on symmetric eigensolvers.
pub fn symplectic_eigenvalues(cov: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = cov.nrows();
    if !n.is_multiple_of(2) || cov.ncols() != n {
        return Err(Error::UnphysicalCovariance(format!(
            "covariance must be square with even size, got {}x{}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    let sym = (cov + cov.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let floor = eig.eigenvalues.amax() * 1e-14;
    if eig.eigenvalues.iter().any(|&l| !(l > floor)) {
        return Err(Error::UnphysicalCovariance(
            "covariance is not positive definite".into(),
        ));
    }
    let sqrt_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let root = &eig.eigenvectors * sqrt_diag * eig.eigenvectors.transpose();
    let m = &root * symplectic_form(n / 2) * &root;
    let gram = m.transpose() * &m;
    let gram = (&gram + gram.transpose()) * 0.5;
    let mut squares: Vec<f64> = gram.symmetric_eigenvalues().iter().copied().collect();
    squares.sort_by(f64::total_cmp);
    Ok(squares
        .chunks(2)
        .map(|pair| (0.5 * (pair[0] + pair[1])).max(0.0).sqrt())
        .collect())
}
