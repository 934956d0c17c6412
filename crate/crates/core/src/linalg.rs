//! Small dense helpers over nalgebra shared by the inference paths.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Smallest accepted squared pivot, relative to the matching diagonal entry.
const PIVOT_REL_TOL: f64 = 1e-13;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Cholesky factorization that rejects numerically singular or non-finite input.
pub fn cholesky(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if !m.is_square() || m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let chol = Cholesky::new(m.clone())?;
    let l = chol.l_dirty();
    for i in 0..m.nrows() {
        let piv = l[(i, i)];
        if !piv.is_finite() || piv <= 0.0 || piv * piv < PIVOT_REL_TOL * m[(i, i)] {
            return None;
        }
    }
    Some(chol)
}

pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    cholesky(m).is_some()
}

/// Checks positive semidefiniteness with eigenvalues allowed down to `-tol * max|m_ij|`.
pub fn is_positive_semidefinite(m: &DMatrix<f64>, tol: f64) -> bool {
    if m.nrows() == 0 {
        return true;
    }
    if m.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let scale = m.amax();
    if scale == 0.0 {
        return true;
    }
    let eig = symmetrize(m).symmetric_eigenvalues();
    eig.iter().all(|&l| l >= -tol * scale)
}

/// A factor `F` with `F Fᵀ = m` for a symmetric PSD matrix: Cholesky when it
/// succeeds, otherwise an eigen square root with negative round-off clipped.
pub fn psd_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(chol) = cholesky(m) {
        return chol.unpack();
    }
    let eig = symmetrize(m).symmetric_eigen();
    let mut f = eig.eigenvectors.clone();
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        let s = l.max(0.0).sqrt();
        f.column_mut(j).scale_mut(s);
    }
    f
}

/// Log-determinant from a Cholesky factor.
pub fn log_det(chol: &Cholesky<f64, Dyn>) -> f64 {
    chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.ln()).sum()
}

pub fn block(m: &DMatrix<f64>, r0: usize, c0: usize, nr: usize, nc: usize) -> DMatrix<f64> {
    m.view((r0, c0), (nr, nc)).into_owned()
}

pub fn segment(v: &DVector<f64>, start: usize, len: usize) -> DVector<f64> {
    v.rows(start, len).into_owned()
}

/// Maximum absolute entry difference divided by the larger max-abs entry.
pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = a.amax().max(b.amax());
    let diff = (a - b).amax();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub fn rel_diff_vec(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let scale = a.amax().max(b.amax());
    let diff = (a - b).amax();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}
