//! Small dense helpers shared by the geometry modules.

use nalgebra::{DMatrix, DVector};

/// Fixed-order pairwise summation.
///
/// The split points depend only on the slice length, so the result is
/// bit-identical no matter how the terms were produced.
pub fn pairwise_sum(terms: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if terms.len() <= LEAF {
        return terms.iter().fold(0.0, |acc, &t| acc + t);
    }
    let mid = terms.len() / 2;
    pairwise_sum(&terms[..mid]) + pairwise_sum(&terms[mid..])
}

/// Generalized cross product of the `n - 1` columns of an `n x (n-1)` matrix.
///
/// Component `k` is `(-1)^k det(T without row k)`, which makes
/// `det[a | T] = <a, N>` for every vector `a`.
pub fn cross_columns(tangents: &DMatrix<f64>) -> DVector<f64> {
    let n = tangents.nrows();
    debug_assert_eq!(tangents.ncols() + 1, n);
    DVector::from_fn(n, |k, _| {
        let minor = tangents.clone().remove_row(k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sign * minor.determinant()
    })
}

/// Eigenvalues of the pencil `a v = lambda b v` for symmetric `a` and
/// symmetric positive definite `b`, sorted ascending.
///
/// Returns `None` when `b` is not positive definite.
pub fn generalized_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<Vec<f64>> {
    let chol = b.clone().cholesky()?;
    let l = chol.l();
    // C = L^{-1} A L^{-T}
    let left = l.solve_lower_triangular(a)?;
    let c = l.solve_lower_triangular(&left.transpose())?;
    let c = (&c + c.transpose()) * 0.5;
    let mut eig: Vec<f64> = c.symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(|x, y| x.total_cmp(y));
    Some(eig)
}

/// Orthonormal frame of R^n whose first column is `axis` (normalized).
///
/// The remaining columns come from Gram-Schmidt on the standard basis, so the
/// frame is a deterministic function of `axis`.
pub fn frame_with_axis(axis: &DVector<f64>) -> DMatrix<f64> {
    let n = axis.len();
    let mut cols: Vec<DVector<f64>> = vec![axis.normalize()];
    for e in 0..n {
        if cols.len() == n {
            break;
        }
        let mut v = DVector::from_fn(n, |i, _| if i == e { 1.0 } else { 0.0 });
        for c in &cols {
            let p = c.dot(&v);
            v -= c * p;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / norm);
        }
    }
    DMatrix::from_columns(&cols)
}

/// Symmetrize in place against round-off.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}
