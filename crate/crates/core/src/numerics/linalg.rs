use nalgebra::SymmetricEigen;
use thiserror::Error;

use super::{max_abs, Matrix, Vector};

/// Residual norm below which a Gram–Schmidt step declares rank deficiency.
pub const RANK_TOL: f64 = 1e-12;
/// Maximum asymmetry accepted by [`sym_eigen`].
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("rank deficiency: vector {index} has residual norm {residual:e} after orthogonalization")]
    RankDeficient { index: usize, residual: f64 },
    #[error("inner product is not positive on vector {index} (value {value:e})")]
    NotPositive { index: usize, value: f64 },
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("singular linear system of size {0}")]
    Singular(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Inner product `u^T G v` for a Gram matrix `G`.
pub fn metric_inner(gram: &Matrix) -> impl Fn(&Vector, &Vector) -> f64 + '_ {
    move |u, v| u.dot(&(gram * v))
}

fn orthogonalize<F>(v: &Vector, basis: &[Vector], inner: &F) -> Vector
where
    F: Fn(&Vector, &Vector) -> f64,
{
    // Modified Gram–Schmidt, run twice; the second sweep removes the
    // components reintroduced by cancellation in the first.
    let mut w = v.clone();
    for _ in 0..2 {
        for e in basis {
            let c = inner(e, &w);
            w.axpy(-c, e, 1.0);
        }
    }
    w
}

fn inner_norm<F>(v: &Vector, inner: &F, index: usize) -> Result<f64, NumericsError>
where
    F: Fn(&Vector, &Vector) -> f64,
{
    let sq = inner(v, v);
    if sq < 0.0 && sq.abs() > RANK_TOL * RANK_TOL {
        return Err(NumericsError::NotPositive { index, value: sq });
    }
    Ok(sq.max(0.0).sqrt())
}

/// Orthonormalizes `vectors` in order under `inner`.
///
/// Fails when a residual falls below `1e-12` (scaled by the input norm when
/// that exceeds one) before normalization.
pub fn gram_schmidt<F>(vectors: &[Vector], inner: F) -> Result<Vec<Vector>, NumericsError>
where
    F: Fn(&Vector, &Vector) -> f64,
{
    let mut out: Vec<Vector> = Vec::with_capacity(vectors.len());
    for (index, v) in vectors.iter().enumerate() {
        let scale = inner_norm(v, &inner, index)?.max(1.0);
        let w = orthogonalize(v, &out, &inner);
        let residual = inner_norm(&w, &inner, index)?;
        if residual < RANK_TOL * scale {
            return Err(NumericsError::RankDeficient { index, residual });
        }
        out.push(w / residual);
    }
    Ok(out)
}

/// Orthonormal basis of the span of `vectors`, dropping any vector whose
/// residual is below `rel_tol` times its own norm.
pub fn span_basis<F>(vectors: &[Vector], inner: F, rel_tol: f64) -> Vec<Vector>
where
    F: Fn(&Vector, &Vector) -> f64,
{
    let mut out: Vec<Vector> = Vec::new();
    for v in vectors {
        let norm = inner(v, v).max(0.0).sqrt();
        if norm == 0.0 {
            continue;
        }
        let w = orthogonalize(v, &out, &inner);
        let residual = inner(&w, &w).max(0.0).sqrt();
        if residual > rel_tol * norm {
            out.push(w / residual);
        }
    }
    out
}

/// Completes an orthonormal family to a basis of the `dim`-dimensional space.
///
/// Candidates are the coordinate vectors; at each step the one with the
/// largest residual against the current span is taken.
pub fn extend_orthonormal<F>(
    basis: &[Vector],
    dim: usize,
    inner: F,
) -> Result<Vec<Vector>, NumericsError>
where
    F: Fn(&Vector, &Vector) -> f64,
{
    let mut span = basis.to_vec();
    let mut added = Vec::new();
    while span.len() < dim {
        let mut best: Option<(f64, Vector)> = None;
        for k in 0..dim {
            let w = orthogonalize(&Vector::from_fn(dim, |i, _| f64::from(u8::from(i == k))), &span, &inner);
            let r = inner(&w, &w).max(0.0).sqrt();
            if best.as_ref().map_or(true, |(b, _)| r > *b) {
                best = Some((r, w));
            }
        }
        let (residual, w) = best.expect("dim > 0");
        if residual < RANK_TOL {
            return Err(NumericsError::RankDeficient {
                index: span.len(),
                residual,
            });
        }
        let e = w / residual;
        span.push(e.clone());
        added.push(e);
    }
    Ok(added)
}

/// Eigen-decomposition of a symmetric matrix. Eigenvalues are returned in
/// ascending order with matching eigenvector columns.
pub fn sym_eigen(m: &Matrix) -> Result<(Vector, Matrix), NumericsError> {
    if m.nrows() != m.ncols() {
        return Err(NumericsError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let asymmetry = max_abs(&(m - m.transpose()));
    if asymmetry > SYMMETRY_TOL * max_abs(m).max(1.0) {
        return Err(NumericsError::NotSymmetric { asymmetry });
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
    let values = Vector::from_iterator(order.len(), order.iter().map(|i| eig.eigenvalues[*i]));
    let columns: Vec<Vector> = order
        .iter()
        .map(|i| eig.eigenvectors.column(*i).into_owned())
        .collect();
    let vectors = if columns.is_empty() {
        Matrix::zeros(0, 0)
    } else {
        Matrix::from_columns(&columns)
    };
    Ok((values, vectors))
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn solve(a: &Matrix, b: &Vector) -> Result<Vector, NumericsError> {
    if a.nrows() != a.ncols() {
        return Err(NumericsError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if b.len() != a.nrows() {
        return Err(NumericsError::DimensionMismatch {
            expected: a.nrows(),
            got: b.len(),
        });
    }
    a.clone()
        .lu()
        .solve(b)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or(NumericsError::Singular(a.nrows()))
}

/// Inverse of a small nonsingular matrix.
pub fn inverse(a: &Matrix) -> Result<Matrix, NumericsError> {
    a.clone()
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or(NumericsError::Singular(a.nrows()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn euclid(a: &Vector, b: &Vector) -> f64 {
        a.dot(b)
    }

    #[test]
    fn standard_basis_is_unchanged() {
        let basis = vec![v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0]), v(&[0.0, 0.0, 1.0])];
        let out = gram_schmidt(&basis, euclid).unwrap();
        for (a, b) in basis.iter().zip(&out) {
            assert!((a - b).amax() < 1e-15);
        }
    }

    #[test]
    fn classical_pair() {
        let out = gram_schmidt(&[v(&[1.0, 0.0]), v(&[1.0, 1.0])], euclid).unwrap();
        assert!((&out[0] - v(&[1.0, 0.0])).amax() < 1e-15);
        assert!((&out[1] - v(&[0.0, 1.0])).amax() < 1e-15);
    }

    #[test]
    fn dependent_input_is_rejected() {
        let err = gram_schmidt(&[v(&[1.0, 2.0]), v(&[2.0, 4.0])], euclid).unwrap_err();
        assert!(matches!(err, NumericsError::RankDeficient { index: 1, .. }));
    }

    #[test]
    fn weighted_inner_product() {
        let g = Matrix::from_diagonal(&v(&[4.0, 1.0]));
        let out = gram_schmidt(&[v(&[1.0, 1.0]), v(&[0.0, 1.0])], metric_inner(&g)).unwrap();
        let ip = metric_inner(&g);
        assert!((ip(&out[0], &out[0]) - 1.0).abs() < 1e-14);
        assert!(ip(&out[0], &out[1]).abs() < 1e-14);
    }

    #[test]
    fn extension_completes_basis() {
        let start = vec![v(&[0.0, 1.0, 0.0])];
        let rest = extend_orthonormal(&start, 3, euclid).unwrap();
        assert_eq!(rest.len(), 2);
        for e in &rest {
            assert!(e.dot(&start[0]).abs() < 1e-15);
            assert!((e.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn span_basis_drops_dependent() {
        let out = span_basis(&[v(&[1.0, 0.0]), v(&[3.0, 0.0]), v(&[1.0, 1.0])], euclid, 1e-10);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn eigen_identity_and_diagonal() {
        let (vals, _) = sym_eigen(&Matrix::identity(3, 3)).unwrap();
        assert_eq!(vals.as_slice(), &[1.0, 1.0, 1.0]);
        let (vals, _) = sym_eigen(&Matrix::from_diagonal(&v(&[0.25, 0.25]))).unwrap();
        assert_eq!(vals.as_slice(), &[0.25, 0.25]);
    }

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let m = Matrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, -1.0]);
        let (vals, vecs) = sym_eigen(&m).unwrap();
        assert!(vals[0] <= vals[1] && vals[1] <= vals[2]);
        let rebuilt = &vecs * Matrix::from_diagonal(&vals) * vecs.transpose();
        assert!(max_abs(&(rebuilt - &m)) < 1e-12);
    }

    #[test]
    fn eigen_rejects_asymmetric() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(sym_eigen(&m), Err(NumericsError::NotSymmetric { .. })));
    }

    #[test]
    fn solve_small_system() {
        let a = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let x = solve(&a, &v(&[3.0, 5.0])).unwrap();
        assert!((&a * &x - v(&[3.0, 5.0])).amax() < 1e-14);
        assert!(solve(&Matrix::zeros(2, 2), &v(&[1.0, 1.0])).is_err());
    }
}
