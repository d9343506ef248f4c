//! Small dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Unit-modulus phasor `exp(j·phase)`.
pub fn cis(phase: f64) -> C64 {
    let (s, co) = phase.sin_cos();
    C64::new(co, s)
}

pub fn frobenius_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn trace_re(m: &CMatrix) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)].re).sum()
}

/// Eigendecomposition of a Hermitian matrix: returns real eigenvalues and the
/// unitary matrix of eigenvectors (columns).
pub fn hermitian_eigen(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let sym = symmetrize(m);
    let eig = SymmetricEigen::new(sym);
    (eig.eigenvalues, eig.eigenvectors)
}

/// `(M + M^H) / 2`.
pub fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Solves `A X = B` for Hermitian positive definite `A`, falling back to LU
/// when the Cholesky factorisation fails.
pub fn solve_hermitian(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if let Some(chol) = symmetrize(a).cholesky() {
        return Ok(chol.solve(b));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Numerical("singular system in Hermitian solve".into()))
}

/// Largest eigenvalue of the real symmetric 2×2 matrix `[[a, b], [b, d]]`.
pub fn sym2_max_eigenvalue(a: f64, b: f64, d: f64) -> f64 {
    let mean = 0.5 * (a + d);
    let half_diff = 0.5 * (a - d);
    mean + (half_diff * half_diff + b * b).sqrt()
}

/// Smallest eigenvalue of the real symmetric 2×2 matrix `[[a, b], [b, d]]`.
pub fn sym2_min_eigenvalue(a: f64, b: f64, d: f64) -> f64 {
    let mean = 0.5 * (a + d);
    let half_diff = 0.5 * (a - d);
    mean - (half_diff * half_diff + b * b).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_eigenvalues() {
        assert_eq!(sym2_max_eigenvalue(2.0, 0.0, 1.0), 2.0);
        assert_eq!(sym2_min_eigenvalue(2.0, 0.0, 1.0), 1.0);
        // [[1,1],[1,1]] has eigenvalues 0 and 2.
        assert!((sym2_max_eigenvalue(1.0, 1.0, 1.0) - 2.0).abs() < 1e-15);
        assert!(sym2_min_eigenvalue(1.0, 1.0, 1.0).abs() < 1e-15);
    }

    #[test]
    fn hermitian_eigen_reconstructs() {
        let m = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(3.0, 0.0)]);
        let (vals, vecs) = hermitian_eigen(&m);
        let diag = CMatrix::from_diagonal(&vals.map(|v| c(v, 0.0)));
        let back = &vecs * diag * vecs.adjoint();
        assert!((back - &m).norm() < 1e-12);
    }
}
