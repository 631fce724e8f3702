//! Small dense complex linear algebra shared by the solvers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// `exp(i * s * h)` for Hermitian `h`, via its eigendecomposition.
pub fn expi_hermitian(h: &CMatrix, s: f64) -> CMatrix {
    let eig = SymmetricEigen::new(h.clone());
    let v = &eig.eigenvectors;
    let phases = CVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&lambda| Complex64::from_polar(1.0, s * lambda)),
    );
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    scaled * v.adjoint()
}

/// Largest elementwise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    max_abs_diff(a, &a.adjoint())
}

/// |<a|b>|^2 for normalized vectors.
pub fn fidelity(a: &CVector, b: &CVector) -> f64 {
    a.dotc(b).norm_sqr()
}
