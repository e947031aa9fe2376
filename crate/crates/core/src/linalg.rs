//! Small dense complex linear-algebra helpers shared by the modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// `(M + Mᴴ)/2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// `‖a − b‖_F / max(‖a‖_F, ‖b‖_F)`, zero when both are zero.
pub fn relative_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn max_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0.last().copied().unwrap_or(0.0)
}

/// Number of eigenvalues above `rel_tol·λ_max`.
pub fn numerical_rank(m: &CMatrix, rel_tol: f64) -> usize {
    let (values, _) = hermitian_eigen(m);
    let top = values.last().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    values.iter().filter(|&&v| v > rel_tol * top).count()
}

/// Checks Hermitian symmetry and `λ_min ≥ −rel_tol·max(λ_max, 0)`.
pub fn check_psd(m: &CMatrix, rel_tol: f64, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidArgument(format!("{what} must be square")));
    }
    let scale = m.norm().max(f64::MIN_POSITIVE);
    if (m - m.adjoint()).norm() > 1e-10 * scale {
        return Err(Error::InvalidArgument(format!("{what} is not Hermitian")));
    }
    let (values, _) = hermitian_eigen(m);
    let top = values.last().copied().unwrap_or(0.0).max(0.0);
    let bottom = values.first().copied().unwrap_or(0.0);
    if bottom < -rel_tol * top || (top == 0.0 && bottom < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "{what} is not positive semidefinite (min eigenvalue {bottom:e})"
        )));
    }
    Ok(())
}

/// Solves `A X = B` for Hermitian positive-definite `A`.
pub fn hpd_solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let chol = hermitian_part(a)
        .cholesky()
        .ok_or_else(|| Error::InternalConsistency("matrix is not positive definite".into()))?;
    Ok(chol.solve(b))
}

/// `vᴴ M v`, real part (the quadratic form of a Hermitian matrix).
pub fn quadratic_form(m: &CMatrix, v: &CVector) -> Complex64 {
    v.dotc(&(m * v))
}

pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

/// One draw of `CN(0, variance)`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

pub fn complex_normal_vector<R: Rng + ?Sized>(rng: &mut R, len: usize, variance: f64) -> CVector {
    CVector::from_fn(len, |_, _| complex_normal(rng, variance))
}
