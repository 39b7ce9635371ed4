//! Dense linear algebra shared by every other module.
//!
//! All randomness flows through [`Rng`]; every routine here is a pure function
//! of its inputs.

mod eigen;
mod matrix;
mod qr;
mod rng;

pub use eigen::symmetric_eigenvalues;
pub use matrix::{dot, norm, Matrix};
pub use qr::{least_squares, normal_equation_residual, qr_orthonormalize, RANK_TOLERANCE};
pub use rng::{gaussian_matrix, Rng};

use crate::error::{Error, Result};

/// Largest tolerated `|(QᵀQ − I)_ij|` for a basis built from caller data.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-10;

/// Tall matrix with orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthonormalBasis(Matrix);

impl OrthonormalBasis {
    /// Validates orthonormality to [`ORTHONORMAL_TOLERANCE`].
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.rows() < matrix.cols() {
            return Err(Error::invalid(format!(
                "a {}x{} matrix cannot have orthonormal columns",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let dev = orthonormality_defect(&matrix);
        if dev > ORTHONORMAL_TOLERANCE {
            return Err(Error::invalid(format!(
                "columns are not orthonormal (max |QᵀQ − I| = {dev:e})"
            )));
        }
        Ok(Self(matrix))
    }

    pub(crate) fn from_qr(matrix: Matrix) -> Self {
        Self(matrix)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    /// Number of columns `r`.
    pub fn rank(&self) -> usize {
        self.0.cols()
    }

    /// Orthonormal basis of a random `n x r` Gaussian matrix.
    pub fn random(n: usize, r: usize, rng: &mut Rng) -> Result<Self> {
        let g = gaussian_matrix(n, r, rng)?;
        Ok(qr_orthonormalize(&g)?.0)
    }
}

/// `max |(MᵀM − I)_ij|`.
pub fn orthonormality_defect(m: &Matrix) -> f64 {
    m.tr_matmul(m).sub(&Matrix::identity(m.cols())).max_abs()
}

/// Subspace distance `‖(I − U₁U₁ᵀ) U₂‖_F`.
///
/// Evaluated as the Frobenius norm of the explicit residual `U₂ − U₁(U₁ᵀU₂)`
/// so that small distances keep full relative precision.
pub fn subspace_distance(u1: &OrthonormalBasis, u2: &OrthonormalBasis) -> Result<f64> {
    if u1.dim() != u2.dim() {
        return Err(Error::dims(format!(
            "subspace distance between bases in R^{} and R^{}",
            u1.dim(),
            u2.dim()
        )));
    }
    let proj = u1.matrix().matmul(&u1.matrix().tr_matmul(u2.matrix()));
    Ok(u2.matrix().sub(&proj).frobenius_norm())
}

/// Power iteration for the dominant eigenpair of a symmetric PSD operator on R^dim.
///
/// Starts from a Gaussian vector drawn from `rng`. Returns the unit iterate `v`
/// and the Rayleigh quotient `vᵀ·apply(v)`.
pub fn power_iteration_top_eigvec(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    dim: usize,
    iters: usize,
    rng: &mut Rng,
) -> Result<(Vec<f64>, f64)> {
    if dim == 0 || iters == 0 {
        return Err(Error::invalid(
            "power iteration needs dim >= 1 and iters >= 1",
        ));
    }
    let mut v: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
    normalize(&mut v);
    for _ in 0..iters {
        let w = apply(&v);
        if w.len() != dim {
            return Err(Error::dims(format!(
                "operator returned length {} for input length {dim}",
                w.len()
            )));
        }
        if norm(&w) == 0.0 {
            return Ok((v, 0.0));
        }
        v = w;
        normalize(&mut v);
    }
    let lambda = dot(&v, &apply(&v));
    Ok((v, lambda))
}

fn normalize(v: &mut [f64]) {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}
