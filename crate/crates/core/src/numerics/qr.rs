use super::{dot, Matrix, OrthonormalBasis};
use crate::error::{Error, Result};

/// Pivots at or below this fraction of the largest pivot count as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Householder factorization `M = Q R` with `diag(R) > 0`.
///
/// Each reflector is chosen so that it maps its column onto `+‖x‖ e₁`, which
/// makes the factorization unique for full-rank input: two callers holding the
/// same matrix get bitwise-identical factors.
struct Householder {
    /// Column `j` below the diagonal holds reflector `j` (implicit leading 1);
    /// on and above the diagonal it holds `R`.
    packed: Matrix,
    taus: Vec<f64>,
}

impl Householder {
    fn factor(m: &Matrix) -> Result<Self> {
        let (n, r) = m.shape();
        if n < r {
            return Err(Error::invalid(format!(
                "QR needs at least as many rows as columns, got {n}x{r}"
            )));
        }
        let mut a = m.clone();
        let mut taus = vec![0.0; r];
        for j in 0..r {
            let alpha = a[(j, j)];
            let sigma: f64 = (j + 1..n).map(|i| a[(i, j)] * a[(i, j)]).sum();
            let (beta, v0, tau) = if sigma == 0.0 {
                if alpha >= 0.0 {
                    (alpha, 1.0, 0.0)
                } else {
                    (-alpha, 1.0, 2.0)
                }
            } else {
                let nrm = (alpha * alpha + sigma).sqrt();
                let v0 = if alpha <= 0.0 {
                    alpha - nrm
                } else {
                    -sigma / (alpha + nrm)
                };
                (nrm, v0, 2.0 * v0 * v0 / (sigma + v0 * v0))
            };
            for i in j + 1..n {
                a[(i, j)] /= v0;
            }
            a[(j, j)] = beta;
            taus[j] = tau;
            if tau != 0.0 {
                for k in j + 1..r {
                    let mut s = a[(j, k)];
                    for i in j + 1..n {
                        s += a[(i, j)] * a[(i, k)];
                    }
                    s *= tau;
                    a[(j, k)] -= s;
                    for i in j + 1..n {
                        let vi = a[(i, j)];
                        a[(i, k)] -= s * vi;
                    }
                }
            }
        }

        let largest = (0..r).fold(0.0_f64, |acc, j| acc.max(a[(j, j)]));
        if let Some(column) =
            (0..r).find(|&j| a[(j, j)] <= RANK_TOLERANCE * largest || largest == 0.0)
        {
            return Err(Error::RankDeficient { column });
        }
        Ok(Self { packed: a, taus })
    }

    fn r(&self) -> Matrix {
        let r = self.packed.cols();
        Matrix::from_fn(r, r, |i, k| if k >= i { self.packed[(i, k)] } else { 0.0 })
    }

    /// Applies reflector `j` to the vector `x` in place.
    fn reflect(&self, j: usize, x: &mut [f64]) {
        let tau = self.taus[j];
        if tau == 0.0 {
            return;
        }
        let n = self.packed.rows();
        let s = tau * (x[j] + (j + 1..n).map(|i| self.packed[(i, j)] * x[i]).sum::<f64>());
        x[j] -= s;
        for (i, xi) in x.iter_mut().enumerate().take(n).skip(j + 1) {
            *xi -= s * self.packed[(i, j)];
        }
    }

    fn thin_q(&self) -> Matrix {
        let (n, r) = self.packed.shape();
        let mut q = Matrix::zeros(n, r);
        let mut col = vec![0.0; n];
        for k in 0..r {
            col.iter_mut().for_each(|x| *x = 0.0);
            col[k] = 1.0;
            for j in (0..=k).rev() {
                self.reflect(j, &mut col);
            }
            q.set_column(k, &col);
        }
        q
    }

    /// `Qᵀ y`, truncated to the first `r` entries.
    fn qt_apply(&self, y: &[f64]) -> Vec<f64> {
        let r = self.packed.cols();
        let mut x = y.to_vec();
        for j in 0..r {
            self.reflect(j, &mut x);
        }
        x.truncate(r);
        x
    }

    fn back_substitute(&self, rhs: &mut [f64]) {
        let r = self.packed.cols();
        for i in (0..r).rev() {
            let tail: f64 = (i + 1..r).map(|k| self.packed[(i, k)] * rhs[k]).sum();
            rhs[i] = (rhs[i] - tail) / self.packed[(i, i)];
        }
    }
}

/// Thin QR of an `n x r` matrix (`n >= r`) with a strictly positive `R` diagonal.
///
/// Fails with [`Error::RankDeficient`] when some pivot is at most
/// [`RANK_TOLERANCE`] times the largest one.
pub fn qr_orthonormalize(m: &Matrix) -> Result<(OrthonormalBasis, Matrix)> {
    let h = Householder::factor(m)?;
    Ok((OrthonormalBasis::from_qr(h.thin_q()), h.r()))
}

/// Minimizer of `‖y − A b‖₂` for a full-column-rank `m x r` matrix `A`.
pub fn least_squares(a: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != a.rows() {
        return Err(Error::dims(format!(
            "right-hand side has length {}, matrix has {} rows",
            y.len(),
            a.rows()
        )));
    }
    let h = Householder::factor(a)?;
    let mut b = h.qt_apply(y);
    h.back_substitute(&mut b);
    Ok(b)
}

/// Residual of the normal equations, `‖Aᵀ(y − A b)‖`.
pub fn normal_equation_residual(a: &Matrix, y: &[f64], b: &[f64]) -> f64 {
    let ab = a.matvec(b);
    let res: Vec<f64> = y.iter().zip(&ab).map(|(y, p)| y - p).collect();
    let g = a.tr_matvec(&res);
    dot(&g, &g).sqrt()
}
