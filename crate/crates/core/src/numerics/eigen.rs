use super::Matrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations, in
/// descending order. Intended for `r x r` Gram matrices, not large problems.
pub fn symmetric_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    let n = m.rows();
    if n != m.cols() {
        return Err(Error::dims(format!(
            "{}x{} matrix is not square",
            m.rows(),
            m.cols()
        )));
    }
    let scale = m.max_abs();
    if m.sub(&m.transpose()).max_abs() > 1e-12 * scale.max(1.0) {
        return Err(Error::invalid("matrix is not symmetric"));
    }
    let mut a = m.clone();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() <= f64::EPSILON * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    Ok(eig)
}
