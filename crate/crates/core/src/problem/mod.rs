//! Synthetic low-rank instances, column-wise Gaussian sketches, and the
//! assignment of columns to nodes.

mod io;

pub use io::{parse_instance, write_instance, InstanceFile};

use crate::error::{Error, Result};
use crate::numerics::{
    gaussian_matrix, qr_orthonormalize, symmetric_eigenvalues, Matrix, OrthonormalBasis, Rng,
};

/// Ground truth `X* = U* B̃*` with its factors and conditioning.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub n: usize,
    pub q: usize,
    pub r: usize,
    pub x_star: Matrix,
    pub u_star: OrthonormalBasis,
    /// `Σ* V*ᵀ` in the reduced SVD of `X*`, up to an `r x r` rotation.
    pub b_tilde_star: Matrix,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub kappa: f64,
}

impl ProblemInstance {
    /// Assembles an instance from its factors; singular values come from `B̃*`
    /// because `U*` has orthonormal columns.
    pub fn from_factors(u_star: OrthonormalBasis, b_tilde_star: Matrix) -> Result<Self> {
        let (n, r) = u_star.matrix().shape();
        if b_tilde_star.rows() != r {
            return Err(Error::dims(format!(
                "U* has {r} columns but B̃* has {} rows",
                b_tilde_star.rows()
            )));
        }
        let q = b_tilde_star.cols();
        if r > q {
            return Err(Error::invalid(format!("rank {r} exceeds column count {q}")));
        }
        let gram = b_tilde_star.matmul(&b_tilde_star.transpose());
        let eig = symmetric_eigenvalues(&gram)?;
        let sigma_max = eig[0].max(0.0).sqrt();
        let sigma_min = eig[r - 1].max(0.0).sqrt();
        if sigma_min <= 0.0 {
            return Err(Error::RankDeficient { column: r - 1 });
        }
        let x_star = u_star.matrix().matmul(&b_tilde_star);
        Ok(Self {
            n,
            q,
            r,
            x_star,
            u_star,
            b_tilde_star,
            sigma_max,
            sigma_min,
            kappa: sigma_max / sigma_min,
        })
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.x_star.column(k)
    }
}

/// Random instance with standard Gaussian `B̃*`.
pub fn generate_instance(n: usize, q: usize, r: usize, rng: &mut Rng) -> Result<ProblemInstance> {
    generate_instance_scaled(n, q, r, 1.0, rng)
}

/// Random instance: `U*` from QR of an `n x r` Gaussian matrix, then `B̃*` with
/// i.i.d. `N(0, b_std²)` entries. Draws `n*r` normals for `U*` before `r*q`
/// for `B̃*`.
pub fn generate_instance_scaled(
    n: usize,
    q: usize,
    r: usize,
    b_std: f64,
    rng: &mut Rng,
) -> Result<ProblemInstance> {
    if r == 0 || r > n.min(q) {
        return Err(Error::invalid(format!(
            "rank {r} must lie in 1..=min(n, q) = {}",
            n.min(q)
        )));
    }
    if !(b_std.is_finite() && b_std > 0.0) {
        return Err(Error::invalid(format!(
            "B̃* standard deviation {b_std} must be positive"
        )));
    }
    let u_star = OrthonormalBasis::random(n, r, rng)?;
    let b_tilde = gaussian_matrix(r, q, rng)?.scaled(b_std);
    ProblemInstance::from_factors(u_star, b_tilde)
}

/// Column sketches `y_k = A_k x*_k`.
#[derive(Clone, Debug)]
pub struct MeasurementSet {
    pub m: usize,
    pub a: Vec<Matrix>,
    pub y: Vec<Vec<f64>>,
}

impl MeasurementSet {
    /// Sketches `inst` with caller-provided operators, one `m x n` per column.
    pub fn with_operators(inst: &ProblemInstance, a: Vec<Matrix>) -> Result<Self> {
        if a.len() != inst.q {
            return Err(Error::dims(format!(
                "{} operators for {} columns",
                a.len(),
                inst.q
            )));
        }
        let m = a[0].rows();
        if let Some(bad) = a.iter().position(|ak| ak.shape() != (m, inst.n)) {
            return Err(Error::dims(format!(
                "operator {bad} is {:?}, expected {m}x{}",
                a[bad].shape(),
                inst.n
            )));
        }
        let y = a
            .iter()
            .enumerate()
            .map(|(k, ak)| ak.matvec(&inst.column(k)))
            .collect();
        Ok(Self { m, a, y })
    }

    pub fn q(&self) -> usize {
        self.a.len()
    }

    pub fn n(&self) -> usize {
        self.a[0].cols()
    }
}

/// Draws `A_k` (i.i.d. standard Gaussian, `m x n`) for `k = 0..q` in order.
pub fn take_measurements(
    inst: &ProblemInstance,
    m: usize,
    rng: &mut Rng,
) -> Result<MeasurementSet> {
    if m == 0 {
        return Err(Error::invalid(
            "at least one sketch row per column is required",
        ));
    }
    let a = (0..inst.q)
        .map(|_| gaussian_matrix(m, inst.n, rng))
        .collect::<Result<Vec<_>>>()?;
    MeasurementSet::with_operators(inst, a)
}

/// Disjoint, covering assignment of column indices to nodes (0-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn nodes(&self) -> usize {
        self.blocks.len()
    }

    pub fn columns(&self, node: usize) -> &[usize] {
        &self.blocks[node]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn total_columns(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }
}

/// Contiguous blocks of `q / p` columns; node `g` owns `g*q/p .. (g+1)*q/p`.
pub fn partition_columns(q: usize, p: usize) -> Result<Partition> {
    if p == 0 {
        return Err(Error::invalid("partition needs at least one node"));
    }
    if q == 0 || !q.is_multiple_of(p) {
        return Err(Error::invalid(format!(
            "{p} nodes do not evenly divide {q} columns"
        )));
    }
    let size = q / p;
    Ok(Partition {
        blocks: (0..p)
            .map(|g| (g * size..(g + 1) * size).collect())
            .collect(),
    })
}

/// Smallest `μ` with `max_k ‖b*_k‖ ≤ μ √(r/q)`, where `b*_k` are the columns of
/// `V*ᵀ`.
///
/// `‖b*_k‖²` is the `k`-th leverage score of the row space of `B̃*`, i.e. the
/// squared norm of row `k` of any orthonormal basis of `col(B̃*ᵀ)`.
pub fn incoherence_mu(inst: &ProblemInstance) -> Result<f64> {
    let (q_basis, _) = qr_orthonormalize(&inst.b_tilde_star.transpose())?;
    let q = q_basis.matrix();
    let max_norm = (0..q.rows())
        .map(|k| q.row(k).iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    Ok(max_norm / (inst.r as f64 / inst.q as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_full_rank_instance() {
        let inst = generate_instance(4, 4, 4, &mut Rng::new(1, 0)).unwrap();
        assert!(inst.kappa.is_finite() && inst.kappa >= 1.0);
        assert_eq!(inst.x_star.shape(), (4, 4));
    }

    #[test]
    fn rank_above_dimensions_is_rejected() {
        assert!(matches!(
            generate_instance(3, 3, 5, &mut Rng::new(1, 0)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn equal_seeds_reproduce() {
        let a = generate_instance(10, 12, 3, &mut Rng::new(5, 1)).unwrap();
        let b = generate_instance(10, 12, 3, &mut Rng::new(5, 1)).unwrap();
        assert_eq!(a.x_star.as_slice(), b.x_star.as_slice());
    }

    #[test]
    fn zero_column_gives_zero_sketch() {
        let u =
            OrthonormalBasis::new(Matrix::from_rows(&[&[1.0], &[0.0], &[0.0]]).unwrap()).unwrap();
        let b = Matrix::from_rows(&[&[1.0, 0.0, 2.0]]).unwrap();
        let inst = ProblemInstance::from_factors(u, b).unwrap();
        let ms = take_measurements(&inst, 2, &mut Rng::new(3, 0)).unwrap();
        assert_eq!(ms.y[1], vec![0.0, 0.0]);
    }

    #[test]
    fn identity_sensing_returns_columns() {
        let inst = generate_instance(5, 3, 2, &mut Rng::new(8, 0)).unwrap();
        let ms = MeasurementSet::with_operators(&inst, vec![Matrix::identity(5); 3]).unwrap();
        for k in 0..3 {
            assert_eq!(ms.y[k], inst.column(k));
        }
    }

    #[test]
    fn partition_examples() {
        let p = partition_columns(4, 2).unwrap();
        assert_eq!(p.blocks(), &[vec![0, 1], vec![2, 3]]);
        let p = partition_columns(400, 20).unwrap();
        assert_eq!(p.nodes(), 20);
        assert!(p.blocks().iter().all(|b| b.len() == 20));
        assert!(partition_columns(5, 2).is_err());
        assert!(partition_columns(4, 0).is_err());
    }

    #[test]
    fn incoherence_equal_norm_columns() {
        let u = OrthonormalBasis::new(Matrix::from_rows(&[&[1.0], &[0.0]]).unwrap()).unwrap();
        let inst =
            ProblemInstance::from_factors(u, Matrix::from_rows(&[&[3.0, -3.0, 3.0, 3.0]]).unwrap())
                .unwrap();
        assert!((incoherence_mu(&inst).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn incoherence_single_energetic_column() {
        let u = OrthonormalBasis::new(Matrix::from_rows(&[&[1.0], &[0.0]]).unwrap()).unwrap();
        let inst =
            ProblemInstance::from_factors(u, Matrix::from_rows(&[&[0.0, 0.0, 5.0, 0.0]]).unwrap())
                .unwrap();
        assert!((incoherence_mu(&inst).unwrap() - 2.0).abs() < 1e-12);
    }
}
