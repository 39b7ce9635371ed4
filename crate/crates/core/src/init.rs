//! Federated truncated spectral initialization.
//!
//! Nodes first agree on the truncation statistic `δ = Σ_k ‖y_k‖²` (sum of
//! local sums via `p ×` average consensus). They then run a power method on
//! `X₀X₀ᵀ`, where column `k` of `X₀` is
//! `(1/m) Σ_i a_ik y_ik 𝟙{y_ik² ≤ 9δ/(mq)}`: every node multiplies its share
//! of `X₀X₀ᵀ` into the common basis, the shares are summed by consensus, and
//! the sum is orthonormalized by positive-diagonal QR. The step size is the
//! reciprocal of the dominant eigenvalue read off the final `R`.

use rayon::prelude::*;

use crate::consensus::Aggregation;
use crate::error::{Error, Result};
use crate::numerics::{
    dot, qr_orthonormalize, subspace_distance, symmetric_eigenvalues, Matrix, OrthonormalBasis, Rng,
};
use crate::problem::{MeasurementSet, Partition};

/// Multiplier in the truncation threshold `9δ / (mq)`.
pub const TRUNCATION_CONSTANT: f64 = 9.0;

/// How `λ_max(R)` is read from the final triangular factor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LambdaRule {
    /// Largest-magnitude diagonal entry, i.e. the largest eigenvalue of `R`.
    #[default]
    Eigenvalue,
    /// Largest singular value of `R`.
    SingularValue,
}

/// Which consensus output each node orthonormalizes after a power step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BasisSync {
    /// Node 0's result is adopted by every node.
    #[default]
    Common,
    /// Every node orthonormalizes its own consensus output.
    PerNode,
}

#[derive(Clone, Copy, Debug)]
pub struct InitConfig {
    pub rank: usize,
    pub pm_iters: usize,
    pub lambda: LambdaRule,
    pub sync: BasisSync,
}

impl InitConfig {
    pub fn new(rank: usize, pm_iters: usize) -> Self {
        Self {
            rank,
            pm_iters,
            lambda: LambdaRule::default(),
            sync: BasisSync::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct InitResult {
    /// Node 0's basis after the last power step.
    pub u0: OrthonormalBasis,
    pub eta: f64,
    /// Global truncation statistic as seen by node 0.
    pub delta: f64,
    pub pm_iterations: usize,
    pub consensus_budget: usize,
    /// `R` from the last orthonormalization at node 0.
    pub r_final: Matrix,
    /// Largest pairwise subspace distance between node bases at the end.
    pub node_spread: f64,
}

/// `δ_g = Σ_{k ∈ columns} Σ_i y_ik²`.
pub fn local_threshold_sum(columns: &[usize], y: &[Vec<f64>]) -> f64 {
    columns.iter().map(|&k| dot(&y[k], &y[k])).sum()
}

/// `p ×` node 0's aggregate of the local sums; equals `Σ_g δ_g` under exact
/// aggregation.
pub fn federated_threshold(deltas: &[f64], agg: &Aggregation<'_>) -> Result<f64> {
    let values = deltas
        .iter()
        .map(|&d| Matrix::new(1, 1, vec![d]))
        .collect::<Result<Vec<_>>>()?;
    let out = agg.average(values)?;
    Ok(deltas.len() as f64 * out[0][(0, 0)])
}

/// Truncated back-projection of one column:
/// `(1/m) Σ_i a_ik y_ik 𝟙{y_ik² ≤ threshold}`.
pub fn truncated_column(a: &Matrix, y: &[f64], threshold: f64) -> Vec<f64> {
    let m = a.rows() as f64;
    let masked: Vec<f64> = y
        .iter()
        .map(|&v| if v * v <= threshold { v / m } else { 0.0 })
        .collect();
    a.tr_matvec(&masked)
}

/// Node share of `X₀X₀ᵀ U`: `Σ_{k ∈ columns} v_k (v_kᵀ U)` with `v_k` from
/// [`truncated_column`] at threshold `9δ/(mq)`. Both factors carry `1/m`.
pub fn truncated_local_operator(
    columns: &[usize],
    u_prev: &OrthonormalBasis,
    delta: f64,
    ms: &MeasurementSet,
) -> Matrix {
    let threshold = TRUNCATION_CONSTANT * delta / (ms.m as f64 * ms.q() as f64);
    let u = u_prev.matrix();
    let mut out = Matrix::zeros(u.rows(), u.cols());
    for &k in columns {
        let v = truncated_column(&ms.a[k], &ms.y[k], threshold);
        let vtu = u.tr_matvec(&v);
        out.add_outer(&v, &vtu);
    }
    out
}

/// Reads `λ_max(R)` under `rule`.
pub fn lambda_max(r: &Matrix, rule: LambdaRule) -> Result<f64> {
    match rule {
        LambdaRule::Eigenvalue => Ok((0..r.rows()).map(|i| r[(i, i)].abs()).fold(0.0, f64::max)),
        LambdaRule::SingularValue => {
            let eig = symmetric_eigenvalues(&r.tr_matmul(r))?;
            Ok(eig[0].max(0.0).sqrt())
        }
    }
}

/// Largest pairwise subspace distance in a set of bases.
pub fn max_pairwise_distance(bases: &[OrthonormalBasis]) -> Result<f64> {
    let mut worst = 0.0_f64;
    for (i, a) in bases.iter().enumerate() {
        for b in &bases[i + 1..] {
            worst = worst.max(subspace_distance(a, b)?);
        }
    }
    Ok(worst)
}

/// Federated power method on the truncated surrogate.
///
/// The common random start is drawn from `rng` (every node holds the same
/// seed). Each of the `cfg.pm_iters` steps costs one aggregation.
pub fn federated_spectral_init(
    ms: &MeasurementSet,
    partition: &Partition,
    agg: &Aggregation<'_>,
    cfg: &InitConfig,
    rng: &mut Rng,
) -> Result<InitResult> {
    let p = partition.nodes();
    if cfg.pm_iters == 0 {
        return Err(Error::invalid(
            "the power method needs at least one iteration",
        ));
    }
    if let Aggregation::Consensus { weights, rounds } = agg {
        if *rounds == 0 {
            return Err(Error::invalid(
                "initialization needs at least one consensus round",
            ));
        }
        if weights.p() != p {
            return Err(Error::dims(format!(
                "{p} partitions for a {}-node graph",
                weights.p()
            )));
        }
    }
    if partition.total_columns() != ms.q() {
        return Err(Error::dims(format!(
            "partition covers {} columns, sketches cover {}",
            partition.total_columns(),
            ms.q()
        )));
    }
    if cfg.rank == 0 || cfg.rank > ms.n() {
        return Err(Error::invalid(format!(
            "rank {} outside 1..={}",
            cfg.rank,
            ms.n()
        )));
    }

    let deltas: Vec<f64> = (0..p)
        .map(|g| local_threshold_sum(partition.columns(g), &ms.y))
        .collect();
    let delta = federated_threshold(&deltas, agg)?;

    let start = OrthonormalBasis::random(ms.n(), cfg.rank, rng)?;
    let mut bases = vec![start; p];
    let mut r_final = Matrix::identity(cfg.rank);
    for _ in 0..cfg.pm_iters {
        let shares: Vec<Matrix> = (0..p)
            .into_par_iter()
            .map(|g| truncated_local_operator(partition.columns(g), &bases[g], delta, ms))
            .collect();
        let mut sums = agg.average(shares)?;
        sums.iter_mut().for_each(|s| s.scale(p as f64));
        match cfg.sync {
            BasisSync::Common => {
                let (u, r) = qr_orthonormalize(&sums[0])?;
                bases = vec![u; p];
                r_final = r;
            }
            BasisSync::PerNode => {
                let factored = sums
                    .par_iter()
                    .map(qr_orthonormalize)
                    .collect::<Result<Vec<_>>>()?;
                r_final = factored[0].1.clone();
                bases = factored.into_iter().map(|(u, _)| u).collect();
            }
        }
    }

    let lambda = lambda_max(&r_final, cfg.lambda)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!(
            "degenerate dominant eigenvalue {lambda}"
        )));
    }
    let node_spread = match cfg.sync {
        BasisSync::Common => 0.0,
        BasisSync::PerNode => max_pairwise_distance(&bases)?,
    };
    Ok(InitResult {
        u0: bases.swap_remove(0),
        eta: 1.0 / lambda,
        delta,
        pm_iterations: cfg.pm_iters,
        consensus_budget: agg.rounds(),
        r_final,
        node_spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::gaussian_matrix;
    use crate::topology::{metropolis_weights, NetworkTopology};

    #[test]
    fn threshold_sums() {
        let y = vec![vec![0.0, 0.0], vec![3.0, 4.0]];
        assert_eq!(local_threshold_sum(&[0], &y), 0.0);
        assert_eq!(local_threshold_sum(&[1], &y), 25.0);
        assert_eq!(local_threshold_sum(&[], &y), 0.0);
    }

    #[test]
    fn federated_threshold_fixed_point_and_complete_graph() {
        let topo = NetworkTopology::from_edges(3, &[(0, 1), (1, 2)], 0.0).unwrap();
        let w = metropolis_weights(&topo);
        let agg = Aggregation::Consensus {
            weights: &w,
            rounds: 3,
        };
        assert!((federated_threshold(&[2.0; 3], &agg).unwrap() - 6.0).abs() < 1e-14);

        let w = metropolis_weights(&NetworkTopology::complete(4).unwrap());
        let agg = Aggregation::Consensus {
            weights: &w,
            rounds: 1,
        };
        let d = [1.0, 5.0, 2.5, 0.5];
        assert!((federated_threshold(&d, &agg).unwrap() - 9.0).abs() < 1e-13);
    }

    #[test]
    fn lambda_rules() {
        let r = Matrix::from_rows(&[&[2.0, 3.0], &[0.0, 1.0]]).unwrap();
        assert_eq!(lambda_max(&r, LambdaRule::Eigenvalue).unwrap(), 2.0);
        // σ_max² is the top root of t² − 14t + 4.
        let expect = (7.0 + 45.0_f64.sqrt()).sqrt();
        assert!((lambda_max(&r, LambdaRule::SingularValue).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn everything_truncated_gives_zero() {
        let mut rng = Rng::new(4, 0);
        let a = gaussian_matrix(3, 4, &mut rng).unwrap();
        let ms = MeasurementSet {
            m: 3,
            a: vec![a],
            y: vec![vec![5.0, -6.0, 7.0]],
        };
        let u = OrthonormalBasis::random(4, 2, &mut rng).unwrap();
        // threshold 9 * 1 / 3 = 3 < every y²
        let out = truncated_local_operator(&[0], &u, 1.0, &ms);
        assert_eq!(out.max_abs(), 0.0);
    }

    #[test]
    fn single_retained_measurement() {
        let mut rng = Rng::new(6, 0);
        let a = gaussian_matrix(2, 3, &mut rng).unwrap();
        let y = vec![0.5, 100.0];
        let ms = MeasurementSet {
            m: 2,
            a: vec![a.clone()],
            y: vec![y.clone()],
        };
        let u = OrthonormalBasis::random(3, 1, &mut rng).unwrap();
        // δ = 10000.25, threshold 9δ/2 keeps both; δ = 1 gives 4.5, keeps only y₁.
        let out = truncated_local_operator(&[0], &u, 1.0, &ms);
        let a1 = a.row(0);
        let a1u: f64 = a1
            .iter()
            .zip(u.matrix().as_slice())
            .map(|(x, y)| x * y)
            .sum();
        for i in 0..3 {
            let expect = y[0] * y[0] / 4.0 * a1[i] * a1u;
            assert!((out[(i, 0)] - expect).abs() < 1e-14);
        }
    }
}
