//! Helpers shared by the integration suites.
#![allow(dead_code)]

use dlrcs::numerics::gaussian_matrix;
use dlrcs::topology::{generate_er_graph, NetworkTopology};
use dlrcs::{Matrix, OrthonormalBasis, Rng};
use nalgebra::DMatrix;

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn from_na(m: &DMatrix<f64>) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix {
    gaussian_matrix(rows, cols, &mut Rng::new(seed, 0)).unwrap()
}

pub fn random_basis(n: usize, r: usize, seed: u64) -> OrthonormalBasis {
    OrthonormalBasis::random(n, r, &mut Rng::new(seed, 7)).unwrap()
}

/// Random `r x r` orthogonal matrix.
pub fn random_rotation(r: usize, seed: u64) -> Matrix {
    random_basis(r, r, seed).into_matrix()
}

/// Connected Erdős–Rényi graph, redrawing until connected.
pub fn connected_er(p: usize, prob: f64, seed: u64) -> NetworkTopology {
    (0..)
        .map(|s| generate_er_graph(p, prob, &mut Rng::new(seed, 100 + s)).unwrap())
        .find(|g| g.is_strongly_connected())
        .unwrap()
}

/// Transitive closure by repeated boolean squaring of the adjacency matrix.
pub fn reachability(topo: &NetworkTopology) -> Vec<Vec<bool>> {
    let p = topo.p();
    let mut reach = vec![vec![false; p]; p];
    for (g, row) in reach.iter_mut().enumerate() {
        row[g] = true;
        for &j in topo.neighbors(g) {
            row[j] = true;
        }
    }
    for _ in 0..p {
        let prev = reach.clone();
        for i in 0..p {
            for j in 0..p {
                reach[i][j] = (0..p).any(|k| prev[i][k] && prev[k][j]);
            }
        }
    }
    reach
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// `Σ_k ‖y_k − A_k U b_k‖²` over `columns` with `b` fixed.
pub fn fixed_b_loss(
    u: &Matrix,
    columns: &[usize],
    b: &[Vec<f64>],
    a: &[Matrix],
    y: &[Vec<f64>],
) -> f64 {
    columns
        .iter()
        .zip(b)
        .map(|(&k, bk)| {
            let pred = a[k].matvec(&u.matvec(bk));
            pred.iter()
                .zip(&y[k])
                .map(|(p, t)| (p - t).powi(2))
                .sum::<f64>()
        })
        .sum()
}

/// Central finite-difference gradient of [`fixed_b_loss`] in `U`.
pub fn finite_difference_gradient(
    u: &Matrix,
    columns: &[usize],
    b: &[Vec<f64>],
    a: &[Matrix],
    y: &[Vec<f64>],
    step: f64,
) -> Matrix {
    Matrix::from_fn(u.rows(), u.cols(), |i, j| {
        let mut plus = u.clone();
        plus.as_mut_slice()[i * u.cols() + j] += step;
        let mut minus = u.clone();
        minus.as_mut_slice()[i * u.cols() + j] -= step;
        (fixed_b_loss(&plus, columns, b, a, y) - fixed_b_loss(&minus, columns, b, a, y))
            / (2.0 * step)
    })
}
