//! Synchronous average consensus over a weighted graph.
//!
//! In every round each node replaces its value by
//! `D_g + Σ_{j ∈ N_g} W_gj (D_j − D_g)`, reading only the values its neighbors
//! held at the start of the round. Stacking node values, one round is
//! `D ← W D`; with `W` symmetric and doubly stochastic on a connected graph the
//! iterates converge to the node average at the rate of the second-largest
//! eigenvalue modulus of `W`.

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::topology::WeightMatrix;

/// Per-node values of identical shape plus the number of rounds applied.
#[derive(Clone, Debug)]
pub struct ConsensusState {
    pub values: Vec<Matrix>,
    pub round: usize,
}

impl ConsensusState {
    pub fn new(values: Vec<Matrix>) -> Result<Self> {
        check_uniform(&values)?;
        Ok(Self { values, round: 0 })
    }
}

fn check_uniform(values: &[Matrix]) -> Result<()> {
    let Some(first) = values.first() else {
        return Err(Error::invalid("consensus needs at least one node"));
    };
    if let Some(g) = values.iter().position(|v| v.shape() != first.shape()) {
        return Err(Error::dims(format!(
            "node {g} holds a {:?} value, node 0 holds {:?}",
            values[g].shape(),
            first.shape()
        )));
    }
    Ok(())
}

fn check_against(values: &[Matrix], w: &WeightMatrix) -> Result<()> {
    check_uniform(values)?;
    if values.len() != w.p() {
        return Err(Error::dims(format!(
            "{} node values for a {}-node weight matrix",
            values.len(),
            w.p()
        )));
    }
    Ok(())
}

fn round_into(src: &[Matrix], dst: &mut [Matrix], w: &WeightMatrix) {
    for (g, out) in dst.iter_mut().enumerate() {
        let own = src[g].as_slice();
        let out = out.as_mut_slice();
        out.copy_from_slice(own);
        for &(j, wgj) in w.links(g) {
            for ((o, &dj), &dg) in out.iter_mut().zip(src[j].as_slice()).zip(own) {
                *o += wgj * (dj - dg);
            }
        }
    }
}

/// One synchronous round.
pub fn consensus_round(state: &ConsensusState, w: &WeightMatrix) -> Result<ConsensusState> {
    check_against(&state.values, w)?;
    let mut next = state.values.clone();
    round_into(&state.values, &mut next, w);
    Ok(ConsensusState {
        values: next,
        round: state.round + 1,
    })
}

/// `rounds` synchronous rounds; zero rounds returns the input unchanged.
pub fn avg_consensus(values: Vec<Matrix>, w: &WeightMatrix, rounds: usize) -> Result<Vec<Matrix>> {
    check_against(&values, w)?;
    let mut cur = values;
    if rounds == 0 {
        return Ok(cur);
    }
    let mut next = cur.clone();
    for _ in 0..rounds {
        round_into(&cur, &mut next, w);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}

/// Entry-wise mean over nodes.
pub fn node_average(values: &[Matrix]) -> Result<Matrix> {
    check_uniform(values)?;
    let mut sum = values[0].clone();
    for v in &values[1..] {
        sum.axpy(1.0, v);
    }
    sum.scale(1.0 / values.len() as f64);
    Ok(sum)
}

/// Largest Frobenius distance from any node's value to the node average.
pub fn disagreement(values: &[Matrix]) -> Result<f64> {
    let avg = node_average(values)?;
    Ok(values
        .iter()
        .map(|v| v.sub(&avg).frobenius_norm())
        .fold(0.0, f64::max))
}

/// How per-node values are combined into each node's view of the average.
#[derive(Clone, Copy, Debug)]
pub enum Aggregation<'a> {
    /// A central server hands every node the exact average.
    Exact,
    /// `rounds` synchronous consensus rounds with `weights`.
    Consensus {
        weights: &'a WeightMatrix,
        rounds: usize,
    },
}

impl Aggregation<'_> {
    /// Each node's estimate of the node average, in node order.
    pub fn average(&self, values: Vec<Matrix>) -> Result<Vec<Matrix>> {
        match *self {
            Aggregation::Exact => {
                let avg = node_average(&values)?;
                Ok(vec![avg; values.len()])
            }
            Aggregation::Consensus { weights, rounds } => avg_consensus(values, weights, rounds),
        }
    }

    /// Consensus rounds spent per call; zero for exact aggregation.
    pub fn rounds(&self) -> usize {
        match *self {
            Aggregation::Exact => 0,
            Aggregation::Consensus { rounds, .. } => rounds,
        }
    }
}
