mod common;

use common::{connected_er, gaussian};
use dlrcs::consensus::{
    avg_consensus, consensus_round, disagreement, node_average, ConsensusState,
};
use dlrcs::topology::metropolis_weights;
use dlrcs::Matrix;
use proptest::prelude::*;

fn values(p: usize, rows: usize, cols: usize, seed: u64) -> Vec<Matrix> {
    (0..p)
        .map(|g| gaussian(rows, cols, seed.wrapping_mul(31).wrapping_add(g as u64)))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rounds_conserve_sum_and_contract(
        p in 1usize..=8,
        prob in 0.2f64..=1.0,
        seed in any::<u64>(),
    ) {
        let w = metropolis_weights(&connected_er(p, prob, seed));
        let mut state = ConsensusState::new(values(p, 3, 2, seed)).unwrap();
        let mean = node_average(&state.values).unwrap();
        let mut prev = disagreement(&state.values).unwrap();
        for _ in 0..30 {
            state = consensus_round(&state, &w).unwrap();
            let now = node_average(&state.values).unwrap();
            prop_assert!(now.sub(&mean).frobenius_norm() <= 1e-9 * mean.frobenius_norm().max(1.0));
            let d = disagreement(&state.values).unwrap();
            prop_assert!(d <= prev * (1.0 + 1e-12) + 1e-15);
            prev = d;
        }
    }

    #[test]
    fn many_rounds_reach_the_average(p in 2usize..=8, seed in any::<u64>()) {
        let w = metropolis_weights(&connected_er(p, 0.6, seed));
        let v = values(p, 2, 2, seed);
        let mean = node_average(&v).unwrap();
        let out = avg_consensus(v, &w, 2000).unwrap();
        for o in &out {
            prop_assert!(o.sub(&mean).frobenius_norm() <= 1e-8);
        }
    }
}

#[test]
fn zero_rounds_is_identity() {
    let w = metropolis_weights(&connected_er(6, 0.5, 1));
    let v = values(6, 5, 3, 9);
    assert_eq!(avg_consensus(v.clone(), &w, 0).unwrap(), v);
}
