mod common;

use common::to_na;
use dlrcs::numerics::{dot, orthonormality_defect};
use dlrcs::problem::{
    generate_instance, incoherence_mu, parse_instance, take_measurements, write_instance,
};
use dlrcs::Rng;
use proptest::prelude::*;

#[test]
fn generated_matrix_has_exact_rank() {
    for seed in 0..5 {
        let inst = generate_instance(100, 400, 4, &mut Rng::new(seed, 1)).unwrap();
        let sv = to_na(&inst.x_star).singular_values();
        let mut sv: Vec<f64> = sv.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        assert!(sv[4] <= 1e-10 * sv[0], "seed {seed}: sigma_5 = {}", sv[4]);
        assert!((sv[0] - inst.sigma_max).abs() <= 1e-9 * sv[0]);
        assert!((sv[3] - inst.sigma_min).abs() <= 1e-9 * sv[0]);
        assert!(orthonormality_defect(inst.u_star.matrix()) <= 1e-10);
    }
}

#[test]
fn incoherence_matches_svd_oracle() {
    for seed in 0..5 {
        let inst = generate_instance(100, 400, 4, &mut Rng::new(seed, 1)).unwrap();
        let svd = to_na(&inst.x_star).svd(false, true);
        let vt = svd.v_t.unwrap();
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let top = &order[..4];
        let max_norm = (0..400)
            .map(|k| top.iter().map(|&i| vt[(i, k)].powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let oracle = max_norm / (4.0f64 / 400.0).sqrt();
        let mu = incoherence_mu(&inst).unwrap();
        assert!((mu - oracle).abs() <= 1e-8 * oracle, "{mu} vs {oracle}");
        assert!((1.0..=3.0).contains(&mu), "mu = {mu}");
    }
}

#[test]
fn sketch_energy_concentrates() {
    let (n, q, r, m) = (100, 400, 4, 40);
    let mut inside = 0;
    let mut total = 0;
    for seed in 0..5 {
        let inst = generate_instance(n, q, r, &mut Rng::new(seed, 1)).unwrap();
        let ms = take_measurements(&inst, m, &mut Rng::new(seed, 2)).unwrap();
        for k in 0..q {
            assert_eq!(ms.y[k].len(), m);
            let x = inst.column(k);
            let ratio = dot(&ms.y[k], &ms.y[k]) / m as f64 / dot(&x, &x);
            total += 1;
            if (1.0 / 3.0..=3.0).contains(&ratio) {
                inside += 1;
            }
        }
    }
    assert!(inside as f64 >= 0.95 * total as f64, "{inside}/{total}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn instance_file_round_trips(
        (n, q, r) in (1usize..8, 1usize..8).prop_flat_map(|(n, q)| (Just(n), Just(q), 1..=n.min(q))),
        m in 1usize..6,
        seed in any::<u64>(),
    ) {
        let inst = generate_instance(n, q, r, &mut Rng::new(seed, 1)).unwrap();
        let ms = take_measurements(&inst, m, &mut Rng::new(seed, 2)).unwrap();
        let text = write_instance(&inst, Some(&ms));
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(&back.instance.x_star, &inst.x_star);
        let bms = back.measurements.unwrap();
        prop_assert_eq!(&bms.y, &ms.y);
        prop_assert_eq!(write_instance(&back.instance, Some(&bms)), text);
    }
}
