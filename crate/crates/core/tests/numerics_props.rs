mod common;

use common::{from_na, gaussian, random_basis, random_rotation, to_na};
use dlrcs::numerics::{
    least_squares, normal_equation_residual, orthonormality_defect, power_iteration_top_eigvec,
    qr_orthonormalize, subspace_distance, symmetric_eigenvalues,
};
use dlrcs::{Matrix, OrthonormalBasis, Rng};
use nalgebra::SymmetricEigen;
use proptest::prelude::*;

fn cases() -> ProptestConfig {
    ProptestConfig::with_cases(256)
}

fn tall_dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..16).prop_flat_map(|n| (Just(n), 1..=n))
}

proptest! {
    #![proptest_config(cases())]

    #[test]
    fn qr_is_orthonormal_and_reconstructs((n, r) in tall_dims(), seed in any::<u64>()) {
        let m = gaussian(n, r, seed);
        let (q, rr) = qr_orthonormalize(&m).unwrap();
        prop_assert!(orthonormality_defect(q.matrix()) <= 1e-10);
        let back = q.matrix().matmul(&rr);
        prop_assert!(back.sub(&m).frobenius_norm() <= 1e-10 * m.frobenius_norm().max(1.0));
        for i in 0..r {
            prop_assert!(rr[(i, i)] > 0.0);
            for j in 0..i {
                prop_assert_eq!(rr[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn qr_diagonal_matches_reference_magnitudes((n, r) in tall_dims(), seed in any::<u64>()) {
        let m = gaussian(n, r, seed);
        let (_, rr) = qr_orthonormalize(&m).unwrap();
        let reference = to_na(&m).qr().r();
        for i in 0..r {
            let want = reference[(i, i)].abs();
            prop_assert!((rr[(i, i)] - want).abs() <= 1e-10 * want.max(1.0));
        }
    }

    #[test]
    fn qr_is_idempotent_on_orthonormal_input((n, r) in tall_dims(), seed in any::<u64>()) {
        let u = random_basis(n, r, seed);
        let (q, rr) = qr_orthonormalize(u.matrix()).unwrap();
        prop_assert!(q.matrix().sub(u.matrix()).frobenius_norm() <= 1e-10);
        prop_assert!(rr.sub(&Matrix::identity(r)).frobenius_norm() <= 1e-10);
    }

    #[test]
    fn least_squares_satisfies_normal_equations(
        (m, r) in (1usize..8).prop_flat_map(|r| (r + 1..r + 12, Just(r))),
        seed in any::<u64>(),
    ) {
        let a = gaussian(m, r, seed);
        let y = gaussian(m, 1, seed ^ 0xabc).as_slice().to_vec();
        let b = least_squares(&a, &y).unwrap();
        let scale = (a.frobenius_norm() * y.iter().map(|v| v * v).sum::<f64>().sqrt()).max(1.0);
        prop_assert!(normal_equation_residual(&a, &y, &b) <= 1e-8 * scale);

        let svd = to_na(&a).svd(true, true);
        let oracle = svd.solve(&nalgebra::DVector::from_column_slice(&y), 1e-14).unwrap();
        for (bi, oi) in b.iter().zip(oracle.iter()) {
            prop_assert!((bi - oi).abs() <= 1e-8 * oi.abs().max(1.0));
        }
    }

    #[test]
    fn subspace_distance_is_rotation_invariant(
        (n, r) in tall_dims(),
        seed in any::<u64>(),
    ) {
        let u1 = random_basis(n, r, seed);
        let u2 = random_basis(n, r, seed.wrapping_add(1));
        let q = random_rotation(r, seed.wrapping_add(2));
        let u2q = OrthonormalBasis::new(u2.matrix().matmul(&q)).unwrap();
        let u1q = OrthonormalBasis::new(u1.matrix().matmul(&q)).unwrap();
        let d = subspace_distance(&u1, &u2).unwrap();
        prop_assert!((subspace_distance(&u1, &u2q).unwrap() - d).abs() <= 1e-10);
        prop_assert!((subspace_distance(&u1q, &u2).unwrap() - d).abs() <= 1e-10);
        prop_assert!(subspace_distance(&u2, &u2q).unwrap() <= 1e-10);
        prop_assert!((subspace_distance(&u2, &u1).unwrap() - d).abs() <= 1e-10);
        prop_assert!(d >= 0.0 && d <= (r as f64).sqrt() + 1e-12);
    }

    #[test]
    fn jacobi_matches_reference_eigenvalues(n in 1usize..9, seed in any::<u64>()) {
        let g = gaussian(n, n, seed);
        let s = Matrix::from_fn(n, n, |i, j| g[(i, j)] + g[(j, i)]);
        let ours = symmetric_eigenvalues(&s).unwrap();
        let mut reference: Vec<f64> = SymmetricEigen::new(to_na(&s)).eigenvalues.iter().copied().collect();
        reference.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in ours.iter().zip(&reference) {
            prop_assert!((a - b).abs() <= 1e-10 * s.frobenius_norm().max(1.0));
        }
    }

    #[test]
    fn matrix_products_match_reference(
        (a, b, c) in (1usize..7, 1usize..7, 1usize..7),
        seed in any::<u64>(),
    ) {
        let x = gaussian(a, b, seed);
        let y = gaussian(b, c, seed ^ 1);
        let z = gaussian(a, c, seed ^ 2);
        let want = from_na(&(to_na(&x) * to_na(&y)));
        prop_assert!(x.matmul(&y).sub(&want).max_abs() <= 1e-12);
        let want = from_na(&(to_na(&x).transpose() * to_na(&z)));
        prop_assert!(x.tr_matmul(&z).sub(&want).max_abs() <= 1e-12);
    }
}

/// Coefficients of `det(λI − A)` by Faddeev–LeVerrier, highest degree first.
fn characteristic_polynomial(a: &Matrix) -> Vec<f64> {
    let n = a.rows();
    let mut coeffs = vec![1.0];
    let mut m = Matrix::zeros(n, n);
    for k in 1..=n {
        m = a.matmul(&m);
        for i in 0..n {
            m.as_mut_slice()[i * n + i] += coeffs[k - 1];
        }
        let am = a.matmul(&m);
        let trace: f64 = (0..n).map(|i| am[(i, i)]).sum();
        coeffs.push(-trace / k as f64);
    }
    coeffs
}

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Largest real root of the characteristic polynomial of a symmetric PSD
/// matrix, by a downward scan from a Gershgorin bound and bisection.
fn largest_root(a: &Matrix) -> f64 {
    let c = characteristic_polynomial(a);
    let n = a.rows();
    let bound = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
        + 1.0;
    let steps = 200_000;
    let mut hi = bound;
    let mut lo = bound;
    for s in 1..=steps {
        lo = bound * (1.0 - s as f64 / steps as f64);
        if poly_eval(&c, lo).signum() != poly_eval(&c, hi).signum() {
            break;
        }
        hi = lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if poly_eval(&c, mid).signum() == poly_eval(&c, hi).signum() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn characteristic_polynomial_oracle_sanity() {
    let d = Matrix::from_fn(3, 3, |i, j| if i == j { [3.0, 2.0, 1.0][i] } else { 0.0 });
    let c = characteristic_polynomial(&d);
    let want = [1.0, -6.0, 11.0, -6.0];
    for (a, b) in c.iter().zip(want) {
        assert!((a - b).abs() < 1e-12, "{c:?}");
    }
    assert!((largest_root(&d) - 3.0).abs() < 1e-9);
}

#[test]
fn power_iteration_matches_characteristic_polynomial_on_5x5() {
    for seed in 0..20 {
        let g = gaussian(5, 5, 500 + seed);
        let a = g.matmul(&g.transpose());
        let oracle = largest_root(&a);
        let (v, lambda) =
            power_iteration_top_eigvec(|x| a.matvec(x), 5, 3000, &mut Rng::new(seed, 1)).unwrap();
        assert!(
            (lambda - oracle).abs() <= 1e-8 * oracle,
            "seed {seed}: {lambda} vs {oracle}"
        );
        let av = a.matvec(&v);
        let resid: f64 = av
            .iter()
            .zip(&v)
            .map(|(x, y)| (x - lambda * y).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(
            resid <= 1e-4 * oracle,
            "seed {seed}: eigen-residual {resid}"
        );
    }
}
