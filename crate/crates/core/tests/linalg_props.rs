mod common;

use chainstab::linalg::{eigenvalues, product_along_word};
use chainstab::{Matrix, Word};
use common::{naive_mul, naive_product, power_norm, rows, small_norm, small_radius};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-1.0f64..1.0, rows * cols)
        .prop_map(move |d| Matrix::new(rows, cols, d).unwrap())
}

fn square(max: usize) -> impl Strategy<Value = Matrix> {
    (1..=max).prop_flat_map(|n| matrix(n, n))
}

fn square_pair(max: usize) -> impl Strategy<Value = (Matrix, Matrix)> {
    (1..=max).prop_flat_map(|n| (matrix(n, n), matrix(n, n)))
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kron_norm_is_multiplicative(a in square(4), b in square(3)) {
        let lhs = a.kron(&b).operator_norm();
        let rhs = a.operator_norm() * b.operator_norm();
        prop_assert!(rel_close(lhs, rhs, 1e-9), "{lhs} vs {rhs}");
    }

    #[test]
    fn radius_below_norm(a in square(7)) {
        let rho = a.spectral_radius().unwrap();
        prop_assert!(rho <= a.operator_norm() * (1.0 + 1e-9) + 1e-15);
    }

    #[test]
    fn radius_of_ab_equals_ba((a, b) in square_pair(6)) {
        let ab = a.mat_mul(&b).unwrap().spectral_radius().unwrap();
        let ba = b.mat_mul(&a).unwrap().spectral_radius().unwrap();
        prop_assert!(rel_close(ab, ba, 1e-9), "{ab} vs {ba}");
    }

    #[test]
    fn radius_of_square_is_square_of_radius(a in square(7)) {
        let r = a.spectral_radius().unwrap();
        let r2 = a.mat_mul(&a).unwrap().spectral_radius().unwrap();
        prop_assert!(rel_close(r * r, r2, 1e-9), "{} vs {r2}", r * r);
    }

    #[test]
    fn norm_matches_independent_power_iteration(a in square(6)) {
        let mine = a.operator_norm();
        let other = power_norm(&rows(&a));
        prop_assert!(rel_close(mine, other, 1e-8), "{mine} vs {other}");
        prop_assert!(mine <= a.frobenius_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn small_cases_match_closed_forms(a in square(2)) {
        let r = rows(&a);
        prop_assert!(rel_close(a.operator_norm(), small_norm(&r), 1e-10));
        prop_assert!((a.spectral_radius().unwrap() - small_radius(&r)).abs() <= 1e-9 * (1.0 + small_radius(&r)));
    }

    #[test]
    fn eigenvalues_sum_to_trace(a in square(8)) {
        let ev = eigenvalues(&a).unwrap();
        prop_assert_eq!(ev.len(), a.rows());
        let tr: f64 = (0..a.rows()).map(|i| a.get(i, i)).sum();
        let re: f64 = ev.iter().map(|e| e.0).sum();
        let im: f64 = ev.iter().map(|e| e.1).sum();
        prop_assert!((tr - re).abs() <= 1e-9 * (1.0 + a.frobenius_norm()));
        prop_assert!(im.abs() <= 1e-9 * (1.0 + a.frobenius_norm()));
    }

    #[test]
    fn mat_mul_matches_triple_loop(n in 1usize..6, m in 1usize..6, p in 1usize..6, seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let a = common::random_matrix(&mut r, n, m);
        let b = common::random_matrix(&mut r, m, p);
        let c = a.mat_mul(&b).unwrap();
        prop_assert_eq!((c.rows(), c.cols()), (n, p));
        let want = naive_mul(&rows(&a), &rows(&b));
        for i in 0..n {
            for j in 0..p {
                prop_assert!((c.get(i, j) - want[i][j]).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn word_products_match_naive(seed in any::<u64>(), k in 1usize..4, d in 1usize..4, w in prop::collection::vec(0usize..3, 1..8)) {
        let mut r = common::rng(seed);
        let mats: Vec<Matrix> = (0..k).map(|_| common::random_matrix(&mut r, d, d)).collect();
        let w: Vec<usize> = w.into_iter().map(|x| x % k).collect();
        let got = product_along_word(&mats, &Word::from_zero_based(w.clone())).unwrap();
        let want = naive_product(&mats.iter().map(rows).collect::<Vec<_>>(), &w);
        for i in 0..d {
            for j in 0..d {
                prop_assert!((got.get(i, j) - want[i][j]).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn examples() {
    let a = Matrix::from_rows(&[[0.0, 2.0], [0.0, 0.0]]).unwrap();
    let b = Matrix::from_rows(&[[0.0, 0.0], [1.0 / 3.0, 0.0]]).unwrap();
    let c = a.mat_mul(&b).unwrap();
    let want = naive_mul(&rows(&a), &rows(&b));
    assert_eq!(rows(&c), want);
    assert!((c.get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(a.operator_norm(), 2.0);
    assert_eq!(
        Matrix::from_rows(&[[3.0, 0.0], [0.0, -5.0]])
            .unwrap()
            .operator_norm(),
        5.0
    );
    let rot = Matrix::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]).unwrap();
    assert!((rot.spectral_radius().unwrap() - 1.0).abs() < 1e-14);
    assert_eq!(a.spectral_radius().unwrap(), 0.0);
    let lifted = Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]])
        .unwrap()
        .kron(&Matrix::scalar(2.0).unwrap());
    assert_eq!(lifted, a);
    let i3 = Matrix::identity(3);
    let blocks = i3.kron(&b);
    for bi in 0..3 {
        for bj in 0..3 {
            for i in 0..2 {
                for j in 0..2 {
                    let want = if bi == bj { b.get(i, j) } else { 0.0 };
                    assert_eq!(blocks.get(2 * bi + i, 2 * bj + j), want);
                }
            }
        }
    }
    assert!(Matrix::new(2, 2, vec![1.0, f64::NAN, 0.0, 0.0]).is_err());
    assert!(Matrix::new(2, 2, vec![1.0]).is_err());
    assert!(a.mat_mul(&Matrix::identity(3)).is_err());
    assert!(product_along_word(&[a], &Word::default()).is_err());
}
