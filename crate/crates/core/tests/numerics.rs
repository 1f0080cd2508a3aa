use approx::assert_relative_eq;
use proptest::prelude::*;

use mmw_discovery::numerics::{eigh, rayleigh_quotient, svd, thin_svd, vector, ComplexMatrix, C64};
use mmw_discovery::rng::{complex_normal_vec, trial_rng};

fn random_matrix(seed: u64, i: u64, rows: usize, cols: usize) -> ComplexMatrix {
    let mut rng = trial_rng(seed, i);
    ComplexMatrix::new(rows, cols, complex_normal_vec(&mut rng, rows * cols, 1.0)).unwrap()
}

fn unitarity_error(q: &ComplexMatrix) -> f64 {
    q.adjoint()
        .matmul(q)
        .sub(&ComplexMatrix::identity(q.cols()))
        .max_abs()
}

fn matrix_strategy() -> impl Strategy<Value = ComplexMatrix> {
    (1usize..7, 1usize..9).prop_flat_map(|(r, c)| {
        prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), r * c).prop_map(move |v| {
            ComplexMatrix::new(
                r,
                c,
                v.into_iter().map(|(re, im)| C64::new(re, im)).collect(),
            )
            .unwrap()
        })
    })
}

proptest! {
    #[test]
    fn svd_reconstructs_and_is_unitary(m in matrix_strategy()) {
        let s = svd(&m).unwrap();
        let scale = m.frobenius_norm().max(1e-300);
        prop_assert!(s.reconstruct().sub(&m).frobenius_norm() / scale <= 1e-10);
        prop_assert!(unitarity_error(&s.left_vectors) <= 1e-10);
        prop_assert!(unitarity_error(&s.right_vectors) <= 1e-10);
        prop_assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(s.singular_values.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn eigh_satisfies_eigen_equation(m in matrix_strategy()) {
        let a = m.adjoint().matmul(&m);
        let e = eigh(&a).unwrap();
        let scale = a.max_abs().max(1.0);
        for i in 0..a.rows() {
            let q = e.eigenvector(i);
            let r: Vec<C64> = a.matvec(&q).iter().zip(&q).map(|(x, y)| x - y * e.eigenvalues[i]).collect();
            prop_assert!(vector::norm_inf(&r) <= 1e-10 * scale);
        }
        prop_assert!(unitarity_error(&e.eigenvectors) <= 1e-10);
    }
}

#[test]
fn svd_phase_convention() {
    let m = random_matrix(1, 0, 4, 64);
    let s = svd(&m).unwrap();
    for c in 0..s.right_vectors.cols() {
        let v = s.right_vectors.column(c);
        let k = vector::argmax_abs(&v);
        assert!(v[k].im.abs() <= 1e-12 && v[k].re >= 0.0);
    }
}

#[test]
fn svd_of_a_4x64_draw() {
    let m = random_matrix(1, 1, 4, 64);
    let s = svd(&m).unwrap();
    assert!(s.reconstruct().sub(&m).frobenius_norm() / m.frobenius_norm() <= 1e-10);
    let t = thin_svd(&m).unwrap();
    assert_relative_eq!(t.sigma1(), s.singular_values[0], max_relative = 1e-12);
}

#[test]
fn svd_small_cases() {
    let s = svd(&ComplexMatrix::from_diag(&[2.0, 1.0])).unwrap();
    assert_relative_eq!(s.singular_values[0], 2.0, epsilon = 1e-14);
    assert_relative_eq!(s.singular_values[1], 1.0, epsilon = 1e-14);
    let v1 = s.v1();
    assert!((v1[0] - C64::new(1.0, 0.0)).norm() < 1e-14 && v1[1].norm() < 1e-14);

    let mut rng = trial_rng(2, 0);
    let u = vector::normalized(&complex_normal_vec(&mut rng, 3, 1.0)).unwrap();
    let v = vector::normalized(&complex_normal_vec(&mut rng, 5, 1.0)).unwrap();
    let c = C64::new(-1.5, 2.0);
    let s = svd(&ComplexMatrix::outer(&u, &v).scale(c)).unwrap();
    assert_relative_eq!(s.singular_values[0], 2.5, max_relative = 1e-12);
    assert!(s.singular_values[1..].iter().all(|&x| x < 1e-12));
}

#[test]
fn eigh_matches_squared_singular_values() {
    for i in 0..120 {
        let (r, c) = (1 + i as usize % 4, 2 + i as usize % 13);
        let m = random_matrix(3, i, r, c);
        let s = svd(&m).unwrap();
        let e = eigh(&m.adjoint().matmul(&m)).unwrap();
        for (k, &lam) in e.eigenvalues.iter().enumerate() {
            let want = s.singular_values.get(k).map_or(0.0, |x| x * x);
            assert!(
                (lam - want).abs() <= 1e-9 * (1.0 + want),
                "draw {i}: {lam} vs {want}"
            );
        }
    }
}

#[test]
fn eigh_small_cases() {
    let e = eigh(&ComplexMatrix::identity(4)).unwrap();
    assert!(e.eigenvalues.iter().all(|&x| (x - 1.0).abs() < 1e-14));

    let mut rng = trial_rng(4, 0);
    let a = complex_normal_vec(&mut rng, 8, 1.0);
    let e = eigh(&ComplexMatrix::outer(&a, &a)).unwrap();
    assert_relative_eq!(e.eigenvalues[0], vector::norm_sqr(&a), max_relative = 1e-12);
    assert!(e.eigenvalues[1..].iter().all(|x| x.abs() < 1e-12));
}

#[test]
fn eigh_rejects_non_hermitian() {
    let m = ComplexMatrix::new(
        2,
        2,
        vec![
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ],
    )
    .unwrap();
    assert!(eigh(&m).is_err());
    assert!(eigh(&random_matrix(5, 0, 2, 3)).is_err());
}

#[test]
fn rayleigh_quotient_bounds() {
    let x = [C64::new(0.3, -1.0), C64::new(2.0, 0.5)];
    assert_relative_eq!(
        rayleigh_quotient(&ComplexMatrix::identity(2), &x).unwrap(),
        1.0,
        epsilon = 1e-15
    );
    let e1 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    assert_relative_eq!(
        rayleigh_quotient(&ComplexMatrix::from_diag(&[3.0, 1.0]), &e1).unwrap(),
        3.0
    );
    assert!(rayleigh_quotient(&ComplexMatrix::identity(2), &[C64::new(0.0, 0.0); 2]).is_err());

    for i in 0..100 {
        let m = random_matrix(6, i, 6, 6).hermitian_part();
        let lmax = eigh(&m).unwrap().max_eigenvalue();
        let x = complex_normal_vec(&mut trial_rng(7, i), 6, 1.0);
        assert!(rayleigh_quotient(&m, &x).unwrap() <= lmax + 1e-9);
    }
}
