use nalgebra::DMatrix;
use noise_disturbance::gaussian::{random_valid_covariance, rsup_check, transform_covariance};
use noise_disturbance::linalg::{hermitian_eigenvalues, is_positive_semidefinite, ComplexMatrix, RealMatrix, C64};
use noise_disturbance::measurement::{matrix_oup_check, rotate_nd, NdAssessment};
use noise_disturbance::scenarios::StateSpec;
use noise_disturbance::symplectic::{random_symplectic, symplectic_deviation, SymplecticForm};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_gram(dim: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b =
        DMatrix::<C64>::from_fn(dim, dim, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let g = &b * b.adjoint();
    ComplexMatrix::new((&g + g.adjoint()) * C64::new(0.5, 0.0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn psd_sums_stay_psd(dim in 1usize..6, s1 in any::<u64>(), s2 in any::<u64>()) {
        let (a, b) = (random_gram(dim, s1), random_gram(dim, s2));
        let sum = a.add(&b).unwrap();
        prop_assert!(is_positive_semidefinite(&sum, 1e-9).unwrap().psd);
        // Weyl: λ_min(A + B) ≥ λ_min(A) + λ_min(B)
        let min = |m: &ComplexMatrix| hermitian_eigenvalues(m).unwrap()[0];
        prop_assert!(min(&sum) >= min(&a) + min(&b) - 1e-9 * sum.max_abs().max(1.0));
    }

    #[test]
    fn generated_symplectics_have_unit_determinant(n in 1usize..4, seed in any::<u64>()) {
        let s = random_symplectic(n, seed);
        let form = SymplecticForm::new(n, 1.0);
        prop_assert!(symplectic_deviation(&s, &form).unwrap() <= 1e-9 * s.amax().powi(2).max(1.0));
        let det = s.determinant();
        prop_assert!((det - 1.0).abs() <= 1e-8 * s.amax().powi(2 * n as i32).max(1.0), "det = {}", det);
    }

    #[test]
    fn valid_covariances_stay_valid_under_symplectics(n in 1usize..4, s1 in any::<u64>(), s2 in any::<u64>()) {
        let state = random_valid_covariance(n, 0.5, s1);
        prop_assert!(rsup_check(&state, 1e-9).unwrap().psd);
        let moved = transform_covariance(&state, &random_symplectic(n, s2)).unwrap();
        prop_assert!(rsup_check(&moved, 1e-9).unwrap().psd);
    }

    #[test]
    fn matrix_verdict_is_symplectic_invariant(
        s1 in any::<u64>(),
        s2 in any::<u64>(),
        shrink in prop_oneof![Just(1.0), 0.2f64..0.9, 1.1f64..3.0],
    ) {
        let k = random_valid_covariance(1, 0.5, s1).sigma * shrink;
        let cal_g = SymplecticForm::new(1, 0.5).matrix();
        let a = NdAssessment::from_parts(k, RealMatrix::zeros(2, 2), cal_g, vec![0.5], vec![0.5], 1e-9).unwrap();
        let b = rotate_nd(&a, &random_symplectic(1, s2)).unwrap();
        let (va, vb) = (matrix_oup_check(&a, 1e-9).unwrap(), matrix_oup_check(&b, 1e-9).unwrap());
        prop_assert_eq!(va.holds, vb.holds);
        // the determinant of K + (i/4)J is a symplectic invariant
        prop_assert!((va.determinant - vb.determinant).abs() <= 1e-9 * b.k.amax().powi(2).max(1.0));
    }

    #[test]
    fn squeezed_spec_round_trips(r in -3.0f64..3.0) {
        let spec = StateSpec::Squeezed(r);
        prop_assert_eq!(spec.to_string().parse::<StateSpec>().unwrap(), spec);
    }
}
