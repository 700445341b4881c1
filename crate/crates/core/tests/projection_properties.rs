//! Randomized properties of the projection solve and its projectors.

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};

use projuq::linalg::{random_spd, CovarianceFactor, MatrixHandle, SpdEnsembleSpec};
use projuq::projection::{general_posterior, krylov_pair, make_p1, make_p2_from_pair, petrov_galerkin_solve, KrylovVariant};
use projuq::rng;

fn system(n: usize, seed: u64) -> (MatrixHandle, DVector<f64>) {
    let mut r = rng::stream(seed, &[]);
    let a = random_spd(&SpdEnsembleSpec { n, scale: 10.0, seed }, &mut r).unwrap();
    let b = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut r));
    (a, b)
}

fn variant(gmres: bool) -> KrylovVariant {
    if gmres {
        KrylovVariant::GmresLike
    } else {
        KrylovVariant::CgLike
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn residual_is_orthogonal_to_constraints(n in 6usize..60, frac in 0.05f64..0.5, seed in any::<u64>(), gmres in any::<bool>()) {
        let m = ((n as f64 * frac) as usize).max(1);
        let (a, b) = system(n, seed);
        let pair = krylov_pair(&a, &b, m, variant(gmres)).unwrap();
        let x = petrov_galerkin_solve(&a, &b, &DVector::zeros(n), &pair).unwrap();
        let r = &b - a.apply(&x).unwrap();
        let wtr = pair.w().tr_mul(&r).norm();
        prop_assert!(wtr <= 1e-10 * (pair.w().tr_mul(&b).norm() + 1.0));
    }

    #[test]
    fn projectors_are_complementary(n in 6usize..40, m in 1usize..5, seed in any::<u64>(), gmres in any::<bool>()) {
        let (a, b) = system(n, seed);
        let pair = krylov_pair(&a, &b, m, variant(gmres)).unwrap();
        let p1 = make_p1(&pair).to_dense().unwrap();
        let p2 = make_p2_from_pair(&pair).unwrap().to_dense().unwrap();
        // P₁ is a projector, P₂ an orthogonal projector, both annihilated by WᵀA
        let wta = pair.w().tr_mul(&a.to_dense());
        prop_assert!((&p1 * &p1 - &p1).norm() <= 1e-8 * p1.norm());
        prop_assert!((&p2 * &p2 - &p2).norm() <= 1e-10 * n as f64);
        prop_assert!((&p2 - p2.transpose()).norm() <= 1e-10 * n as f64);
        prop_assert!((&wta * &p2).norm() <= 1e-8 * wta.norm());
        prop_assert!((&wta * &p1).norm() <= 1e-8 * wta.norm() * p1.norm());
        prop_assert_eq!(p2.trace().round() as usize, n - m);
    }
}

#[test]
fn posterior_mean_ignores_prior_tail() {
    let n = 25;
    let (a, b) = system(n, 3);
    let pair = krylov_pair(&a, &b, 6, KrylovVariant::CgLike).unwrap();
    let p2 = make_p2_from_pair(&pair).unwrap().to_dense().unwrap();
    let x0 = DVector::zeros(n);
    let expected = petrov_galerkin_solve(&a, &b, &x0, &pair).unwrap();
    for scale in [1e-3, 1.0, 1e3] {
        let sigma0 = CovarianceFactor::new(pair.v().clone())
            .hstack(&CovarianceFactor::from_psd(&(&p2 * scale)).unwrap())
            .unwrap();
        let (mean, cov) = general_posterior(&sigma0, &a, pair.w(), &b, &x0).unwrap();
        assert!((&mean - &expected).norm() <= 1e-9 * expected.norm());
        assert!((cov.to_dense() - &p2 * scale).norm() <= 1e-9 * scale * p2.norm());
    }
}

#[test]
fn full_rank_pair_solves_exactly() {
    let n = 12;
    let (a, b) = system(n, 9);
    let pair = krylov_pair(&a, &b, n, KrylovVariant::GmresLike).unwrap();
    let x = petrov_galerkin_solve(&a, &b, &DVector::zeros(n), &pair).unwrap();
    let exact = a.to_dense().lu().solve(&b).unwrap();
    assert_relative_eq!(x, exact, max_relative = 1e-8);
    let p2 = make_p2_from_pair(&pair).unwrap().to_dense().unwrap();
    assert_relative_eq!(p2, DMatrix::zeros(n, n), epsilon = 1e-10);
}
