//! End-to-end paths through the library: file input, calibration,
//! prediction and ensemble assessment.

use approx::assert_relative_eq;
use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};

use projuq::assessment::{discrepancy, run_assessment, AssessmentSpec, PriorMode, Regime, DISCREPANCY_GRID};
use projuq::calibration::{calibrate_by_observation, predictive_student, ObservationPlan, P1Mode, Statistic};
use projuq::distributions::ScalePosterior;
use projuq::linalg::{random_spd, CovarianceFactor, SpdEnsembleSpec};
use projuq::problems::{biharmonic_matrix, read_matrix_market, write_matrix_market};
use projuq::projection::{krylov_pair, make_p2_from_pair, petrov_galerkin_solve, KrylovVariant};
use projuq::{rng, Execution};

#[test]
fn matrix_market_round_trip_preserves_solves() {
    let dir = tempfile::tempdir().unwrap();
    let a = biharmonic_matrix(3).unwrap();
    let path = dir.path().join("bh.mtx");
    write_matrix_market(&path, &a).unwrap();
    let back = read_matrix_market(&path).unwrap();
    assert_eq!(back.to_dense(), a.to_dense());

    let n = a.nrows();
    let b = DVector::from_fn(n, |i, _| (i as f64).sin());
    let x1 = petrov_galerkin_solve(&a, &b, &DVector::zeros(n), &krylov_pair(&a, &b, 10, KrylovVariant::CgLike).unwrap());
    let x2 = petrov_galerkin_solve(&back, &b, &DVector::zeros(n), &krylov_pair(&back, &b, 10, KrylovVariant::CgLike).unwrap());
    assert_eq!(x1.unwrap(), x2.unwrap());
}

#[test]
fn calibrated_predictive_is_centred_on_the_projection_solve() {
    let n = 60;
    let m = 8;
    let mut r = rng::stream(21, &[]);
    let a = random_spd(&SpdEnsembleSpec { n, scale: 10.0, seed: 21 }, &mut r).unwrap();
    let xstar = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut r));
    let b = a.apply(&xstar).unwrap();
    let plan = ObservationPlan { m, k: 4, statistic: Statistic::Z, mode: P1Mode::auto(n), seed: 5, exec: Execution::Parallel };
    let cal = calibrate_by_observation(
        &a,
        &plan,
        ScalePosterior::improper(),
        |a, b, m| krylov_pair(a, b, m, KrylovVariant::CgLike),
        |r| DVector::from_fn(n, |_, _| StandardNormal.sample(r)),
    )
    .unwrap();
    let post = cal.posterior();
    assert_relative_eq!(post.alpha, (4 * (n - m)) as f64 / 2.0);

    let pair = krylov_pair(&a, &b, m, KrylovVariant::CgLike).unwrap();
    let xt = petrov_galerkin_solve(&a, &b, &DVector::zeros(n), &pair).unwrap();
    let psi = CovarianceFactor::from_psd(&make_p2_from_pair(&pair).unwrap().to_dense().unwrap()).unwrap();
    let pred = predictive_student(xt.clone(), &psi, post).unwrap();
    assert_eq!(pred.mean(), &xt);
    assert_eq!(pred.rank(), n - m);
    assert_relative_eq!(pred.dof(), 2.0 * post.alpha);
    // the truth is far more plausible under the predictive than a shifted point
    let shifted = &xstar + (&xstar - &xt) * 10.0;
    assert!(pred.logpdf(&xstar).unwrap() > pred.logpdf(&shifted).unwrap());
}

#[test]
fn assessment_is_independent_of_execution_mode() {
    for (mode, regime) in [(PriorMode::Cheap, Regime::Hierarchical), (PriorMode::Expensive, Regime::Point)] {
        let base = AssessmentSpec { n: 40, matrices: 15, samples: 4, master_seed: 13, ..AssessmentSpec::new(6, KrylovVariant::GmresLike, mode, regime) };
        let par = run_assessment(&AssessmentSpec { exec: Execution::Parallel, ..base.clone() }).unwrap();
        let seq = run_assessment(&AssessmentSpec { exec: Execution::Sequential, ..base }).unwrap();
        assert_eq!(par.samples, seq.samples);
        assert_eq!(
            discrepancy(&par, DISCREPANCY_GRID).unwrap().to_bits(),
            discrepancy(&seq, DISCREPANCY_GRID).unwrap().to_bits()
        );
    }
}
