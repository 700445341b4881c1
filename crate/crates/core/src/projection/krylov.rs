use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::pair::ProjectionPair;
use crate::error::{Error, Result};
use crate::linalg::{orthonormalize, MatrixHandle};

/// Relative norm drop of a new Arnoldi vector that counts as a breakdown.
pub const BREAKDOWN_TOL: f64 = 1e-12;

/// Constraint space paired with a Krylov search space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KrylovVariant {
    /// `W = V`.
    CgLike,
    /// `range(W) = range(AV)`.
    GmresLike,
}

impl KrylovVariant {
    pub const ALL: [KrylovVariant; 2] = [KrylovVariant::CgLike, KrylovVariant::GmresLike];

    pub fn as_str(self) -> &'static str {
        match self {
            KrylovVariant::CgLike => "cg_like",
            KrylovVariant::GmresLike => "gmres_like",
        }
    }
}

impl fmt::Display for KrylovVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KrylovVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cg_like" => Ok(KrylovVariant::CgLike),
            "gmres_like" => Ok(KrylovVariant::GmresLike),
            _ => Err(Error::InvalidParameter(format!("unknown Krylov variant '{s}'"))),
        }
    }
}

/// How the Krylov vectors are stored in `V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KrylovBasis {
    /// Arnoldi with two passes of modified Gram-Schmidt.
    #[default]
    Orthonormal,
    /// Raw `[b̃, Ab̃, …, A^{m−1}b̃]`; conditioning degrades quickly with `m`.
    Monomial,
}

/// Orthonormal basis of `𝒦_m(A, start)`, or `BreakdownAt(j)` when only `j`
/// independent directions exist.
pub fn arnoldi_basis(a: &MatrixHandle, start: &DVector<f64>, m: usize) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if start.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: start.len() });
    }
    if m > n {
        return Err(Error::InvalidParameter(format!("m = {m} exceeds n = {n}")));
    }
    let mut q = DMatrix::zeros(n, m);
    if m == 0 {
        return Ok(q);
    }
    let norm = start.norm();
    if !(norm > 0.0) {
        return Err(Error::BreakdownAt(0));
    }
    q.set_column(0, &(start / norm));
    for j in 1..m {
        let mut w = a.apply(&q.column(j - 1).into_owned())?;
        let scale = w.norm();
        for _ in 0..2 {
            for i in 0..j {
                let qi = q.column(i);
                let h = qi.dot(&w);
                w.axpy(-h, &qi, 1.0);
            }
        }
        let wn = w.norm();
        if !(wn > BREAKDOWN_TOL * scale) {
            return Err(Error::BreakdownAt(j));
        }
        q.set_column(j, &(w / wn));
    }
    Ok(q)
}

/// `[s̃, As̃, …, A^{m−1}s̃]` with `s̃ = start/‖start‖`; breakdown is detected
/// with the orthonormal process.
pub fn monomial_basis(a: &MatrixHandle, start: &DVector<f64>, m: usize) -> Result<DMatrix<f64>> {
    arnoldi_basis(a, start, m)?;
    let n = a.nrows();
    let mut k = DMatrix::zeros(n, m);
    if m == 0 {
        return Ok(k);
    }
    k.set_column(0, &(start / start.norm()));
    for j in 1..m {
        let next = a.apply(&k.column(j - 1).into_owned())?;
        k.set_column(j, &next);
    }
    Ok(k)
}

/// Krylov projection pair started from `b`.
pub fn krylov_pair(a: &MatrixHandle, b: &DVector<f64>, m: usize, variant: KrylovVariant) -> Result<ProjectionPair> {
    krylov_pair_with(a, b, m, variant, KrylovBasis::Orthonormal)
}

/// Krylov projection pair for an arbitrary start vector, which may be `b`
/// or a seed vector independent of it.
pub fn krylov_pair_with(
    a: &MatrixHandle,
    start: &DVector<f64>,
    m: usize,
    variant: KrylovVariant,
    basis: KrylovBasis,
) -> Result<ProjectionPair> {
    let v = match basis {
        KrylovBasis::Orthonormal => arnoldi_basis(a, start, m)?,
        KrylovBasis::Monomial => monomial_basis(a, start, m)?,
    };
    let w = match (variant, basis) {
        (KrylovVariant::CgLike, _) => v.clone(),
        (KrylovVariant::GmresLike, KrylovBasis::Orthonormal) if m > 0 => {
            orthonormalize(&a.apply_block(&v)?)?.into_columns()
        }
        (KrylovVariant::GmresLike, _) => a.apply_block(&v)?,
    };
    ProjectionPair::new(a, v, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_spd, SpdEnsembleSpec};
    use crate::projection::petrov_galerkin_solve;
    use crate::rng;
    use rand_distr::{Distribution, StandardNormal};

    fn randn(n: usize, seed: u64) -> DVector<f64> {
        let mut r = rng::stream(seed, &[]);
        DVector::from_fn(n, |_, _| StandardNormal.sample(&mut r))
    }

    #[test]
    fn identity_breaks_down_after_one_vector() {
        let a = MatrixHandle::identity(5);
        let b = randn(5, 1);
        for m in 2..=5 {
            let err = krylov_pair(&a, &b, m, KrylovVariant::CgLike).unwrap_err();
            assert_eq!(err, Error::BreakdownAt(1));
        }
        assert!(krylov_pair(&a, &b, 1, KrylovVariant::CgLike).is_ok());
    }

    #[test]
    fn zero_start_breaks_down_immediately() {
        let a = MatrixHandle::identity(3);
        assert_eq!(
            krylov_pair(&a, &DVector::zeros(3), 1, KrylovVariant::CgLike).unwrap_err(),
            Error::BreakdownAt(0)
        );
    }

    #[test]
    fn full_krylov_space_solves_exactly() {
        let spec = SpdEnsembleSpec { n: 8, scale: 10.0, seed: 2 };
        let a = random_spd(&spec, &mut rng::stream(2, &[])).unwrap();
        let b = randn(8, 3);
        let pair = krylov_pair(&a, &b, 8, KrylovVariant::CgLike).unwrap();
        let x = petrov_galerkin_solve(&a, &b, &DVector::zeros(8), &pair).unwrap();
        let exact = a.to_dense().lu().solve(&b).unwrap();
        assert!((x - &exact).norm() <= 1e-8 * exact.norm());
    }

    #[test]
    fn gmres_like_minimizes_residual() {
        let mut r = rng::stream(4, &[]);
        let a = MatrixHandle::Dense(DMatrix::from_fn(6, 6, |_, _| StandardNormal.sample(&mut r)) + DMatrix::identity(6, 6) * 3.0);
        let b = randn(6, 5);
        let pair = krylov_pair(&a, &b, 2, KrylovVariant::GmresLike).unwrap();
        let x = petrov_galerkin_solve(&a, &b, &DVector::zeros(6), &pair).unwrap();
        // least-squares oracle: min ‖b − A V c‖ over c
        let av = a.to_dense() * pair.v();
        let c = av.clone().svd(true, true).solve(&b, 1e-14).unwrap();
        let x_ls = pair.v() * c;
        assert!((x - &x_ls).norm() <= 1e-10 * x_ls.norm());
    }

    #[test]
    fn dense_formula_oracle() {
        let spec = SpdEnsembleSpec { n: 8, scale: 10.0, seed: 6 };
        let a = random_spd(&spec, &mut rng::stream(6, &[])).unwrap();
        let b = randn(8, 7);
        let pair = krylov_pair(&a, &b, 3, KrylovVariant::CgLike).unwrap();
        let x = petrov_galerkin_solve(&a, &b, &DVector::zeros(8), &pair).unwrap();
        let (v, w, ad) = (pair.v(), pair.w(), a.to_dense());
        let core_inv = (w.transpose() * &ad * v).try_inverse().unwrap();
        let dense = v * core_inv * w.transpose() * &b;
        assert!((x - &dense).norm() <= 1e-12 * dense.norm());
    }

    #[test]
    fn monomial_and_orthonormal_agree_for_small_m() {
        let spec = SpdEnsembleSpec { n: 20, scale: 10.0, seed: 8 };
        let a = random_spd(&spec, &mut rng::stream(8, &[])).unwrap();
        let b = randn(20, 9);
        for variant in KrylovVariant::ALL {
            let p1 = krylov_pair_with(&a, &b, 4, variant, KrylovBasis::Orthonormal).unwrap();
            let p2 = krylov_pair_with(&a, &b, 4, variant, KrylovBasis::Monomial).unwrap();
            let x0 = DVector::zeros(20);
            let x1 = petrov_galerkin_solve(&a, &b, &x0, &p1).unwrap();
            let x2 = petrov_galerkin_solve(&a, &b, &x0, &p2).unwrap();
            assert!((&x1 - &x2).norm() <= 1e-8 * x1.norm());
        }
    }

    #[test]
    fn variant_round_trip() {
        for v in KrylovVariant::ALL {
            assert_eq!(v.as_str().parse::<KrylovVariant>().unwrap(), v);
        }
        assert!("bicg".parse::<KrylovVariant>().is_err());
    }
}
