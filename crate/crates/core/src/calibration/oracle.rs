use crate::distributions::ScalePosterior;
use crate::error::{Error, Result};

/// Fits an inverse-gamma law to an unnormalized log density over the scale
/// `s` by quadrature on a uniform grid in `u = ln s`, matching the first two
/// moments of `1/s` (`α = E[1/s]²/Var[1/s]`, `β = E[1/s]/Var[1/s]`).
///
/// Used to check closed-form conjugate updates against brute force.
pub fn fit_inverse_gamma_by_quadrature(
    log_density: impl Fn(f64) -> f64,
    ln_lo: f64,
    ln_hi: f64,
    points: usize,
) -> Result<ScalePosterior> {
    if points < 3 || !(ln_hi > ln_lo) {
        return Err(Error::InvalidParameter("quadrature grid needs >= 3 points and lo < hi".into()));
    }
    let h = (ln_hi - ln_lo) / (points - 1) as f64;
    // density in u picks up the Jacobian ds = s du
    let logs: Vec<f64> = (0..points)
        .map(|i| {
            let u = ln_lo + i as f64 * h;
            log_density(u.exp()) + u
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::InvalidParameter("log density is not finite on the grid".into()));
    }
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (i, l) in logs.iter().enumerate() {
        let w = if i == 0 || i == points - 1 { 0.5 } else { 1.0 };
        let p = w * (l - top).exp();
        let inv = (-(ln_lo + i as f64 * h)).exp();
        z += p;
        m1 += p * inv;
        m2 += p * inv * inv;
    }
    let mean = m1 / z;
    let var = m2 / z - mean * mean;
    if !(var > 0.0) {
        return Err(Error::InvalidParameter("posterior of 1/s has no spread on the grid".into()));
    }
    ScalePosterior::new(mean * mean / var, mean / var)
}
