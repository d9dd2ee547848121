//! Density-matrix exponentiation by repeated partial swaps.

use crate::error::{Error, Result};
use crate::qcore::linalg::{expm_i_hermitian, CMat, C64};
use crate::qcore::{trace_distance_mat, DensityMatrix};

/// One step: adjoin `rho`, apply `exp(i delta Swap)`, trace out the copy. Since
/// `Swap^2 = I` this is `cos^2 sigma + sin^2 rho + i cos sin [rho, sigma]`.
fn partial_swap_step(sigma: &CMat, rho: &CMat, delta: f64) -> CMat {
    let (s, c) = delta.sin_cos();
    let comm = rho * sigma - sigma * rho;
    sigma * C64::new(c * c, 0.0) + rho * C64::new(s * s, 0.0) + comm * C64::new(0.0, c * s)
}

/// Approximate `exp(2 pi i t rho) tau exp(-2 pi i t rho)` with `k` copies of `rho`.
pub fn lmr_apply(tau: &DensityMatrix, rho: &DensityMatrix, t: f64, k: usize) -> Result<DensityMatrix> {
    if tau.matrix().shape() != rho.matrix().shape() {
        return Err(Error::WidthMismatch(tau.width(), rho.width()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("time {t} is negative")));
    }
    let delta = 2.0 * std::f64::consts::PI * t / k as f64;
    let mut sigma = tau.matrix().clone();
    for _ in 0..k {
        sigma = partial_swap_step(&sigma, rho.matrix(), delta);
    }
    DensityMatrix::unnormalized(tau.layout().clone(), sigma)
}

/// The exact target `W tau W^dagger`, `W = exp(2 pi i t rho)`.
pub fn lmr_ideal(tau: &DensityMatrix, rho: &DensityMatrix, t: f64) -> CMat {
    let w = expm_i_hermitian(rho.matrix(), 2.0 * std::f64::consts::PI * t);
    &w * tau.matrix() * w.adjoint()
}

/// `td(lmr_apply(...), W tau W^dagger)`.
pub fn lmr_error(tau: &DensityMatrix, rho: &DensityMatrix, t: f64, k: usize) -> Result<f64> {
    let s = lmr_apply(tau, rho, t, k)?;
    Ok(trace_distance_mat(s.matrix(), &lmr_ideal(tau, rho, t)))
}

/// Double `k` from `k_start` until the worst error over `probes` is at most `budget`.
/// Returns the chosen `k` and its worst error.
pub fn calibrate_copies(
    rho: &DensityMatrix,
    t: f64,
    probes: &[DensityMatrix],
    budget: f64,
    k_start: usize,
    k_max: usize,
) -> Result<(usize, f64)> {
    let mut k = k_start.max(1);
    loop {
        let mut worst: f64 = 0.0;
        for p in probes {
            worst = worst.max(lmr_error(p, rho, t, k)?);
        }
        if worst <= budget || k >= k_max {
            return Ok((k, worst));
        }
        k = (2 * k).min(k_max);
    }
}
