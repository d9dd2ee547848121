//! Eigendecomposition of unitaries, canonical program states and stability.

use crate::error::{Error, Result};
use crate::primitives::phase_estimation_distribution;
use crate::qcore::linalg::{check_unitary, expm_i_hermitian, hermitian_eig, max_abs, turn, CMat, CVec, C64};
use crate::qcore::{delta, trace_distance_mat, DensityMatrix, DyadicRational, RegisterLayout, TorusAngle};
use crate::rng;
use crate::tomography::{estimate_probability, OracleBackend};
use serde::{Deserialize, Serialize};

/// Eigenphases closer than this are merged into one cluster.
pub const CLUSTER_TOL: f64 = 1e-9;

/// `u = sum_j e^(2 pi i theta_j) |v_j><v_j|` with `theta_j` in `[0, 1)`.
#[derive(Clone, Debug)]
pub struct EigenData {
    pub thetas: Vec<TorusAngle>,
    /// Column `j` is `v_j`.
    pub vectors: CMat,
}

impl EigenData {
    pub fn reconstruct(&self) -> CMat {
        let d = self.vectors.nrows();
        let mut u = CMat::zeros(d, d);
        for (j, th) in self.thetas.iter().enumerate() {
            let v = self.vectors.column(j);
            u += (v * v.adjoint()) * turn(th.value());
        }
        u
    }
}

fn qubits_of(d: usize) -> Result<usize> {
    if d == 0 || !d.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("dimension {d} is not a power of two")));
    }
    Ok(d.trailing_zeros() as usize)
}

/// Simultaneously diagonalize the commuting Hermitian parts of `u`, read off eigenphases
/// and merge phases within [`CLUSTER_TOL`] (including across the `0 = 1` seam).
pub fn eigen_decompose(u: &CMat) -> Result<EigenData> {
    qubits_of(u.nrows())?;
    check_unitary(u, 1e-9)?;
    let re = (u + u.adjoint()) * C64::new(0.5, 0.0);
    let im = (u - u.adjoint()) * C64::new(0.0, -0.5);
    let mix = &re + &im * C64::new(0.618_033_988_749_894_9, 0.0);
    let (_, vecs) = hermitian_eig(&mix);
    let mut thetas: Vec<f64> = (0..vecs.ncols())
        .map(|j| {
            let v = vecs.column(j);
            let lam = (v.adjoint() * u * v)[(0, 0)];
            TorusAngle::new(lam.arg() / (2.0 * std::f64::consts::PI)).value()
        })
        .collect();
    for th in thetas.iter_mut() {
        if delta(*th, 0.0) < CLUSTER_TOL {
            *th = 0.0;
        }
    }
    let mut order: Vec<usize> = (0..thetas.len()).collect();
    order.sort_by(|&a, &b| thetas[a].partial_cmp(&thetas[b]).unwrap());
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && thetas[order[j]] - thetas[order[j - 1]] < CLUSTER_TOL {
            j += 1;
        }
        let mean = order[i..j].iter().map(|&o| thetas[o]).sum::<f64>() / (j - i) as f64;
        for &o in &order[i..j] {
            thetas[o] = mean;
        }
        i = j;
    }
    let data = EigenData { thetas: thetas.into_iter().map(TorusAngle::new).collect(), vectors: vecs };
    let err = max_abs(&(data.reconstruct() - u));
    if err > 1e-8 {
        return Err(Error::InvalidArgument(format!("eigendecomposition residual {err:.3e}")));
    }
    Ok(data)
}

/// A state `rho` and time `t` with `exp(2 pi i t rho)` implementing a unitary up to `epsilon`.
#[derive(Clone, Debug)]
pub struct ProgramState {
    pub rho: DensityMatrix,
    pub t: f64,
    pub epsilon: f64,
}

impl ProgramState {
    /// `W = exp(2 pi i t rho)`.
    pub fn unitary(&self) -> CMat {
        expm_i_hermitian(self.rho.matrix(), 2.0 * std::f64::consts::PI * self.t)
    }

    /// Largest `td(u phi u^dagger, W phi W^dagger)` over the given pure inputs.
    pub fn contract_error(&self, u: &CMat, inputs: &[CVec]) -> f64 {
        let w = self.unitary();
        inputs
            .iter()
            .map(|phi| {
                let a = u * phi;
                let b = &w * phi;
                trace_distance_mat(&(&a * a.adjoint()), &(&b * b.adjoint()))
            })
            .fold(0.0, f64::max)
    }
}

/// `t = sum_j theta_j`, `rho = (1/t) sum_j theta_j |v_j><v_j|`; [`Error::ZeroTime`] when `t = 0`.
pub fn canonical_program(u: &CMat) -> Result<ProgramState> {
    let e = eigen_decompose(u)?;
    let n = qubits_of(u.nrows())?;
    let t: f64 = e.thetas.iter().map(|x| x.value()).sum();
    if t < CLUSTER_TOL {
        return Err(Error::ZeroTime);
    }
    let d = u.nrows();
    let mut rho = CMat::zeros(d, d);
    for (j, th) in e.thetas.iter().enumerate() {
        let v = e.vectors.column(j);
        rho += (v * v.adjoint()) * C64::new(th.value() / t, 0.0);
    }
    Ok(ProgramState { rho: DensityMatrix::new(RegisterLayout::single("A", n), rho)?, t, epsilon: 0.0 })
}

/// Number of eigenphases away from zero, i.e. the dimension of the nontrivial action.
pub fn action_dimension(u: &CMat) -> Result<usize> {
    Ok(eigen_decompose(u)?.thetas.iter().filter(|t| t.value() > 0.0).count())
}

/// `e^(2 pi i phi) u`.
pub fn shifted(u: &CMat, phi: f64) -> CMat {
    u * turn(phi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub n: usize,
    /// `2^-3n`.
    pub delta: f64,
    /// Smallest torus distance of an eigenphase from 0 (after the shift, when one is set).
    pub min_distance: f64,
    pub stable: bool,
    pub shift: Option<DyadicRational>,
    /// Rejection estimate at the chosen shift.
    pub h_at_shift: Option<f64>,
    /// Grid points scanned before the shift qualified.
    pub scanned: u64,
}

fn min_distance(u: &CMat) -> Result<f64> {
    Ok(eigen_decompose(u)?.thetas.iter().map(|t| delta(t.value(), 0.0)).fold(0.5, f64::min))
}

/// Every eigenphase at torus distance at least `2^-3n` from 0.
pub fn is_stable(u: &CMat, n: usize) -> Result<StabilityReport> {
    let d = 2f64.powi(-3 * n as i32);
    let md = min_distance(u)?;
    Ok(StabilityReport { n, delta: d, min_distance: md, stable: md >= d, shift: None, h_at_shift: None, scanned: 0 })
}

/// Distribution of the phase-estimation outcome `s` on the maximally mixed input.
pub fn mixed_phase_distribution(u: &CMat, pe_bits: usize) -> Result<Vec<f64>> {
    let d = u.nrows();
    let mut acc = vec![0.0; 1 << pe_bits];
    for x in 0..d {
        let mut e = CVec::zeros(d);
        e[x] = C64::new(1.0, 0.0);
        let r = phase_estimation_distribution(u, pe_bits, &e)?;
        for (a, p) in acc.iter_mut().zip(r.probabilities) {
            *a += p / d as f64;
        }
    }
    Ok(acc)
}

/// Default phase-estimation width of the shift search: `3n + 2`.
pub fn default_search_pe_bits(n: usize) -> usize {
    3 * n + 2
}

/// Scan `r` in `D_{search_bits}` upwards and return the first with `h(r) < 2 * 2^-2n`,
/// where `h(r)` estimates `Pr[Delta(s, -r) <= eps]` for a phase-estimation sample `s` of a
/// uniformly random eigenvector, `eps = 2^-3n + 2^-pe_bits`. The exact backend uses the
/// exact probability; the sampled backend draws a seeded binomial per grid point.
pub fn stability_shift_with(u: &CMat, n: usize, search_bits: u32, pe_bits: usize, backend: &OracleBackend) -> Result<StabilityReport> {
    if qubits_of(u.nrows())? != n {
        return Err(Error::DimensionMismatch { expected: 1 << n, found: u.nrows() });
    }
    check_unitary(u, 1e-9)?;
    let dist = mixed_phase_distribution(u, pe_bits)?;
    let scale = (1u64 << pe_bits) as f64;
    let eps = 2f64.powi(-3 * n as i32) + 1.0 / scale;
    let threshold = 2.0 * 2f64.powi(-2 * n as i32);
    let grid = 1u64 << search_bits;
    for k in 0..grid {
        let r = k as f64 / grid as f64;
        let h_exact: f64 = dist.iter().enumerate().filter(|(s, _)| delta(*s as f64 / scale, -r) <= eps).map(|(_, p)| p).sum();
        let h = if backend.is_exact() {
            h_exact
        } else {
            let accept = estimate_probability(1.0 - h_exact, backend, backend.precision, &[rng::label("stability"), k]);
            1.0 - accept.value()
        };
        if h < threshold {
            let shift = DyadicRational::new(k, search_bits)?;
            let md = min_distance(&shifted(u, r))?;
            let d = 2f64.powi(-3 * n as i32);
            return Ok(StabilityReport {
                n,
                delta: d,
                min_distance: md,
                stable: md >= d,
                shift: Some(shift),
                h_at_shift: Some(h),
                scanned: k + 1,
            });
        }
    }
    Err(Error::NoQualifyingShift(format!("no r in D_{search_bits} has h(r) < {threshold}; raise the search or phase-estimation precision")))
}

/// [`stability_shift_with`] at the default phase-estimation width.
pub fn stability_shift(u: &CMat, n: usize, search_bits: u32, backend: &OracleBackend) -> Result<StabilityReport> {
    stability_shift_with(u, n, search_bits, default_search_pe_bits(n), backend)
}
