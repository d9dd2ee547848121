//! The program-state generator, its repeat-until-success wrapper and the evolution-time
//! estimate.

use super::program::{eigen_decompose, is_stable, EigenData};
use crate::error::{Error, Result};
use crate::primitives::{maximally_entangled, phase_estimation, phase_estimation_distribution};
use crate::qcore::linalg::{CMat, C64};
use crate::qcore::{DensityMatrix, DyadicRational, QuantumState, RegisterLayout};
use crate::rng;
use crate::tomography::{estimate_probability, OracleBackend};
use rand::Rng;

/// Output of the generator conditioned on acceptance.
#[derive(Clone, Debug)]
pub struct GeneratorOutput {
    /// `|psi>` on registers `A` (eigenvector), `B` (conjugate copy), `C` (eigenvalue).
    pub psi: QuantumState,
    pub accept_probability: f64,
    /// Reduced state of `psi` on `A`.
    pub rho_tilde: DensityMatrix,
    pub t_tilde: f64,
    /// `theta~_j = E[r]` of phase estimation on `v_j`, aligned with `eigen.vectors`.
    pub theta_tilde: Vec<f64>,
    pub eigen: EigenData,
}

/// Run the generator from an arbitrary entangled `A B` input (registers `A` and `B`).
pub(crate) fn generator_from(u: &CMat, m: usize, ab: &QuantumState) -> Result<GeneratorOutput> {
    let n = ab.layout().register_width("A")?;
    let bw = ab.layout().register_width("B")?;
    let layout = RegisterLayout::new([("A", n), ("B", bw), ("C", m)])?;
    let s = ab.tensor(&QuantumState::zeros(RegisterLayout::single("C", m)))?.with_layout(layout.clone())?;
    let s = phase_estimation(&s, u, "A", "C")?;
    let cq = layout.qubits(&["C"])?;
    let scale = (1u64 << m) as f64;
    let amps = s.amplitudes().iter().enumerate().map(|(i, a)| a * (s.extract(i, &cq) as f64 / scale).sqrt());
    let amps = crate::qcore::linalg::CVec::from_iterator(s.amplitudes().len(), amps);
    let accept: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if accept <= 0.0 {
        return Err(Error::InvalidArgument("generator accepts with probability zero".into()));
    }
    let psi = QuantumState::subnormalized(layout, amps)?.normalized();
    let rho_tilde = psi.to_density().partial_trace(&["B", "C"])?;
    let eigen = eigen_decompose(u)?;
    let theta_tilde: Vec<f64> = (0..eigen.vectors.ncols())
        .map(|j| {
            let r = phase_estimation_distribution(u, m, &eigen.vectors.column(j).into_owned()).expect("eigenvector input");
            r.probabilities.iter().enumerate().map(|(k, p)| p * k as f64 / scale).sum()
        })
        .collect();
    Ok(GeneratorOutput { psi, accept_probability: accept, rho_tilde, t_tilde: theta_tilde.iter().sum(), theta_tilde, eigen })
}

/// Prepare `Phi_n` on `A B`, phase-estimate into `C` with `m` bits, grow `D` to
/// `sqrt(r)|0> + sqrt(1 - r)|1>` from `C` and accept on `D = 0`. Refuses unstable inputs.
pub fn program_state_generator(u: &CMat, m: usize) -> Result<GeneratorOutput> {
    let d = u.nrows();
    let n = d.trailing_zeros() as usize;
    let st = is_stable(u, n)?;
    if !st.stable {
        return Err(Error::Unstable(format!("min eigenphase distance {:.3e} < {:.3e}", st.min_distance, st.delta)));
    }
    generator_from(u, m, &maximally_entangled(n)?)
}

/// Closed-form output of up to `cap` attempts with success probability `p`.
#[derive(Clone, Debug)]
pub struct RepeatOutcome {
    pub state: DensityMatrix,
    /// `(1 - p)^cap`, the weight of the all-zeros fallback.
    pub fallback_weight: f64,
}

/// `(1 - p)^cap |0..0><0..0| + (1 - (1 - p)^cap) psi`.
pub fn repeat_until_success(p: f64, psi: &DensityMatrix, cap: u64) -> Result<RepeatOutcome> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("success probability {p} outside [0, 1]")));
    }
    let w = if cap == 0 { 1.0 } else { (1.0 - p).powf(cap as f64) };
    let d = psi.matrix().nrows();
    let mut zero = CMat::zeros(d, d);
    zero[(0, 0)] = C64::new(1.0, 0.0);
    let m = zero * C64::new(w, 0.0) + psi.matrix() * C64::new(1.0 - w, 0.0);
    Ok(RepeatOutcome { state: DensityMatrix::unnormalized(psi.layout().clone(), m)?, fallback_weight: w })
}

/// Sample the attempt (0-based) that first succeeds, or `None` if all `cap` attempts fail.
pub fn repeat_until_success_sampled<R: Rng>(p: f64, cap: u64, rng: &mut R) -> Option<u64> {
    (0..cap).find(|_| rng.random::<f64>() < p)
}

/// `f = 2^n g` with `g` the backend's estimate of the generator's acceptance probability.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionTime {
    pub g: DyadicRational,
    pub f: f64,
    pub t_tilde: f64,
}

pub fn estimate_evolution_time(u: &CMat, m: usize, backend: &OracleBackend) -> Result<EvolutionTime> {
    let gen = program_state_generator(u, m)?;
    let n = gen.rho_tilde.width();
    let g = estimate_probability(gen.accept_probability, backend, backend.precision, &[rng::label("evolution-time"), m as u64]);
    Ok(EvolutionTime { g, f: (1u64 << n) as f64 * g.value(), t_tilde: gen.t_tilde })
}
