//! Approximate conditional probabilities, marginals and intermediate states of a target.

use crate::error::{Error, Result};
use crate::qcore::linalg::{CVec, C64};
use crate::qcore::{DensityMatrix, DyadicProbability, QuantumState, RegisterLayout};
use crate::tomography::{cp, ph, u64_to_bits, OracleBackend, PhaseOracleResult};

/// The true answers to every sub-verifier instance: for a prefix of length `len < n` the
/// numerator of `cp(x)` on the closed grid of precision `ell`; for `len = n` the numerator
/// of `ph(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleTable {
    pub n: usize,
    pub ell: u32,
    /// `cp[len][x]`.
    pub cp: Vec<Vec<u64>>,
    /// `ph[x]` for `n`-bit `x`.
    pub ph: Vec<u64>,
}

impl OracleTable {
    /// True value for the instance on prefix `x` of length `len`.
    pub fn value(&self, len: usize, x: u64) -> u64 {
        if len < self.n {
            self.cp[len][x as usize]
        } else {
            self.ph[x as usize]
        }
    }
}

/// Everything the honest parties derive from the oracles.
#[derive(Clone, Debug)]
pub struct TargetApproximation {
    pub n: usize,
    pub ell: u32,
    /// `cp[len][x]` for `0 <= len < n`.
    pub cp: Vec<Vec<DyadicProbability>>,
    pub phases: PhaseOracleResult,
    /// `p~(x)` for every `n`-bit `x`.
    pub p_tilde: Vec<f64>,
    /// `psi~^(k)` for `k = 0..=n` as amplitude vectors of length `2^k`.
    pub intermediate: Vec<CVec>,
    /// `psi~ = sum_x ph(x) sqrt(p~(x)) |x>`.
    pub final_state: CVec,
    /// `td(psi~, psi)` when built from a target state.
    pub td_to_target: Option<f64>,
    /// `2^n (n + 1) 2^(-m/2) + pi 2^-l`.
    pub reported_bound: f64,
}

impl TargetApproximation {
    /// Assemble from oracle answers.
    pub fn from_oracles(n: usize, ell: u32, m: u32, cp: Vec<Vec<DyadicProbability>>, phases: PhaseOracleResult) -> Result<Self> {
        if cp.len() != n || cp.iter().enumerate().any(|(len, v)| v.len() != 1 << len) {
            return Err(Error::InvalidArgument("cp table must cover every prefix of length < n".into()));
        }
        if phases.ph.len() != 1 << n {
            return Err(Error::InvalidArgument("ph table must cover every n-bit string".into()));
        }
        let mut intermediate = vec![CVec::from_element(1, C64::new(1.0, 0.0))];
        let mut probs = vec![1.0f64];
        for (len, level) in cp.iter().take(n).enumerate() {
            let mut next = vec![0.0; 1 << (len + 1)];
            for (x, &p) in probs.iter().enumerate() {
                let g0 = level[x].value();
                next[2 * x] = p * g0;
                next[2 * x + 1] = p * (1.0 - g0);
            }
            probs = next;
            intermediate.push(CVec::from_iterator(probs.len(), probs.iter().map(|p| C64::new(p.sqrt(), 0.0))));
        }
        let final_state = CVec::from_iterator(probs.len(), probs.iter().enumerate().map(|(x, p)| phases.ph[x].value() * p.sqrt()));
        let reported_bound =
            (1u64 << n) as f64 * (n as f64 + 1.0) * 2f64.powf(-(m as f64) / 2.0) + std::f64::consts::PI * 2f64.powi(-(ell as i32));
        Ok(TargetApproximation { n, ell, cp, phases, p_tilde: probs, intermediate, final_state, td_to_target: None, reported_bound })
    }

    /// The oracle table the sub-verifier checks against.
    pub fn table(&self) -> OracleTable {
        OracleTable {
            n: self.n,
            ell: self.ell,
            cp: self.cp.iter().map(|v| v.iter().map(|c| c.numerator()).collect()).collect(),
            ph: self.phases.ph.iter().map(|p| p.r.numerator()).collect(),
        }
    }

    /// `g~` of the prefix `x` of length `len >= 1`.
    pub fn g_tilde(&self, len: usize, x: u64) -> f64 {
        let c = self.cp[len - 1][(x >> 1) as usize].value();
        if x & 1 == 0 {
            c
        } else {
            1.0 - c
        }
    }

    /// `psi~^(k)` as a state on register `A` of width `k`.
    pub fn intermediate_state(&self, k: usize) -> QuantumState {
        QuantumState::new(RegisterLayout::single("A", k), self.intermediate[k].clone()).expect("normalized by construction")
    }

    pub fn final_quantum_state(&self) -> QuantumState {
        QuantumState::new(RegisterLayout::single("A", self.n), self.final_state.clone()).expect("normalized by construction")
    }

    pub fn final_density(&self) -> DensityMatrix {
        self.final_quantum_state().to_density()
    }

    /// Amplitude vector of `psi~^(k)` for `k <= n` and of `psi~` for `k = n + 1`.
    pub fn stage(&self, k: usize) -> &CVec {
        if k > self.n {
            &self.final_state
        } else {
            &self.intermediate[k]
        }
    }
}

/// Query `cp` on every prefix and `ph` once, then assemble the approximation.
pub fn build_target_approximation(psi: &QuantumState, backend: &OracleBackend) -> Result<TargetApproximation> {
    let n = psi.width();
    if n == 0 {
        return Err(Error::InvalidArgument("target must have at least one qubit".into()));
    }
    let mut table = Vec::with_capacity(n);
    for len in 0..n {
        let mut row = Vec::with_capacity(1 << len);
        for x in 0..1u64 << len {
            row.push(cp(psi, &u64_to_bits(x, len), backend)?);
        }
        table.push(row);
    }
    let phases = ph(psi, backend)?;
    let mut approx = TargetApproximation::from_oracles(n, backend.output_precision, backend.precision, table, phases)?;
    let overlap = approx.final_state.dotc(psi.amplitudes()).norm_sqr();
    approx.td_to_target = Some((1.0 - overlap).max(0.0).sqrt());
    Ok(approx)
}

/// Exact oracle answers of `psi` with `l = m = ell`.
pub fn exact_approximation(psi: &QuantumState, ell: u32) -> Result<TargetApproximation> {
    build_target_approximation(psi, &OracleBackend::exact(ell).with_output_precision(ell))
}
