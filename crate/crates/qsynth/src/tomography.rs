//! Acceptance-probability estimation of described circuits and the `cp` / `ph` oracles.
//!
//! Every estimator has an exact backend (simulate and round) and a sampled backend that
//! repeats the circuit `10 * 4^m` times by default, measures, and picks the
//! lexicographically first grid point within `3/2 * 2^-m` of the empirical mean.

use crate::error::{Error, Result};
use crate::qcore::linalg::{apply_on_qubits, complete_unitary, CMat, CVec, C64, ONE};
use crate::qcore::{
    round_to_dyadic, round_to_dyadic_phase, round_to_dyadic_probability, DyadicPhase, DyadicProbability, DyadicRational, QuantumState,
    TorusAngle,
};
use crate::rng;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

/// Per-call failure probability of a sampled estimate, `2 exp(-5)`.
pub fn sampled_failure_budget() -> f64 {
    2.0 * (-5.0f64).exp()
}

/// How an estimator evaluates a circuit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BackendMode {
    Exact,
    /// `None` selects the default trial count `10 * 4^m`.
    Sampled {
        trial_count: Option<u64>,
    },
}

/// Estimator configuration: mode, grid precision `m`, output precision `l` and seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleBackend {
    pub mode: BackendMode,
    pub precision: u32,
    pub output_precision: u32,
    pub seed: u64,
}

impl OracleBackend {
    /// Exact backend with `l = m + 5`.
    pub fn exact(m: u32) -> Self {
        OracleBackend { mode: BackendMode::Exact, precision: m, output_precision: m + 5, seed: 0 }
    }

    /// Sampled backend with the default trial count and `l = m + 5`.
    pub fn sampled(m: u32, seed: u64) -> Self {
        OracleBackend { mode: BackendMode::Sampled { trial_count: None }, precision: m, output_precision: m + 5, seed }
    }

    pub fn with_output_precision(mut self, l: u32) -> Self {
        self.output_precision = l;
        self
    }

    pub fn with_trials(mut self, trials: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InvalidArgument("trial_count must be at least 1".into()));
        }
        self.mode = BackendMode::Sampled { trial_count: Some(trials) };
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_precision(mut self, m: u32) -> Self {
        self.precision = m;
        self
    }

    /// Trials per estimate (`None` for the exact backend).
    pub fn trial_count(&self) -> Option<u64> {
        match self.mode {
            BackendMode::Exact => None,
            BackendMode::Sampled { trial_count } => Some(trial_count.unwrap_or(10 * 4u64.pow(self.precision))),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.mode, BackendMode::Exact)
    }
}

/// One step of a described circuit.
#[derive(Clone, Debug)]
pub struct Gate {
    pub qubits: Vec<usize>,
    pub matrix: CMat,
}

/// A circuit on `num_qubits` qubits. Inputs are written into the leading qubits, the
/// rest start in `|0>`; `outputs` lists the measured qubit(s).
#[derive(Clone, Debug)]
pub struct Circuit {
    pub num_qubits: usize,
    pub ops: Vec<Gate>,
    pub outputs: Vec<usize>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit { num_qubits, ops: Vec::new(), outputs: Vec::new() }
    }

    pub fn push(&mut self, qubits: Vec<usize>, matrix: CMat) -> &mut Self {
        self.ops.push(Gate { qubits, matrix });
        self
    }

    pub fn with_output(mut self, q: usize) -> Self {
        self.outputs = vec![q];
        self
    }

    /// Final statevector on input `x`.
    pub fn simulate(&self, x: &[bool]) -> Result<CVec> {
        if x.len() > self.num_qubits {
            return Err(Error::WidthMismatch(x.len(), self.num_qubits));
        }
        let w = self.num_qubits;
        let idx = x.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| 1usize << (w - 1 - i)).sum::<usize>();
        let mut v = CVec::zeros(1 << w);
        v[idx] = ONE;
        for g in &self.ops {
            v = apply_on_qubits(&v, w, &g.matrix, &g.qubits);
        }
        Ok(v)
    }

    /// `<1|C(x)|1>`: probability that the output qubit reads 1.
    pub fn acceptance_probability(&self, x: &[bool]) -> Result<f64> {
        if self.outputs.len() != 1 {
            return Err(Error::InvalidArgument(format!("circuit must have exactly one output qubit, has {}", self.outputs.len())));
        }
        let v = self.simulate(x)?;
        let bit = 1usize << (self.num_qubits - 1 - self.outputs[0]);
        Ok(v.iter().enumerate().filter(|(i, _)| i & bit != 0).map(|(_, a)| a.norm_sqr()).sum())
    }
}

/// Lexicographically first `r` in `D_m` with `|mean - r| <= 3/2 * 2^-m`.
pub fn first_dyadic_within(mean: f64, m: u32) -> DyadicRational {
    let scale = (1u64 << m) as f64;
    let j = (mean * scale - 1.5).ceil().max(0.0) as u64;
    DyadicRational::new(j.min((1u64 << m) - 1), m).expect("numerator below 2^m")
}

fn bits_label(x: &[bool]) -> u64 {
    x.iter().fold(1u64, |acc, &b| acc << 1 | b as u64)
}

/// Sample `trials` Bernoulli(p) outcomes and return the success count.
fn sample_count<R: Rng>(p: f64, trials: u64, rng: &mut R) -> u64 {
    Binomial::new(trials, p.clamp(0.0, 1.0)).expect("valid binomial parameters").sample(rng)
}

/// Estimate a probability `p` on `D_m`: exact rounding, or a seeded binomial sample.
pub fn estimate_probability(p: f64, backend: &OracleBackend, m: u32, labels: &[u64]) -> DyadicRational {
    match backend.trial_count() {
        None => round_to_dyadic(p, m),
        Some(t) => {
            let mut r = rng::stream(backend.seed, labels);
            let k = sample_count(p, t, &mut r);
            first_dyadic_within(k as f64 / t as f64, m)
        }
    }
}

/// Estimate `<1|C(x)|1>` within `2 * 2^-m` on the grid `D_m` (`m = backend.precision`).
pub fn estimate_acceptance(circuit: &Circuit, x: &[bool], backend: &OracleBackend) -> Result<DyadicRational> {
    let p = circuit.acceptance_probability(x)?;
    Ok(estimate_probability(p, backend, backend.precision, &[rng::label("accept"), bits_label(x)]))
}

/// Marginal probability that the first `prefix.len()` qubits of `psi` read `prefix`.
pub fn prefix_probability(psi: &QuantumState, prefix: &[bool]) -> f64 {
    let n = psi.width();
    let k = prefix.len();
    let want = bits_to_u64(prefix);
    psi.amplitudes().iter().enumerate().filter(|(i, _)| (i >> (n - k)) as u64 == want).map(|(_, a)| a.norm_sqr()).sum()
}

pub fn bits_to_u64(bits: &[bool]) -> u64 {
    bits.iter().fold(0u64, |acc, &b| acc << 1 | b as u64)
}

pub fn u64_to_bits(v: u64, len: usize) -> Vec<bool> {
    (0..len).map(|i| v >> (len - 1 - i) & 1 == 1).collect()
}

/// Circuit that prepares `psi` on qubits `0..n` and flags qubit `n` when the leading
/// qubits equal `prefix`.
pub fn prefix_match_circuit(psi: &QuantumState, prefix: &[bool]) -> Result<Circuit> {
    let n = psi.width();
    let k = prefix.len();
    let mut c = Circuit::new(n + 1);
    c.push((0..n).collect(), complete_unitary(psi.amplitudes())?);
    c.push((0..k).chain([n]).collect(), match_flip(bits_to_u64(prefix), k));
    Ok(c.with_output(n))
}

/// Permutation on `k + 1` qubits flipping the last one when the first `k` equal `value`.
fn match_flip(value: u64, k: usize) -> CMat {
    let d = 1usize << (k + 1);
    let mut m = CMat::zeros(d, d);
    for i in 0..d {
        let j = if (i >> 1) as u64 == value { i ^ 1 } else { i };
        m[(j, i)] = ONE;
    }
    m
}

/// The conditional-probability oracle at prefix `x`: approximately `p(x0)/p(x)` on the
/// closed grid of precision `l = backend.output_precision`, and `1` when `p(x) = 0`.
pub fn cp(psi: &QuantumState, x: &[bool], backend: &OracleBackend) -> Result<DyadicProbability> {
    let n = psi.width();
    if x.len() >= n {
        return Err(Error::InvalidArgument(format!("prefix length {} must be below n = {n}", x.len())));
    }
    let l = backend.output_precision;
    let mut x0 = x.to_vec();
    x0.push(false);
    if backend.is_exact() {
        let px = prefix_probability(psi, x);
        if px <= 1e-15 {
            return Ok(DyadicProbability::one(l));
        }
        return Ok(round_to_dyadic_probability(prefix_probability(psi, &x0) / px, l));
    }
    let m = backend.precision;
    let est = |bits: &[bool], tag: &str| -> Result<f64> {
        let c = prefix_match_circuit(psi, bits)?;
        let p = c.acceptance_probability(&[])?;
        Ok(estimate_probability(p, backend, m, &[rng::label(tag), bits_label(x)]).value())
    };
    let px = est(x, "cp-x")?;
    if px == 0.0 {
        return Ok(DyadicProbability::one(l));
    }
    let px0 = est(&x0, "cp-x0")?;
    Ok(round_to_dyadic_probability((px0 / px).min(1.0), l))
}

/// Output of [`ph`]: one phase per `n`-bit string, relative to the reference string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseOracleResult {
    /// `ph[x]` for `x` read as a big-endian integer.
    pub ph: Vec<DyadicPhase>,
    /// The reference string `y`; `ph[y] = 1` fixes the global phase `gamma = alpha_y / |alpha_y|`.
    pub y_ref: u64,
    pub precision: u32,
}

impl PhaseOracleResult {
    pub fn get(&self, x: u64) -> DyadicPhase {
        self.ph[x as usize]
    }
}

/// The four units `{1, i, -1, -i}` used in the interference identity.
pub const UNITS: [C64; 4] = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)];

/// Circuit flagging overlap with `(|x> + conj(u)|y>)/sqrt 2`: prepare `psi`, undo a
/// preparation of that state, and flag the all-zero outcome. Its acceptance probability
/// is `|alpha_x + u alpha_y|^2 / 2`.
pub fn interference_circuit(psi: &QuantumState, x: u64, y: u64, u: C64) -> Result<Circuit> {
    let n = psi.width();
    let mut target = CVec::zeros(1 << n);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    target[x as usize] += C64::new(s, 0.0);
    target[y as usize] += u.conj() * s;
    let c_prep = complete_unitary(&target)?;
    let mut c = Circuit::new(n + 1);
    c.push((0..n).collect(), complete_unitary(psi.amplitudes())?);
    c.push((0..n).collect(), c_prep.adjoint());
    c.push((0..=n).collect(), match_flip(0, n));
    Ok(c.with_output(n))
}

/// The relative-phase oracle at output precision `l = backend.output_precision`.
pub fn ph(psi: &QuantumState, backend: &OracleBackend) -> Result<PhaseOracleResult> {
    let n = psi.width();
    let dim = 1u64 << n;
    let l = backend.output_precision;
    let threshold = 0.75 / dim as f64;
    let weight = |x: u64| -> Result<f64> {
        let p = psi.amplitudes()[x as usize].norm_sqr();
        if backend.is_exact() {
            return Ok(p);
        }
        let bits = u64_to_bits(x, n);
        let c = prefix_match_circuit(psi, &bits)?;
        let p = c.acceptance_probability(&[])?;
        Ok(estimate_probability(p, backend, n as u32 + 4, &[rng::label("ph-weight"), x]).value())
    };
    let mut y_ref = None;
    for x in 0..dim {
        if weight(x)? >= threshold {
            y_ref = Some(x);
            break;
        }
    }
    let y = y_ref.unwrap_or(0);
    let mut out = Vec::with_capacity(dim as usize);
    for x in 0..dim {
        if x == y {
            out.push(DyadicPhase::one(l));
            continue;
        }
        let mut mu = C64::new(0.0, 0.0);
        for (ui, &u) in UNITS.iter().enumerate() {
            let q = if backend.is_exact() {
                let a = psi.amplitudes();
                (a[x as usize] + u * a[y as usize]).norm_sqr() / 2.0
            } else {
                let c = interference_circuit(psi, x, y, u)?;
                let p = c.acceptance_probability(&[])?;
                let labels = [rng::label("ph-interference"), x, ui as u64];
                estimate_probability(p, backend, backend.precision, &labels).value()
            };
            mu += u * q;
        }
        if mu.norm() <= 1e-15 {
            out.push(DyadicPhase::one(l));
        } else {
            let theta = mu.arg() / (2.0 * std::f64::consts::PI);
            out.push(round_to_dyadic_phase(TorusAngle::new(theta), l));
        }
    }
    Ok(PhaseOracleResult { ph: out, y_ref: y, precision: l })
}

/// `max_x |p(x) cp(x) - p(x0)|` over every prefix `x` of length `< n`.
pub fn cp_max_error(psi: &QuantumState, backend: &OracleBackend) -> Result<f64> {
    let n = psi.width();
    let mut worst = 0.0f64;
    for len in 0..n {
        for x in 0..1u64 << len {
            let bits = u64_to_bits(x, len);
            let c = cp(psi, &bits, backend)?.value();
            let mut b0 = bits.clone();
            b0.push(false);
            worst = worst.max((prefix_probability(psi, &bits) * c - prefix_probability(psi, &b0)).abs());
        }
    }
    Ok(worst)
}

/// `max_x |ph(x) gamma sqrt(p(x)) - alpha_x|` with `gamma = alpha_y / |alpha_y|` for the
/// reference string `y` chosen by [`ph`].
pub fn ph_max_error(psi: &QuantumState, backend: &OracleBackend) -> Result<f64> {
    let r = ph(psi, backend)?;
    let a = psi.amplitudes();
    let ay = a[r.y_ref as usize];
    let gamma = if ay.norm() > 0.0 { ay / ay.norm() } else { C64::new(1.0, 0.0) };
    Ok((0..a.len()).map(|x| (r.ph[x].value() * gamma * a[x].norm() - a[x]).norm()).fold(0.0, f64::max))
}
