//! Quantum building blocks used by the protocols.

use crate::error::{Error, Result};
use crate::qcore::linalg::{check_unitary, hadamard, max_abs, turn, CMat, CVec, C64, ONE, ZERO};
use crate::qcore::{QuantumState, RegisterLayout};

/// Outcome of a swap test: probability of the symmetric outcome and the
/// normalized post-measurement states (absent when the outcome has probability zero).
#[derive(Clone, Debug)]
pub struct SwapTestOutcome {
    pub symmetric_prob: f64,
    pub symmetric: Option<QuantumState>,
    pub antisymmetric: Option<QuantumState>,
}

const ANCILLA: &str = "__swap_ancilla";

/// Projective measurement onto the symmetric and antisymmetric subspaces of two
/// equal-width register groups.
///
/// Realised with an ancilla prepared in `|+>`, a controlled swap and a Hadamard-basis
/// measurement of the ancilla; outcome `0` is the symmetric one. The ancilla is removed
/// from the returned post-states.
pub fn swap_test(s: &QuantumState, reg_a: &[&str], reg_b: &[&str]) -> Result<SwapTestOutcome> {
    let qa = s.layout().qubits(reg_a)?;
    let qb = s.layout().qubits(reg_b)?;
    if qa.len() != qb.len() {
        return Err(Error::WidthMismatch(qa.len(), qb.len()));
    }
    if qa.is_empty() {
        return Ok(SwapTestOutcome { symmetric_prob: 1.0, symmetric: Some(s.clone()), antisymmetric: None });
    }
    let anc = QuantumState::zeros(RegisterLayout::single(ANCILLA, 1));
    let joint = anc.tensor(s)?;
    let w = joint.width();
    let h = hadamard();
    let joint = joint.apply_on_qubits_unchecked(&h, &[0]);
    // Controlled swap: permute amplitudes of basis states whose ancilla bit is 1.
    let mut amps = joint.amplitudes().clone();
    let src = joint.amplitudes();
    for idx in 0..src.len() {
        if idx >> (w - 1) & 1 == 1 {
            amps[swap_bits(idx, w, &qa, &qb, 1)] = src[idx];
        }
    }
    let joint = QuantumState::subnormalized(joint.layout().clone(), amps)?;
    let joint = joint.apply_on_qubits_unchecked(&h, &[0]);
    let half = joint.amplitudes().len() / 2;
    let total = s.norm_sqr();
    let sym = CVec::from_iterator(half, joint.amplitudes().iter().take(half).cloned());
    let anti = CVec::from_iterator(half, joint.amplitudes().iter().skip(half).cloned());
    let ps = sym.norm_squared();
    let pa = anti.norm_squared();
    let post = |v: CVec, p: f64| -> Option<QuantumState> {
        (p >= crate::qcore::BRANCH_EPS).then(|| QuantumState::subnormalized(s.layout().clone(), v / C64::new(p.sqrt(), 0.0)).unwrap())
    };
    Ok(SwapTestOutcome {
        symmetric_prob: if total > 0.0 { ps / total } else { 1.0 },
        symmetric: post(sym, ps),
        antisymmetric: post(anti, pa),
    })
}

/// Exchange the bits at qubit lists `qa` and `qb` of `idx` (shifted by `offset` qubits).
fn swap_bits(idx: usize, width: usize, qa: &[usize], qb: &[usize], offset: usize) -> usize {
    let mut out = idx;
    for (&a, &b) in qa.iter().zip(qb) {
        let pa = width - 1 - (a + offset);
        let pb = width - 1 - (b + offset);
        let ba = idx >> pa & 1;
        let bb = idx >> pb & 1;
        out &= !(1 << pa) & !(1 << pb);
        out |= bb << pa | ba << pb;
    }
    out
}

/// Two-level rotation taking `|0>` to `sqrt(eta)|0> + sqrt(1 - eta)|1>`.
pub fn grow_rotation(eta: f64) -> CMat {
    let a = eta.clamp(0.0, 1.0).sqrt();
    let b = (1.0 - eta).clamp(0.0, 1.0).sqrt();
    CMat::from_row_slice(2, 2, &[C64::new(a, 0.), C64::new(-b, 0.), C64::new(b, 0.), C64::new(a, 0.)])
}

/// Conditional probability encoded by a basis value `v` of a `precision + 1`-bit register:
/// `min(v, 2^precision) / 2^precision`.
pub fn decode_probability(v: u64, precision: u32) -> f64 {
    v.min(1u64 << precision) as f64 / (1u64 << precision) as f64
}

/// Phase turn encoded by a basis value `v`: `v / 2^precision` modulo one.
pub fn decode_phase(v: u64, precision: u32) -> f64 {
    (v % (1u64 << precision)) as f64 / (1u64 << precision) as f64
}

/// Controlled on each basis value `v` of `control` (width `precision + 1`, decoded by
/// [`decode_probability`]), rotate the fresh `target` qubit to
/// `sqrt(eta)|0> + sqrt(1 - eta)|1>`.
pub fn controlled_grow(s: &QuantumState, control: &str, target: &str, precision: u32) -> Result<QuantumState> {
    let cq = s.layout().qubits(&[control])?;
    let tq = s.layout().qubits(&[target])?;
    if tq.len() != 1 {
        return Err(Error::WidthMismatch(tq.len(), 1));
    }
    controlled_single(s, &cq, tq[0], |v| grow_rotation(decode_probability(v, precision)))
}

/// Multiply each control-basis branch by `exp(2 pi i r)` with `r` decoded by [`decode_phase`].
pub fn controlled_phase(s: &QuantumState, control: &str, precision: u32) -> Result<QuantumState> {
    let cq = s.layout().qubits(&[control])?;
    let mut amps = s.amplitudes().clone();
    for (idx, a) in amps.iter_mut().enumerate() {
        *a *= turn(decode_phase(s.extract(idx, &cq), precision));
    }
    QuantumState::subnormalized(s.layout().clone(), amps)
}

/// Apply a single-qubit unitary chosen by the value of the control qubits.
pub fn controlled_single(s: &QuantumState, control: &[usize], target: usize, f: impl Fn(u64) -> CMat) -> Result<QuantumState> {
    let w = s.width();
    let tbit = 1usize << (w - 1 - target);
    let mut amps = s.amplitudes().clone();
    let mut cache: std::collections::HashMap<u64, CMat> = Default::default();
    for idx in 0..amps.len() {
        if idx & tbit != 0 {
            continue;
        }
        let v = s.extract(idx, control);
        let m = cache.entry(v).or_insert_with(|| f(v));
        let (a0, a1) = (s.amplitudes()[idx], s.amplitudes()[idx | tbit]);
        amps[idx] = m[(0, 0)] * a0 + m[(0, 1)] * a1;
        amps[idx | tbit] = m[(1, 0)] * a0 + m[(1, 1)] * a1;
    }
    QuantumState::subnormalized(s.layout().clone(), amps)
}

/// Inverse quantum Fourier transform on `m` qubits (first qubit most significant).
pub fn inverse_qft(m: usize) -> CMat {
    let n = 1usize << m;
    let norm = 1.0 / (n as f64).sqrt();
    CMat::from_fn(n, n, |y, x| turn(-((x * y) as f64) / n as f64) * norm)
}

/// Integer power of a square matrix by repeated squaring.
pub fn matrix_power(u: &CMat, mut p: u64) -> CMat {
    let mut base = u.clone();
    let mut acc = CMat::identity(u.nrows(), u.ncols());
    while p > 0 {
        if p & 1 == 1 {
            acc = &acc * &base;
        }
        base = &base * &base;
        p >>= 1;
    }
    acc
}

/// `|0><0| (x) I + |1><1| (x) u`, control first.
pub fn controlled(u: &CMat) -> CMat {
    let d = u.nrows();
    let mut m = CMat::identity(2 * d, 2 * d);
    m.view_mut((d, d), (d, d)).copy_from(u);
    m
}

/// The textbook phase-estimation circuit as a list of `(qubits, unitary)` steps:
/// Hadamards on the eigenvalue register, controlled powers `u^(2^(m-1-j))` controlled by
/// its `j`-th qubit, then the inverse QFT. An eigenvector with eigenphase `theta` in
/// `D_m` ends with the eigenvalue register holding `theta * 2^m`.
pub fn phase_estimation_ops(u: &CMat, eigvec: &[usize], eigval: &[usize]) -> Vec<(Vec<usize>, CMat)> {
    let m = eigval.len();
    let mut ops = Vec::new();
    for &q in eigval {
        ops.push((vec![q], hadamard()));
    }
    for (j, &q) in eigval.iter().enumerate() {
        let power = matrix_power(u, 1u64 << (m - 1 - j));
        let mut qubits = vec![q];
        qubits.extend_from_slice(eigvec);
        ops.push((qubits, controlled(&power)));
    }
    if m > 0 {
        ops.push((eigval.to_vec(), inverse_qft(m)));
    }
    ops
}

/// Apply phase estimation of `u` with eigenvector register `eigvec` and fresh `eigval` register.
pub fn phase_estimation(s: &QuantumState, u: &CMat, eigvec: &str, eigval: &str) -> Result<QuantumState> {
    let ev = s.layout().qubits(&[eigvec])?;
    let el = s.layout().qubits(&[eigval])?;
    let d = 1usize << ev.len();
    if u.nrows() != d || u.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: u.nrows() });
    }
    check_unitary(u, 1e-9)?;
    let mut out = s.clone();
    for (qs, g) in phase_estimation_ops(u, &ev, &el) {
        out = out.apply_on_qubits_unchecked(&g, &qs);
    }
    Ok(out)
}

/// Outcome distribution of phase estimation on a single-register eigenvector input.
#[derive(Clone, Debug)]
pub struct PhaseEstimationResult {
    /// `probabilities[k]` is the probability of reading `k * 2^-m`.
    pub probabilities: Vec<f64>,
    /// Joint state on registers `("v", "r")` after the circuit.
    pub state: QuantumState,
}

/// Run phase estimation with `m` bits on the state `input` of `u`'s register.
pub fn phase_estimation_distribution(u: &CMat, m: usize, input: &CVec) -> Result<PhaseEstimationResult> {
    let w = input.len().trailing_zeros() as usize;
    let layout = RegisterLayout::new([("v", w), ("r", m)])?;
    let v = QuantumState::new(RegisterLayout::single("v", w), input.clone())?;
    let s = v.tensor(&QuantumState::zeros(RegisterLayout::single("r", m)))?;
    let s = s.with_layout(layout)?;
    let out = phase_estimation(&s, u, "v", "r")?;
    let rq = out.layout().qubits(&["r"])?;
    let mut probabilities = vec![0.0; 1 << m];
    for (idx, a) in out.amplitudes().iter().enumerate() {
        probabilities[out.extract(idx, &rq) as usize] += a.norm_sqr();
    }
    Ok(PhaseEstimationResult { probabilities, state: out })
}

/// `2^(-n/2) sum_x |x>_A |x>_B`.
pub fn maximally_entangled(n: usize) -> Result<QuantumState> {
    if n == 0 {
        return Err(Error::InvalidArgument("maximally entangled state needs n >= 1".into()));
    }
    let layout = RegisterLayout::new([("A", n), ("B", n)])?;
    let d = 1usize << n;
    let mut amps = CVec::zeros(d * d);
    let a = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    for x in 0..d {
        amps[x * d + x] = a;
    }
    QuantumState::new(layout, amps)
}

/// Recognizer for the range of `pi`, acting on (data, ancilla) with the ancilla last:
/// `|phi>|0> -> (I - pi)|phi>|0> + pi|phi>|1>` and, as the involutive completion,
/// `|phi>|1> -> (I - pi)|phi>|1> + pi|phi>|0>`.
pub fn recognizer_from_projector(pi: &CMat) -> Result<CMat> {
    let d = pi.nrows();
    if pi.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: pi.ncols() });
    }
    let dev = max_abs(&(pi * pi - pi)).max(max_abs(&(pi - pi.adjoint())));
    if dev > 1e-9 {
        return Err(Error::NotProjector(dev));
    }
    let id = CMat::identity(d, d);
    let x = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    Ok((&id - pi).kronecker(&CMat::identity(2, 2)) + pi.kronecker(&x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::linalg::{diag, pauli_z, random_unitary, random_vector, unitary_deviation};
    use rand::SeedableRng;

    fn two_qubit(v: [f64; 4]) -> QuantumState {
        let l = RegisterLayout::new([("A", 1), ("B", 1)]).unwrap();
        QuantumState::new(l, CVec::from_iterator(4, v.iter().map(|&x| C64::new(x, 0.0)))).unwrap()
    }

    #[test]
    fn swap_test_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let same = two_qubit([0.5, 0.5, 0.5, 0.5]);
        assert!((swap_test(&same, &["A"], &["B"]).unwrap().symmetric_prob - 1.0).abs() < 1e-12);
        let ortho = two_qubit([0.0, 1.0, 0.0, 0.0]);
        let out = swap_test(&ortho, &["A"], &["B"]).unwrap();
        assert!((out.symmetric_prob - 0.5).abs() < 1e-12);
        let sym = out.symmetric.unwrap();
        assert!((sym.amplitudes()[1].re - s).abs() < 1e-12 && (sym.amplitudes()[2].re - s).abs() < 1e-12);
        let l = RegisterLayout::new([("A", 0), ("B", 0), ("C", 1)]).unwrap();
        let z = QuantumState::zeros(l);
        assert_eq!(swap_test(&z, &["A"], &["B"]).unwrap().symmetric_prob, 1.0);
        assert!(swap_test(&ortho, &["A", "B"], &[]).is_err());
    }

    #[test]
    fn swap_test_mixed_against_pure() {
        // A maximally mixed (purified by R), B = |0>: reject probability 1/4.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let l = RegisterLayout::new([("R", 1), ("A", 1), ("B", 1)]).unwrap();
        let mut v = CVec::zeros(8);
        v[0b000] = C64::new(s, 0.);
        v[0b110] = C64::new(s, 0.);
        let st = QuantumState::new(l, v).unwrap();
        let out = swap_test(&st, &["A"], &["B"]).unwrap();
        assert!((1.0 - out.symmetric_prob - 0.25).abs() < 1e-12);
    }

    #[test]
    fn grow_and_phase_examples() {
        let l = RegisterLayout::new([("D", 3), ("T", 1)]).unwrap();
        for (v, expect) in [(4u64, (1.0, 0.0)), (0, (0.0, 1.0)), (2, (0.5f64.sqrt(), 0.5f64.sqrt()))] {
            let s = QuantumState::basis(l.clone(), (v as usize) << 1).unwrap();
            let g = controlled_grow(&s, "D", "T", 2).unwrap();
            let base = (v as usize) << 1;
            assert!((g.amplitudes()[base].re - expect.0).abs() < 1e-12);
            assert!((g.amplitudes()[base | 1].re - expect.1).abs() < 1e-12);
        }
        let l = RegisterLayout::single("D", 1);
        let s = QuantumState::new(l, CVec::from_vec(vec![C64::new(0.5f64.sqrt(), 0.), C64::new(0.5f64.sqrt(), 0.)])).unwrap();
        let p = controlled_phase(&s, "D", 1).unwrap();
        assert!((p.amplitudes()[1].re + 0.5f64.sqrt()).abs() < 1e-12);
        assert!((p.amplitudes()[0].re - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn phase_estimation_examples() {
        let one = CVec::from_vec(vec![ZERO, ONE]);
        let r = phase_estimation_distribution(&pauli_z(), 1, &one).unwrap();
        assert!((r.probabilities[1] - 1.0).abs() < 1e-12);
        let t = diag(&[ONE, turn(1.0 / 8.0)]);
        let r = phase_estimation_distribution(&t, 3, &one).unwrap();
        assert!((r.probabilities[1] - 1.0).abs() < 1e-12);
        let third = diag(&[ONE, turn(1.0 / 3.0)]);
        let r = phase_estimation_distribution(&third, 4, &one).unwrap();
        let mode = (0..16).max_by(|&a, &b| r.probabilities[a].partial_cmp(&r.probabilities[b]).unwrap()).unwrap();
        assert_eq!(mode, 5);
    }

    #[test]
    fn maximally_entangled_examples() {
        assert!(maximally_entangled(0).is_err());
        let b = maximally_entangled(2).unwrap();
        assert_eq!(b.amplitudes().iter().filter(|a| (a.re - 0.5).abs() < 1e-12).count(), 4);
        let a = b.to_density().partial_trace(&["B"]).unwrap();
        assert!((a.matrix() - CMat::identity(4, 4) * C64::new(0.25, 0.)).norm() < 1e-12);
    }

    #[test]
    fn recognizer_examples() {
        let id = CMat::identity(2, 2);
        let r = recognizer_from_projector(&id).unwrap();
        assert!(unitary_deviation(&r) < 1e-12);
        let v = r * CVec::from_vec(vec![ONE, ZERO, ZERO, ZERO]);
        assert_eq!(v[1], ONE);
        let r0 = recognizer_from_projector(&CMat::zeros(2, 2)).unwrap();
        assert!((r0 - CMat::identity(4, 4)).norm() < 1e-12);
        let p0 = diag(&[ONE, ZERO]);
        let r = recognizer_from_projector(&p0).unwrap();
        let s = 0.5f64.sqrt();
        let out = r * CVec::from_vec(vec![C64::new(s, 0.), ZERO, C64::new(s, 0.), ZERO]);
        assert!((out[0b01].re - s).abs() < 1e-12 && (out[0b10].re - s).abs() < 1e-12);
        assert!(recognizer_from_projector(&CMat::from_element(2, 2, ONE)).is_err());
    }

    #[test]
    fn random_pe_inputs_stay_normalized() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let u = random_unitary(2, &mut rng);
        let v = random_vector(2, &mut rng);
        let r = phase_estimation_distribution(&u, 3, &v).unwrap();
        assert!((r.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
