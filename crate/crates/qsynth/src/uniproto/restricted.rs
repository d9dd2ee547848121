//! Reduction from restricted-input unitary synthesis to the general case.

use super::generator::{generator_from, GeneratorOutput};
use crate::error::{Error, Result};
use crate::primitives::{maximally_entangled, recognizer_from_projector};
use crate::qcore::linalg::{check_unitary, kron, max_abs, CMat, C64};
use crate::qcore::{QuantumState, RegisterLayout};

#[derive(Clone, Debug)]
pub struct RestrictedInput {
    /// `V|phi>|0> = U|phi>|1>`, `V|phi>|1> = U^dagger|phi>|0>` (flag qubit last).
    pub v: CMat,
    /// Projector onto `S' = S (x) |0> + U S (x) |1>`.
    pub projector: CMat,
    /// Recognizer for `S'` (data then ancilla).
    pub recognizer: CMat,
    pub dim: usize,
    /// `Phi'_S` on `A B` (each `n + 1` qubits).
    pub phi: QuantumState,
    pub postselection_probability: f64,
}

impl RestrictedInput {
    /// `Phi'_S` is invariant under `V (x) conj(V)` and its `A` marginal is `Pi'/dim`.
    pub fn verify(&self) -> f64 {
        let vv = kron(&self.v, &self.v.map(|z| z.conj()));
        let a = self.phi.amplitudes();
        let inv = (&vv * a - a).norm();
        let marg = self.phi.to_density().partial_trace(&["B"]).expect("A B layout");
        let target = &self.projector * C64::new(1.0 / self.dim as f64, 0.0);
        inv.max(max_abs(&(marg.matrix() - target)))
    }
}

/// Extract `Pi` from a recognizer `(I - Pi) (x) I + Pi (x) X` (ancilla last).
fn projector_of(r: &CMat) -> Result<CMat> {
    let d = r.nrows() / 2;
    let pi = CMat::from_fn(d, d, |x, y| r[(2 * x + 1, 2 * y)]);
    let expect = recognizer_from_projector(&pi)?;
    let dev = max_abs(&(expect - r));
    if dev > 1e-9 {
        return Err(Error::NotProjector(dev));
    }
    Ok(pi)
}

pub fn restricted_input_reduction(u: &CMat, recognizer: &CMat) -> Result<RestrictedInput> {
    check_unitary(u, 1e-9)?;
    let d = u.nrows();
    if recognizer.nrows() != 2 * d {
        return Err(Error::DimensionMismatch { expected: 2 * d, found: recognizer.nrows() });
    }
    let pi = projector_of(recognizer)?;
    let dim_s = pi.trace().re.round() as usize;
    if dim_s == 0 {
        return Err(Error::InvalidArgument("the recognized subspace is {0}".into()));
    }
    let e00 = CMat::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
    let e11 = CMat::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
    let e10 = CMat::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    let v = kron(u, &e10) + kron(&u.adjoint(), &e10.transpose());
    let projector = kron(&pi, &e00) + kron(&(u * &pi * u.adjoint()), &e11);
    let rec = recognizer_from_projector(&projector)?;
    let n1 = (2 * d).trailing_zeros() as usize;
    // Adjoin the recognizer ancilla to Phi_{n+1}, apply R' on (A, ancilla), keep ancilla = 1.
    let phi = maximally_entangled(n1)?;
    let layout = RegisterLayout::new([("A", n1), ("B", n1), ("anc", 1)])?;
    let s = phi.tensor(&QuantumState::zeros(RegisterLayout::single("anc", 1)))?.with_layout(layout.clone())?;
    let mut q = layout.qubits(&["A"])?;
    q.extend(layout.qubits(&["anc"])?);
    let s = s.apply_on_qubits(&rec, &q)?;
    let branches = s.measure_register("anc")?;
    let kept = branches.into_iter().find(|b| b.outcome == 1).ok_or_else(|| Error::InvalidArgument("post-selection failed".into()))?;
    let post = kept.probability;
    let phi_s = kept.state.with_layout(layout)?;
    let ab = QuantumState::new(
        RegisterLayout::new([("A", n1), ("B", n1)])?,
        crate::qcore::linalg::CVec::from_iterator(1 << (2 * n1), (0..1usize << (2 * n1)).map(|i| phi_s.amplitudes()[2 * i + 1])),
    )?;
    Ok(RestrictedInput { v, projector, recognizer: rec, dim: 2 * dim_s, phi: ab, postselection_probability: post })
}

/// The generator run on `Phi'_S` for `V` (the program state restricted to `S'`).
pub fn restricted_program_state(red: &RestrictedInput, m: usize) -> Result<GeneratorOutput> {
    generator_from(&red.v, m, &red.phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::linalg::{diag, random_unitary, turn, unitary_deviation};
    use rand::SeedableRng;

    fn proj(entries: &[f64]) -> CMat {
        diag(&entries.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>())
    }

    #[test]
    fn single_state_subspace() {
        let u = diag(&[turn(0.1), C64::new(1.0, 0.0)]);
        let r = recognizer_from_projector(&proj(&[1.0, 0.0])).unwrap();
        let red = restricted_input_reduction(&u, &r).unwrap();
        assert_eq!(red.dim, 2);
        assert!((red.postselection_probability - 0.5).abs() < 1e-12);
        assert!(red.verify() < 1e-9);
    }

    #[test]
    fn full_space_gives_maximally_entangled() {
        let u = diag(&[turn(0.1), turn(0.3)]);
        let r = recognizer_from_projector(&proj(&[1.0, 1.0])).unwrap();
        let red = restricted_input_reduction(&u, &r).unwrap();
        assert!((red.postselection_probability - 1.0).abs() < 1e-12);
        let me = maximally_entangled(2).unwrap();
        assert!((red.phi.inner(&me).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn v_is_unitary_for_random_inputs() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(1);
        for _ in 0..5 {
            let u = random_unitary(4, &mut rng);
            let w = random_unitary(4, &mut rng);
            let p = &w * proj(&[1.0, 1.0, 0.0, 0.0]) * w.adjoint();
            let red = restricted_input_reduction(&u, &recognizer_from_projector(&p).unwrap()).unwrap();
            assert!(unitary_deviation(&red.v) < 1e-9);
            assert!(red.verify() < 1e-9);
            assert!(red.postselection_probability >= red.dim as f64 / 8.0 - 1e-9);
        }
    }

    #[test]
    fn zero_subspace_rejected() {
        let r = recognizer_from_projector(&proj(&[0.0, 0.0])).unwrap();
        assert!(restricted_input_reduction(&CMat::identity(2, 2), &r).is_err());
    }
}
