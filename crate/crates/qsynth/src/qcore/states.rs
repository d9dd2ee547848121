//! Named target-state families.

use super::linalg::{c, random_unitary, random_vector, CVec};
use super::{QuantumState, RegisterLayout};
use crate::error::{Error, Result};
use crate::rng;

fn on_a(n: usize, amps: CVec) -> Result<QuantumState> {
    QuantumState::new(RegisterLayout::single("A", n), amps)
}

fn check_width(n: usize) -> Result<()> {
    if n == 0 || n > 12 {
        return Err(Error::InvalidArgument(format!("width {n} outside 1..=12")));
    }
    Ok(())
}

/// `|0^n>`.
pub fn zero_state(n: usize) -> Result<QuantumState> {
    check_width(n)?;
    Ok(QuantumState::zeros(RegisterLayout::single("A", n)))
}

/// `|+>^n`.
pub fn plus_state(n: usize) -> Result<QuantumState> {
    check_width(n)?;
    let d = 1usize << n;
    on_a(n, CVec::from_element(d, c(1.0 / (d as f64).sqrt(), 0.0)))
}

/// `(|0^n> + |1^n>) / sqrt(2)`.
pub fn ghz_state(n: usize) -> Result<QuantumState> {
    check_width(n)?;
    let d = 1usize << n;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CVec::zeros(d);
    v[0] = c(h, 0.0);
    v[d - 1] = c(h, 0.0);
    on_a(n, v)
}

/// Uniform superposition of the weight-one strings.
pub fn w_state(n: usize) -> Result<QuantumState> {
    check_width(n)?;
    let mut v = CVec::zeros(1 << n);
    let a = 1.0 / (n as f64).sqrt();
    for j in 0..n {
        v[1 << j] = c(a, 0.0);
    }
    on_a(n, v)
}

/// Haar-random state from the seeded stream.
pub fn random_state(n: usize, seed: u64) -> Result<QuantumState> {
    check_width(n)?;
    let mut r = rng::stream(seed, &[rng::label("random-state"), n as u64]);
    on_a(n, random_vector(1 << n, &mut r))
}

/// `depth` layers of random two-qubit gates on neighbouring pairs (alternating offset),
/// applied to `|0^n>`. A single qubit gets a random one-qubit gate per layer.
pub fn random_circuit_state(n: usize, depth: usize, seed: u64) -> Result<QuantumState> {
    check_width(n)?;
    let mut r = rng::stream(seed, &[rng::label("random-circuit"), n as u64, depth as u64]);
    let mut s = QuantumState::zeros(RegisterLayout::single("A", n));
    for layer in 0..depth {
        if n == 1 {
            s = s.apply_on_qubits(&random_unitary(2, &mut r), &[0])?;
            continue;
        }
        let mut q = layer % 2;
        while q + 1 < n {
            s = s.apply_on_qubits(&random_unitary(4, &mut r), &[q, q + 1])?;
            q += 2;
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_are_normalized() {
        for n in 1..=3 {
            for s in [zero_state(n), plus_state(n), ghz_state(n), w_state(n), random_state(n, 4), random_circuit_state(n, 3, 4)] {
                assert!((s.unwrap().norm_sqr() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ghz_and_w_amplitudes() {
        let g = ghz_state(2).unwrap();
        assert!((g.amplitudes()[3].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let w = w_state(3).unwrap();
        assert!((w.amplitudes()[4].re - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(w.amplitudes()[0].re, 0.0);
    }

    #[test]
    fn random_states_are_seeded() {
        assert_eq!(random_state(2, 9).unwrap().amplitudes(), random_state(2, 9).unwrap().amplitudes());
        assert_ne!(random_state(2, 9).unwrap().amplitudes(), random_state(2, 10).unwrap().amplitudes());
        assert!(zero_state(0).is_err());
    }
}
