//! Unitary model of the embedded sub-verifier that certifies `cp` and `ph` answers.
//!
//! Controlled on the instance `(x, v)` (prefix in `A`, claimed value in `D`) it rotates a
//! flag qubit out of `|0>`. True instances end in `|1>`; false instances are accepted with
//! probability at most the configured soundness.

use super::approx::OracleTable;
use crate::error::{Error, Result};
use crate::qcore::linalg::{hadamard, pauli_x, CMat, C64};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubVerifierKind {
    /// False instances put the flag into `|+>` (acceptance 1/2).
    CoinFlip,
    /// False instances put the flag into `sqrt(1 - s)|0> + sqrt(s)|1>`.
    Tunable { soundness: f64 },
}

/// A sub-verifier bound to the table of true answers.
#[derive(Clone, Debug, PartialEq)]
pub struct SubVerifier {
    pub kind: SubVerifierKind,
    pub table: OracleTable,
}

/// Result of [`SubVerifier::check_contract`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractReport {
    pub instances: usize,
    pub min_true_accept: f64,
    pub max_false_accept: f64,
    pub soundness: f64,
    pub holds: bool,
}

impl SubVerifier {
    pub fn coin_flip(table: OracleTable) -> Self {
        SubVerifier { kind: SubVerifierKind::CoinFlip, table }
    }

    /// Soundness `s` in `[0, 1]`; `s = 0` is a perfect lie detector.
    pub fn tunable(table: OracleTable, soundness: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&soundness) {
            return Err(Error::InvalidArgument(format!("soundness {soundness} outside [0, 1]")));
        }
        Ok(SubVerifier { kind: SubVerifierKind::Tunable { soundness }, table })
    }

    /// Acceptance probability bound on false instances.
    pub fn soundness(&self) -> f64 {
        match self.kind {
            SubVerifierKind::CoinFlip => 0.5,
            SubVerifierKind::Tunable { soundness } => soundness,
        }
    }

    pub fn is_true(&self, len: usize, x: u64, v: u64) -> bool {
        self.table.value(len, x) == v
    }

    /// Flag unitary for the instance (or its inverse).
    pub fn flag_unitary(&self, len: usize, x: u64, v: u64, inverse: bool) -> CMat {
        if self.is_true(len, x, v) {
            return pauli_x();
        }
        match self.kind {
            SubVerifierKind::CoinFlip => hadamard(),
            SubVerifierKind::Tunable { soundness } => {
                let a = (1.0 - soundness).sqrt();
                let b = soundness.sqrt();
                let r = CMat::from_row_slice(2, 2, &[C64::new(a, 0.), C64::new(-b, 0.), C64::new(b, 0.), C64::new(a, 0.)]);
                if inverse {
                    r.adjoint()
                } else {
                    r
                }
            }
        }
    }

    /// Enumerate every instance `(len, x, v)` with `v < 2^(ell+1)` and measure the flag.
    pub fn check_contract(&self) -> ContractReport {
        let n = self.table.n;
        let vmax = 1u64 << (self.table.ell + 1);
        let mut min_true: f64 = 1.0;
        let mut max_false: f64 = 0.0;
        let mut instances = 0;
        for len in 0..=n {
            for x in 0..1u64 << len {
                for v in 0..vmax {
                    let u = self.flag_unitary(len, x, v, false);
                    let acc = u[(1, 0)].norm_sqr();
                    let back = self.flag_unitary(len, x, v, true) * &u;
                    debug_assert!((back[(0, 0)].norm_sqr() - 1.0).abs() < 1e-9);
                    if self.is_true(len, x, v) {
                        min_true = min_true.min(acc);
                    } else {
                        max_false = max_false.max(acc);
                    }
                    instances += 1;
                }
            }
        }
        let s = self.soundness();
        ContractReport {
            instances,
            min_true_accept: min_true,
            max_false_accept: max_false,
            soundness: s,
            holds: (min_true - 1.0).abs() <= 1e-9 && max_false <= s + 1e-9,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> OracleTable {
        OracleTable { n: 1, ell: 3, cp: vec![vec![4]], ph: vec![0, 4] }
    }

    #[test]
    fn coin_flip_contract() {
        let r = SubVerifier::coin_flip(table()).check_contract();
        assert!(r.holds);
        assert_eq!(r.instances, 16 * 3);
        assert!((r.max_false_accept - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tunable_contract() {
        let s = SubVerifier::tunable(table(), 0.75).unwrap();
        let r = s.check_contract();
        assert!(r.holds && (r.max_false_accept - 0.75).abs() < 1e-12);
        assert!(SubVerifier::tunable(table(), 1.5).is_err());
    }
}
