//! Protocol parameters.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// How a protocol run treats randomness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    /// Enumerate every round-type string and every measurement outcome.
    Exact,
    /// Sample one path with the given seed.
    Trajectory { seed: u64 },
}

/// Parameters of one protocol instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Number of target qubits.
    pub n: usize,
    /// Number of rounds.
    pub t: usize,
    /// Precision of the values exchanged in the `D` register.
    pub ell: u32,
    /// Tomography precision.
    pub m: u32,
    /// Completeness exponent parameter.
    pub q: u32,
    pub mode: RunMode,
}

impl ProtocolConfig {
    /// Desk-scale defaults: `t = 3n`, `l = m = 10`, `q = 1`, exact enumeration.
    pub fn desk(n: usize) -> Self {
        ProtocolConfig { n, t: 3 * n, ell: 10, m: 10, q: 1, mode: RunMode::Exact }
    }

    /// Proof-driven defaults: `t = 18q + 3n + 54`, `m = 4q + 12n`, `l = m + 5`.
    pub fn proof_defaults(n: usize, q: u32) -> Self {
        let m = 4 * q + 12 * n as u32;
        ProtocolConfig { n, t: 18 * q as usize + 3 * n + 54, ell: m + 5, m, q, mode: RunMode::Exact }
    }

    pub fn with_t(mut self, t: usize) -> Self {
        self.t = t;
        self
    }

    pub fn with_precision(mut self, ell: u32, m: u32) -> Self {
        self.ell = ell;
        self.m = m;
        self
    }

    pub fn with_mode(mut self, mode: RunMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.t == 0 {
            return Err(Error::Config("t must be at least 1".into()));
        }
        if self.ell == 0 || self.ell > 40 {
            return Err(Error::Config(format!("ell = {} outside 1..=40", self.ell)));
        }
        if self.n > 8 {
            return Err(Error::Config(format!("n = {} is beyond the simulator's register budget", self.n)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let d = ProtocolConfig::desk(2);
        assert_eq!((d.t, d.ell, d.m), (6, 10, 10));
        let p = ProtocolConfig::proof_defaults(2, 1);
        assert_eq!((p.t, p.m), (18 + 6 + 54, 4 + 24));
        assert!(ProtocolConfig::desk(0).validate().is_err());
        assert!(d.with_t(0).validate().is_err());
    }
}
