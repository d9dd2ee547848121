use super::linalg::{turn, C64};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// An element `numerator * 2^-precision` of the half-open dyadic grid `D_m` in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicRational {
    numerator: u64,
    precision: u32,
}

impl DyadicRational {
    pub fn new(numerator: u64, precision: u32) -> Result<Self> {
        if precision > 62 || numerator >= 1u64 << precision {
            return Err(Error::InvalidArgument(format!("{numerator} is not a numerator of D_{precision}")));
        }
        Ok(DyadicRational { numerator, precision })
    }

    pub fn zero(precision: u32) -> Self {
        DyadicRational { numerator: 0, precision }
    }

    pub fn numerator(&self) -> u64 {
        self.numerator
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn value(&self) -> f64 {
        self.numerator as f64 / (1u64 << self.precision) as f64
    }
}

/// An element of the closed grid `{k * 2^-m : 0 <= k <= 2^m}`, used for conditional
/// probabilities, which must be able to take the value 1 exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicProbability {
    numerator: u64,
    precision: u32,
}

impl DyadicProbability {
    pub fn new(numerator: u64, precision: u32) -> Result<Self> {
        if precision > 62 || numerator > 1u64 << precision {
            return Err(Error::InvalidArgument(format!("{numerator} exceeds 2^{precision}")));
        }
        Ok(DyadicProbability { numerator, precision })
    }

    pub fn one(precision: u32) -> Self {
        DyadicProbability { numerator: 1u64 << precision, precision }
    }

    pub fn numerator(&self) -> u64 {
        self.numerator
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn value(&self) -> f64 {
        self.numerator as f64 / (1u64 << self.precision) as f64
    }
}

/// The unit complex number `exp(2 pi i r)` for `r` in `D_m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicPhase {
    pub r: DyadicRational,
}

impl DyadicPhase {
    pub fn one(precision: u32) -> Self {
        DyadicPhase { r: DyadicRational::zero(precision) }
    }

    pub fn value(&self) -> C64 {
        turn(self.r.value())
    }
}

/// A point of the circle `R / Z`, stored in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct TorusAngle(f64);

impl TorusAngle {
    pub fn new(x: f64) -> Self {
        let mut r = x - x.floor();
        if r >= 1.0 {
            r = 0.0;
        }
        TorusAngle(r)
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    /// Torus distance, at most 1/2.
    pub fn delta(&self, other: &TorusAngle) -> f64 {
        delta(self.0, other.0)
    }
}

/// `min(r - s - floor(r - s), ceil(r - s) - (r - s))`.
pub fn delta(r: f64, s: f64) -> f64 {
    let d = r - s;
    let f = d - d.floor();
    f.min(1.0 - f)
}

/// Nearest element of `D_m` to `x` in `[0, 1]`, ties toward the smaller numerator.
pub fn round_to_dyadic(x: f64, m: u32) -> DyadicRational {
    let scale = (1u64 << m) as f64;
    let x = x.clamp(0.0, 1.0);
    let lo = (x * scale).floor();
    let hi = lo + 1.0;
    let pick = if x * scale - lo <= hi - x * scale { lo } else { hi };
    let k = (pick as u64).min((1u64 << m) - 1);
    DyadicRational { numerator: k, precision: m }
}

/// Nearest element of the closed grid to `x` in `[0, 1]`, ties toward the smaller numerator.
pub fn round_to_dyadic_probability(x: f64, m: u32) -> DyadicProbability {
    let scale = (1u64 << m) as f64;
    let x = x.clamp(0.0, 1.0);
    let lo = (x * scale).floor();
    let pick = if x * scale - lo <= lo + 1.0 - x * scale { lo } else { lo + 1.0 };
    DyadicProbability { numerator: (pick as u64).min(1u64 << m), precision: m }
}

/// Torus-nearest element of `U_m`, ties toward the smaller numerator.
pub fn round_to_dyadic_phase(theta: TorusAngle, m: u32) -> DyadicPhase {
    let n = 1u64 << m;
    let x = theta.value() * n as f64;
    let lo = x.floor() as u64 % n;
    let hi = (lo + 1) % n;
    let d_lo = delta(theta.value(), lo as f64 / n as f64);
    let d_hi = delta(theta.value(), hi as f64 / n as f64);
    let k = if d_lo < d_hi || (d_lo == d_hi && lo < hi) { lo } else { hi };
    DyadicPhase { r: DyadicRational { numerator: k, precision: m } }
}
