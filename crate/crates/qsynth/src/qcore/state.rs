use super::density::DensityMatrix;
use super::layout::RegisterLayout;
use super::linalg::{apply_on_qubits, check_unitary, kron_vec, CMat, CVec, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Measurement branches with probability below this are dropped.
pub const BRANCH_EPS: f64 = 1e-15;

/// A (possibly subnormalized) pure state over a register layout.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    layout: RegisterLayout,
    amps: CVec,
}

/// One outcome of [`QuantumState::measure_register`].
#[derive(Clone, Debug)]
pub struct Branch {
    /// Outcome bits of the measured register as an integer (first qubit most significant).
    pub outcome: u64,
    pub probability: f64,
    /// Renormalized post-measurement state (the register keeps its value).
    pub state: QuantumState,
}

impl QuantumState {
    /// A normalized state; fails if `|norm^2 - 1| > 1e-9`.
    pub fn new(layout: RegisterLayout, amps: CVec) -> Result<Self> {
        let s = Self::subnormalized(layout, amps)?;
        let n = s.norm_sqr();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized(n));
        }
        Ok(s)
    }

    /// A state with arbitrary norm (used for branches of exact enumeration).
    pub fn subnormalized(layout: RegisterLayout, amps: CVec) -> Result<Self> {
        if amps.len() != layout.dim() {
            return Err(Error::DimensionMismatch { expected: layout.dim(), found: amps.len() });
        }
        Ok(QuantumState { layout, amps })
    }

    pub fn basis(layout: RegisterLayout, index: usize) -> Result<Self> {
        let mut amps = CVec::zeros(layout.dim());
        if index >= amps.len() {
            return Err(Error::DimensionMismatch { expected: amps.len(), found: index });
        }
        amps[index] = ONE;
        Ok(QuantumState { layout, amps })
    }

    pub fn zeros(layout: RegisterLayout) -> Self {
        Self::basis(layout, 0).expect("index 0 always exists")
    }

    /// Convenience: a single register named `name` holding `amps`.
    pub fn from_vec(name: &str, amps: CVec) -> Result<Self> {
        let w = amps.len().trailing_zeros() as usize;
        if 1usize << w != amps.len() {
            return Err(Error::InvalidArgument("length is not a power of two".into()));
        }
        Self::new(RegisterLayout::single(name, w), amps)
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amps
    }

    pub fn into_amplitudes(self) -> CVec {
        self.amps
    }

    pub fn width(&self) -> usize {
        self.layout.width()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.norm_squared()
    }

    pub fn normalized(&self) -> Self {
        let n = self.amps.norm();
        QuantumState { layout: self.layout.clone(), amps: &self.amps / C64::new(n, 0.0) }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QuantumState) -> Result<C64> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        Ok(self.amps.dotc(&other.amps))
    }

    /// Kronecker product; register names must be disjoint.
    pub fn tensor(&self, other: &QuantumState) -> Result<QuantumState> {
        let layout = self.layout.concat(&other.layout)?;
        Ok(QuantumState { layout, amps: kron_vec(&self.amps, &other.amps) })
    }

    /// Rename the single-register layout or relabel a layout of equal shape.
    pub fn with_layout(&self, layout: RegisterLayout) -> Result<QuantumState> {
        Self::subnormalized(layout, self.amps.clone())
    }

    /// Apply `u` to the concatenation of the listed registers.
    pub fn apply_unitary(&self, u: &CMat, targets: &[&str]) -> Result<QuantumState> {
        let qubits = self.layout.qubits(targets)?;
        self.apply_on_qubits(u, &qubits)
    }

    /// Apply `u` to explicit qubit indices (first listed is most significant for `u`).
    pub fn apply_on_qubits(&self, u: &CMat, qubits: &[usize]) -> Result<QuantumState> {
        let d = 1usize << qubits.len();
        if u.nrows() != d || u.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: u.nrows() });
        }
        check_unitary(u, 1e-9)?;
        Ok(self.apply_on_qubits_unchecked(u, qubits))
    }

    pub(crate) fn apply_on_qubits_unchecked(&self, u: &CMat, qubits: &[usize]) -> QuantumState {
        QuantumState { layout: self.layout.clone(), amps: apply_on_qubits(&self.amps, self.width(), u, qubits) }
    }

    /// Value of the listed qubits inside basis index `idx`.
    pub fn extract(&self, idx: usize, qubits: &[usize]) -> u64 {
        let w = self.width();
        qubits.iter().fold(0u64, |acc, &q| (acc << 1) | ((idx >> (w - 1 - q)) & 1) as u64)
    }

    /// Exact projective measurement of a register in the computational basis.
    pub fn measure_register(&self, target: &str) -> Result<Vec<Branch>> {
        let qubits = self.layout.qubits(&[target])?;
        let outcomes = 1usize << qubits.len();
        let mut parts = vec![CVec::zeros(self.amps.len()); outcomes];
        for (idx, a) in self.amps.iter().enumerate() {
            if *a != ZERO {
                parts[self.extract(idx, &qubits) as usize][idx] = *a;
            }
        }
        Ok(parts
            .into_iter()
            .enumerate()
            .filter_map(|(o, v)| {
                let p = v.norm_squared();
                (p >= BRANCH_EPS).then(|| Branch {
                    outcome: o as u64,
                    probability: p,
                    state: QuantumState { layout: self.layout.clone(), amps: v / C64::new(p.sqrt(), 0.0) },
                })
            })
            .collect())
    }

    /// Probability that the listed qubits read `value`.
    pub fn probability_of(&self, qubits: &[usize], value: u64) -> f64 {
        self.amps.iter().enumerate().filter(|(idx, _)| self.extract(*idx, qubits) == value).map(|(_, a)| a.norm_sqr()).sum()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::linalg::{hadamard, pauli_x, CMat};

    fn plus() -> QuantumState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        QuantumState::from_vec("q", CVec::from_vec(vec![C64::new(s, 0.), C64::new(s, 0.)])).unwrap()
    }

    #[test]
    fn tensor_examples() {
        let z = QuantumState::basis(RegisterLayout::single("a", 1), 0).unwrap();
        let o = QuantumState::basis(RegisterLayout::single("b", 1), 1).unwrap();
        let t = z.tensor(&o).unwrap();
        assert_eq!(t.amplitudes()[1], ONE);
        let pp = plus().tensor(&plus().with_layout(RegisterLayout::single("r", 1)).unwrap()).unwrap();
        assert!(pp.amplitudes().iter().all(|a| (a.re - 0.5).abs() < 1e-12));
        assert!(z.tensor(&z).is_err());
    }

    #[test]
    fn unitary_examples() {
        let z = QuantumState::basis(RegisterLayout::single("q", 1), 0).unwrap();
        let one = z.apply_unitary(&pauli_x(), &["q"]).unwrap();
        assert_eq!(one.amplitudes()[1], ONE);
        let two = QuantumState::zeros(RegisterLayout::new([("a", 1), ("b", 1)]).unwrap());
        let bell = two.apply_unitary(&hadamard(), &["a"]).unwrap();
        let cnot =
            CMat::from_row_slice(4, 4, &[ONE, ZERO, ZERO, ZERO, ZERO, ONE, ZERO, ZERO, ZERO, ZERO, ZERO, ONE, ZERO, ZERO, ONE, ZERO]);
        let bell = bell.apply_unitary(&cnot, &["a", "b"]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((bell.amplitudes()[0].re - s).abs() < 1e-12);
        assert!((bell.amplitudes()[3].re - s).abs() < 1e-12);
        let bad = CMat::from_element(2, 2, ONE);
        assert!(matches!(z.apply_unitary(&bad, &["q"]), Err(Error::NotUnitary(_))));
        assert!(matches!(z.apply_unitary(&cnot, &["q"]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn measurement_examples() {
        let b = plus().measure_register("q").unwrap();
        assert_eq!(b.len(), 2);
        assert!((b[0].probability - 0.5).abs() < 1e-12);
        let one = QuantumState::basis(RegisterLayout::single("q", 1), 1).unwrap();
        let b = one.measure_register("q").unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].outcome, 1);
    }
}
