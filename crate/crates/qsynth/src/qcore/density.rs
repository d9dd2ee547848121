use super::layout::RegisterLayout;
use super::linalg::{apply_on_qubits, check_unitary, hermitian_eig, max_abs, CMat, C64, ZERO};
use super::state::QuantumState;
use crate::error::{Error, Result};

/// A density operator over a register layout. The trace may be below one for
/// unnormalized branch contributions.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    layout: RegisterLayout,
    mat: CMat,
}

/// Result of [`fidelity_bound_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FidelityBound {
    pub td: f64,
    pub bound: f64,
    pub holds: bool,
}

impl DensityMatrix {
    /// Validates Hermiticity, positivity and unit trace at tolerance 1e-9.
    pub fn new(layout: RegisterLayout, mat: CMat) -> Result<Self> {
        let d = Self::unnormalized(layout, mat)?;
        d.validate(true)?;
        Ok(d)
    }

    /// Shape check only.
    pub fn unnormalized(layout: RegisterLayout, mat: CMat) -> Result<Self> {
        let dim = layout.dim();
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: mat.nrows() });
        }
        Ok(DensityMatrix { layout, mat })
    }

    pub fn zeros(layout: RegisterLayout) -> Self {
        let d = layout.dim();
        DensityMatrix { layout, mat: CMat::zeros(d, d) }
    }

    pub fn from_pure(s: &QuantumState) -> Self {
        let v = s.amplitudes();
        DensityMatrix { layout: s.layout().clone(), mat: v * v.adjoint() }
    }

    pub fn maximally_mixed(layout: RegisterLayout) -> Self {
        let d = layout.dim();
        DensityMatrix { layout, mat: CMat::identity(d, d) * C64::new(1.0 / d as f64, 0.0) }
    }

    pub fn validate(&self, unit_trace: bool) -> Result<()> {
        let herm = max_abs(&(&self.mat - self.mat.adjoint()));
        if herm > 1e-9 {
            return Err(Error::InvalidArgument(format!("not Hermitian ({herm:.2e})")));
        }
        let (vals, _) = hermitian_eig(&self.mat);
        if vals.first().copied().unwrap_or(0.0) < -1e-9 {
            return Err(Error::InvalidArgument("not positive semidefinite".into()));
        }
        if unit_trace && (self.trace() - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized(self.trace()));
        }
        Ok(())
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn width(&self) -> usize {
        self.layout.width()
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn scaled(&self, f: f64) -> Self {
        DensityMatrix { layout: self.layout.clone(), mat: &self.mat * C64::new(f, 0.0) }
    }

    pub fn normalized(&self) -> Self {
        self.scaled(1.0 / self.trace())
    }

    pub fn add(&self, other: &DensityMatrix) -> Result<Self> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        Ok(DensityMatrix { layout: self.layout.clone(), mat: &self.mat + &other.mat })
    }

    pub fn add_assign_scaled(&mut self, other: &DensityMatrix, f: f64) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        self.mat += &other.mat * C64::new(f, 0.0);
        Ok(())
    }

    pub fn with_layout(&self, layout: RegisterLayout) -> Result<Self> {
        Self::unnormalized(layout, self.mat.clone())
    }

    /// `<phi| self |phi>`.
    pub fn expectation(&self, phi: &QuantumState) -> Result<f64> {
        if phi.layout().width() != self.width() {
            return Err(Error::LayoutMismatch);
        }
        let v = phi.amplitudes();
        Ok((v.adjoint() * &self.mat * v)[(0, 0)].re)
    }

    pub fn apply_unitary(&self, u: &CMat, targets: &[&str]) -> Result<Self> {
        let qubits = self.layout.qubits(targets)?;
        let d = 1usize << qubits.len();
        if u.nrows() != d {
            return Err(Error::DimensionMismatch { expected: d, found: u.nrows() });
        }
        check_unitary(u, 1e-9)?;
        Ok(self.conjugate_on_qubits(u, &qubits))
    }

    /// `u rho u^dagger` on explicit qubits, without a unitarity check.
    pub fn conjugate_on_qubits(&self, u: &CMat, qubits: &[usize]) -> Self {
        let w = self.width();
        let mut left = CMat::zeros(self.mat.nrows(), self.mat.ncols());
        for j in 0..self.mat.ncols() {
            let col = apply_on_qubits(&self.mat.column(j).into_owned(), w, u, qubits);
            left.set_column(j, &col);
        }
        let mut out = CMat::zeros(self.mat.nrows(), self.mat.ncols());
        let ubar = u.map(|z| z.conj());
        for i in 0..left.nrows() {
            let row = left.row(i).transpose();
            let r = apply_on_qubits(&row, w, &ubar, qubits);
            out.set_row(i, &r.transpose());
        }
        DensityMatrix { layout: self.layout.clone(), mat: out }
    }

    /// Trace out the listed registers.
    pub fn partial_trace(&self, discard: &[&str]) -> Result<Self> {
        let out_layout = self.layout.without(discard)?;
        let keep_names: Vec<&str> = out_layout.registers().iter().map(|(n, _)| n.as_str()).collect();
        let keep = self.layout.qubits(&keep_names)?;
        let gone = self.layout.qubits(discard)?;
        Ok(DensityMatrix { layout: out_layout, mat: reduce(&self.mat, self.width(), &keep, &gone) })
    }

    /// Trace distance `1/2 ||a - b||_1`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.layout.width() != other.layout.width() {
            return Err(Error::LayoutMismatch);
        }
        Ok(trace_distance_mat(&self.mat, &other.mat))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eig(&self.mat).0
    }
}

/// Trace distance between two equal-size matrices.
pub fn trace_distance_mat(a: &CMat, b: &CMat) -> f64 {
    let (vals, _) = hermitian_eig(&(a - b));
    0.5 * vals.iter().map(|v| v.abs()).sum::<f64>()
}

/// Free-function form of [`DensityMatrix::trace_distance`].
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    a.trace_distance(b)
}

/// Partial trace of a `width`-qubit matrix keeping `keep` (in that order) and summing over `gone`.
pub fn reduce(m: &CMat, width: usize, keep: &[usize], gone: &[usize]) -> CMat {
    let dk = 1usize << keep.len();
    let dg = 1usize << gone.len();
    let place = |bits: usize, qs: &[usize]| -> usize {
        qs.iter().enumerate().filter(|(i, _)| bits >> (qs.len() - 1 - i) & 1 == 1).map(|(_, &q)| 1usize << (width - 1 - q)).sum()
    };
    let kidx: Vec<usize> = (0..dk).map(|i| place(i, keep)).collect();
    let gidx: Vec<usize> = (0..dg).map(|r| place(r, gone)).collect();
    let mut out = CMat::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut acc = ZERO;
            for g in &gidx {
                acc += m[(kidx[i] | g, kidx[j] | g)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Returns `td(phi, sigma)`, `sqrt(1 - <phi|sigma|phi>)` and whether the first is at most
/// the second (plus 1e-9).
pub fn fidelity_bound_check(phi: &QuantumState, sigma: &DensityMatrix) -> Result<FidelityBound> {
    let rho = DensityMatrix::from_pure(phi);
    let td = rho.trace_distance(sigma)?;
    let f = sigma.expectation(phi)?;
    let bound = (1.0 - f).max(0.0).sqrt();
    Ok(FidelityBound { td, bound, holds: td <= bound + 1e-9 })
}
