//! Dense complex linear-algebra helpers shared by every module.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `exp(2*pi*i*r)`.
pub fn turn(r: f64) -> C64 {
    C64::from_polar(1.0, std::f64::consts::TAU * r)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entry of `|u^dagger u - I|`.
pub fn unitary_deviation(u: &CMat) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    let id = CMat::identity(u.nrows(), u.ncols());
    max_abs(&(u.adjoint() * u - id))
}

pub fn check_unitary(u: &CMat, tol: f64) -> Result<()> {
    let d = unitary_deviation(u);
    if d > tol {
        return Err(Error::NotUnitary(d));
    }
    Ok(())
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    a.kronecker(b)
}

pub fn hadamard() -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_row_slice(2, 2, &[c(s, 0.), c(s, 0.), c(s, 0.), c(-s, 0.)])
}

pub fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_z() -> CMat {
    CMat::from_diagonal(&CVec::from_vec(vec![ONE, -ONE]))
}

pub fn diag(entries: &[C64]) -> CMat {
    CMat::from_diagonal(&CVec::from_column_slice(entries))
}

/// Permutation matrix exchanging two registers of width `w` each, ordered (first, second).
pub fn swap_matrix(w: usize) -> CMat {
    let d = 1usize << w;
    let mut m = CMat::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            m[(b * d + a, a * d + b)] = ONE;
        }
    }
    m
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and matching columns.
pub fn hermitian_eig(m: &CMat) -> (Vec<f64>, CMat) {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(m.nrows(), m.ncols());
    for (j, &i) in idx.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// `exp(i * a * H)` for Hermitian `H`.
pub fn expm_i_hermitian(h: &CMat, a: f64) -> CMat {
    let (vals, vecs) = hermitian_eig(h);
    let d = CMat::from_diagonal(&CVec::from_iterator(vals.len(), vals.iter().map(|&v| C64::from_polar(1.0, a * v))));
    &vecs * d * vecs.adjoint()
}

/// A unitary whose first column is the normalized `v`, completed by Gram-Schmidt
/// over the computational basis.
pub fn complete_unitary(v: &CVec) -> Result<CMat> {
    let n = v.len();
    let norm = v.norm();
    if norm < 1e-12 {
        return Err(Error::InvalidArgument("cannot complete a zero vector".into()));
    }
    let mut cols: Vec<CVec> = vec![v / c(norm, 0.0)];
    for e in 0..n {
        if cols.len() == n {
            break;
        }
        let mut w = CVec::zeros(n);
        w[e] = ONE;
        for q in &cols {
            let proj = q.dotc(&w);
            w -= q * proj;
        }
        for q in &cols {
            let proj = q.dotc(&w);
            w -= q * proj;
        }
        let nw = w.norm();
        if nw > 1e-8 {
            cols.push(w / c(nw, 0.0));
        }
    }
    Ok(CMat::from_columns(&cols))
}

/// Apply `u` to the listed qubits of a `width`-qubit vector (qubit 0 most significant).
/// The first listed qubit is the most significant bit of `u`'s local index.
pub fn apply_on_qubits(v: &CVec, width: usize, u: &CMat, qubits: &[usize]) -> CVec {
    let w = qubits.len();
    let local = 1usize << w;
    let shifts: Vec<usize> = qubits.iter().map(|&q| width - 1 - q).collect();
    let offsets: Vec<usize> = (0..local).map(|l| (0..w).filter(|i| l >> (w - 1 - i) & 1 == 1).map(|i| 1usize << shifts[i]).sum()).collect();
    let mask: usize = shifts.iter().map(|&s| 1usize << s).sum();
    let mut out = CVec::zeros(v.len());
    let mut buf = vec![ZERO; local];
    for base in 0..v.len() {
        if base & mask != 0 {
            continue;
        }
        for (l, off) in offsets.iter().enumerate() {
            buf[l] = v[base | off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let mut acc = ZERO;
            for (l, b) in buf.iter().enumerate() {
                acc += u[(r, l)] * b;
            }
            out[base | off] = acc;
        }
    }
    out
}

/// Haar-random unitary via QR of a complex Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(dim, dim, |_, _| c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q;
    for j in 0..dim {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        let col = q.column(j) * ph;
        q.set_column(j, &col);
    }
    q
}

/// Haar-random normalized vector.
pub fn random_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVec {
    let v = CVec::from_fn(dim, |_, _| c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)));
    let n = v.norm();
    v / c(n, 0.0)
}
