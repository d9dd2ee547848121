//! Sparse statevector engine for protocol runs.
//!
//! A basis key is a `u128`: the high 64 bits name an orthonormal environment vector
//! (registers that were handed away for good), the low 64 bits hold the live qubits.
//! A qubit is addressed by its bit position inside the live word; registers are lists of
//! positions, most significant first.

use crate::error::{Error, Result};
use crate::qcore::linalg::{hermitian_eig, CMat, CVec, C64, ZERO};
use rustc_hash::FxHashMap;

/// Amplitudes with squared modulus below this are dropped after each operation.
pub const DROP_EPS: f64 = 1e-30;
/// Environment Gram eigenvalues below this are discarded by [`SparseState::compress`].
pub const GRAM_EPS: f64 = 1e-26;

const LIVE_MASK: u128 = u64::MAX as u128;

fn live(key: u128) -> u64 {
    (key & LIVE_MASK) as u64
}

fn env(key: u128) -> u64 {
    (key >> 64) as u64
}

fn join(env: u64, live: u64) -> u128 {
    (env as u128) << 64 | live as u128
}

/// Read the bits at `qubits` (most significant first) out of a live word.
pub fn extract(word: u64, qubits: &[u32]) -> u64 {
    qubits.iter().fold(0u64, |acc, &q| acc << 1 | (word >> q & 1))
}

/// Write `value` into the bits at `qubits` of a live word.
pub fn deposit(word: u64, qubits: &[u32], value: u64) -> u64 {
    let w = qubits.len();
    qubits.iter().enumerate().fold(word, |acc, (i, &q)| {
        let bit = value >> (w - 1 - i) & 1;
        (acc & !(1u64 << q)) | bit << q
    })
}

pub fn mask_of(qubits: &[u32]) -> u64 {
    qubits.iter().fold(0u64, |m, &q| m | 1u64 << q)
}

/// A (sub-normalized) state of live qubits entangled with an environment.
#[derive(Clone, Debug, Default)]
pub struct SparseState {
    amps: FxHashMap<u128, C64>,
    next_env: u64,
}

impl SparseState {
    /// The all-zero live word with trivial environment.
    pub fn zero() -> Self {
        let mut amps = FxHashMap::default();
        amps.insert(0u128, C64::new(1.0, 0.0));
        SparseState { amps, next_env: 1 }
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    /// Number of distinct environment vectors in the support.
    pub fn env_count(&self) -> usize {
        let mut envs: Vec<u64> = self.amps.keys().map(|&k| env(k)).collect();
        envs.sort_unstable();
        envs.dedup();
        envs.len()
    }

    pub fn scale(&mut self, f: f64) {
        for a in self.amps.values_mut() {
            *a *= f;
        }
    }

    fn sorted_entries(&self) -> Vec<(u128, C64)> {
        let mut v: Vec<(u128, C64)> = self.amps.iter().map(|(&k, &a)| (k, a)).collect();
        v.sort_unstable_by_key(|e| e.0);
        v
    }

    fn rebuild(&mut self, entries: impl IntoIterator<Item = (u128, C64)>) {
        let mut out: FxHashMap<u128, C64> = FxHashMap::default();
        for (k, a) in entries {
            *out.entry(k).or_insert(ZERO) += a;
        }
        out.retain(|_, a| a.norm_sqr() > DROP_EPS);
        self.amps = out;
    }

    /// Apply a bijection of live words.
    pub fn permute(&mut self, f: impl Fn(u64) -> u64) {
        let entries = self.sorted_entries();
        self.rebuild(entries.into_iter().map(|(k, a)| (join(env(k), f(live(k))), a)));
    }

    /// `dst ^= f(src)`.
    pub fn xor_into(&mut self, src: &[u32], dst: &[u32], f: impl Fn(u64) -> u64) {
        self.permute(|w| {
            let v = extract(w, dst) ^ f(extract(w, src));
            deposit(w, dst, v)
        });
    }

    /// Multiply every basis amplitude by `f(live word)`.
    pub fn phase(&mut self, f: impl Fn(u64) -> C64) {
        for (k, a) in self.amps.iter_mut() {
            *a *= f(live(*k));
        }
    }

    /// Apply a local operator on `qubits`, chosen per basis value of the remaining live bits.
    /// `f` returns `None` for the identity.
    pub fn apply_local(&mut self, qubits: &[u32], f: impl Fn(u64) -> Option<CMat>) {
        let mask = mask_of(qubits);
        let dim = 1usize << qubits.len();
        let mut groups: FxHashMap<u128, Vec<C64>> = FxHashMap::default();
        for (&k, &a) in &self.amps {
            let base = k & !(mask as u128);
            let idx = extract(live(k), qubits) as usize;
            groups.entry(base).or_insert_with(|| vec![ZERO; dim])[idx] += a;
        }
        let mut bases: Vec<u128> = groups.keys().copied().collect();
        bases.sort_unstable();
        let mut out = Vec::with_capacity(self.amps.len());
        for base in bases {
            let v = &groups[&base];
            match f(live(base)) {
                None => {
                    for (i, &a) in v.iter().enumerate() {
                        out.push((join(env(base), deposit(live(base), qubits, i as u64)), a));
                    }
                }
                Some(m) => {
                    for r in 0..dim {
                        let mut acc = ZERO;
                        for (c, &a) in v.iter().enumerate() {
                            acc += m[(r, c)] * a;
                        }
                        out.push((join(env(base), deposit(live(base), qubits, r as u64)), acc));
                    }
                }
            }
        }
        self.rebuild(out);
    }

    /// Keep only basis states whose live word satisfies `keep` (an unnormalized projection).
    pub fn partition(&mut self, keep: impl Fn(u64) -> bool) {
        self.amps.retain(|&k, _| keep(live(k)));
    }

    /// Project onto the symmetric (`symmetric = true`) or antisymmetric part of the
    /// registers `qa`, `qb`: `(I +- Swap)/2`.
    pub fn project_swap(&mut self, qa: &[u32], qb: &[u32], symmetric: bool) {
        assert_eq!(qa.len(), qb.len(), "swap registers must have equal width");
        let sign = if symmetric { 1.0 } else { -1.0 };
        let swap = |w: u64| {
            let a = extract(w, qa);
            let b = extract(w, qb);
            deposit(deposit(w, qa, b), qb, a)
        };
        let entries = self.sorted_entries();
        let mut out = Vec::with_capacity(2 * entries.len());
        for (k, a) in entries {
            out.push((k, a * 0.5));
            out.push((join(env(k), swap(live(k))), a * (0.5 * sign)));
        }
        self.rebuild(out);
    }

    /// Move `qubits` out of the live word into the environment label.
    pub fn retire(&mut self, qubits: &[u32]) {
        let mask = mask_of(qubits);
        let mut table: FxHashMap<(u64, u64), u64> = FxHashMap::default();
        let entries = self.sorted_entries();
        let mut next = self.next_env;
        let mut out = Vec::with_capacity(entries.len());
        for (k, a) in entries {
            let v = live(k) & mask;
            let e = if v == 0 {
                env(k)
            } else {
                *table.entry((env(k), v)).or_insert_with(|| {
                    let id = next;
                    next += 1;
                    id
                })
            };
            out.push((join(e, live(k) & !mask), a));
        }
        self.next_env = next;
        self.rebuild(out);
    }

    /// Re-express the environment in the Schmidt basis of the live/environment cut so that
    /// at most `rank(rho_live)` environment vectors remain.
    pub fn compress(&mut self) {
        let mut envs: Vec<u64> = self.amps.keys().map(|&k| env(k)).collect();
        envs.sort_unstable();
        envs.dedup();
        if envs.len() <= 1 {
            return;
        }
        let eidx: FxHashMap<u64, usize> = envs.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut lives: Vec<u64> = self.amps.keys().map(|&k| live(k)).collect();
        lives.sort_unstable();
        lives.dedup();
        let lidx: FxHashMap<u64, usize> = lives.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        let mut phi = CMat::zeros(lives.len(), envs.len());
        for (&k, &a) in &self.amps {
            phi[(lidx[&live(k)], eidx[&env(k)])] = a;
        }
        let mut out = Vec::new();
        let mut new_env = 0u64;
        if lives.len() < envs.len() {
            // phi = sum_j sqrt(lambda_j) u_j w_j^dagger; keep (u_j sqrt(lambda_j), j).
            let rho = &phi * phi.adjoint();
            let (vals, vecs) = hermitian_eig(&rho);
            for j in (0..vals.len()).rev() {
                if vals[j] <= GRAM_EPS {
                    continue;
                }
                let s = vals[j].sqrt();
                for (i, &a) in vecs.column(j).iter().enumerate() {
                    out.push((join(new_env, lives[i]), a * s));
                }
                new_env += 1;
            }
        } else {
            let gram = phi.adjoint() * &phi;
            let (vals, vecs) = hermitian_eig(&gram);
            for j in (0..vals.len()).rev() {
                if vals[j] <= GRAM_EPS {
                    continue;
                }
                let col: CVec = &phi * vecs.column(j);
                for (i, &a) in col.iter().enumerate() {
                    out.push((join(new_env, lives[i]), a));
                }
                new_env += 1;
            }
        }
        self.next_env = new_env.max(1);
        self.rebuild(out);
    }

    /// `<self|other>` over the joint live and environment labels.
    pub fn overlap(&self, other: &SparseState) -> C64 {
        self.amps.iter().filter_map(|(k, a)| other.amps.get(k).map(|b| a.conj() * b)).sum()
    }

    /// Prepare `vec` on `qubits`, which must currently read zero on every branch.
    pub fn prepare_fresh(&mut self, qubits: &[u32], vec: &CVec) -> Result<()> {
        if vec.len() != 1usize << qubits.len() {
            return Err(Error::DimensionMismatch { expected: 1 << qubits.len(), found: vec.len() });
        }
        let mask = mask_of(qubits);
        if self.amps.keys().any(|&k| live(k) & mask != 0) {
            return Err(Error::InvalidArgument("prepare_fresh on a register that is not |0>".into()));
        }
        let entries = self.sorted_entries();
        let mut out = Vec::with_capacity(entries.len() * vec.len());
        for (k, a) in entries {
            for (v, &c) in vec.iter().enumerate() {
                if c != ZERO {
                    out.push((join(env(k), deposit(live(k), qubits, v as u64)), a * c));
                }
            }
        }
        self.rebuild(out);
        Ok(())
    }

    /// Reduced (unnormalized) density matrix of `qubits`, most significant first.
    pub fn reduced_density(&self, qubits: &[u32]) -> CMat {
        let mask = mask_of(qubits);
        let dim = 1usize << qubits.len();
        let mut groups: FxHashMap<u128, Vec<(usize, C64)>> = FxHashMap::default();
        for (&k, &a) in &self.amps {
            groups.entry(k & !(mask as u128)).or_default().push((extract(live(k), qubits) as usize, a));
        }
        let mut bases: Vec<u128> = groups.keys().copied().collect();
        bases.sort_unstable();
        let mut rho = CMat::zeros(dim, dim);
        for b in bases {
            let g = &groups[&b];
            for &(i, ai) in g {
                for &(j, aj) in g {
                    rho[(i, j)] += ai * aj.conj();
                }
            }
        }
        rho
    }

    /// Probability mass on branches whose `qubits` read `value`.
    pub fn probability_of(&self, qubits: &[u32], value: u64) -> f64 {
        self.amps.iter().filter(|(&k, _)| extract(live(k), qubits) == value).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Largest live value of `qubits` over the support (used for contract checks).
    pub fn all_zero(&self, qubits: &[u32]) -> bool {
        let mask = mask_of(qubits);
        self.amps.keys().all(|&k| live(k) & mask == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::linalg::hadamard;

    #[test]
    fn bits_roundtrip() {
        let w = deposit(0, &[5, 2, 0], 0b101);
        assert_eq!(w, 1 << 5 | 1);
        assert_eq!(extract(w, &[5, 2, 0]), 0b101);
    }

    #[test]
    fn retire_then_compress_keeps_reduced_state() {
        // Bell pair on qubits 0, 1; retire qubit 1, then compress.
        let mut s = SparseState::zero();
        s.apply_local(&[0], |_| Some(hadamard()));
        s.xor_into(&[0], &[1], |v| v);
        s.retire(&[1]);
        assert_eq!(s.env_count(), 2);
        let before = s.reduced_density(&[0]);
        s.compress();
        let after = s.reduced_density(&[0]);
        assert!((before - &after).norm() < 1e-12);
        assert!((after[(0, 0)].re - 0.5).abs() < 1e-12 && after[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn swap_projection() {
        let mut s = SparseState::zero();
        s.xor_into(&[], &[0], |_| 1);
        s.project_swap(&[0], &[1], true);
        assert!((s.norm_sqr() - 0.5).abs() < 1e-12);
        let mut t = SparseState::zero();
        t.project_swap(&[0], &[1], false);
        assert!(t.norm_sqr() < 1e-12);
    }

    #[test]
    fn fresh_preparation_requires_zero() {
        let mut s = SparseState::zero();
        let v = CVec::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.8, 0.0)]);
        s.prepare_fresh(&[3], &v).unwrap();
        assert!((s.probability_of(&[3], 1) - 0.64).abs() < 1e-12);
        assert!(s.prepare_fresh(&[3], &v).is_err());
    }
}
