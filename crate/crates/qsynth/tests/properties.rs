//! Cross-module invariants checked with proptest, plus independent closed-form oracles
//! whose outputs are frozen.

use proptest::prelude::*;
use qsynth::primitives::{phase_estimation_distribution, recognizer_from_projector, swap_test};
use qsynth::qcore::linalg::{c, diag, random_unitary, turn, unitary_deviation};
use qsynth::qcore::{
    delta, plus_state, random_state, round_to_dyadic, round_to_dyadic_phase, trace_distance_mat, CMat, CVec, DensityMatrix, QuantumState,
    RegisterLayout, TorusAngle, C64,
};
use qsynth::stateproto::{amplify, flawed_protocol, honest_prover, lying_prover, ProtocolConfig, SubVerifier, Target};
use qsynth::tomography::{cp_max_error, OracleBackend};
use qsynth::uniproto::{lmr_apply, lmr_error, restricted_input_reduction};
use rand::SeedableRng;
use std::collections::BTreeMap;
use std::f64::consts::PI;

fn qubit_state(name: &str, re0: f64, im0: f64, re1: f64, im1: f64) -> Option<QuantumState> {
    let v = CVec::from_vec(vec![C64::new(re0, im0), C64::new(re1, im1)]);
    let n = v.norm();
    (n > 1e-3).then(|| QuantumState::new(RegisterLayout::single(name, 1), v / C64::new(n, 0.0)).unwrap())
}

/// Bloch vector of a 2x2 density matrix.
fn bloch(m: &CMat) -> [f64; 3] {
    [2.0 * m[(0, 1)].re, -2.0 * m[(0, 1)].im, (m[(0, 0)] - m[(1, 1)]).re]
}

/// One-qubit trace distance as half the Euclidean distance of Bloch vectors.
fn qubit_td(a: &CMat, b: &CMat) -> f64 {
    let (x, y) = (bloch(a), bloch(b));
    ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt() / 2.0
}

/// `k` steps of `s -> cos^2 d s + sin^2 d r + i cos d sin d [r, s]` with `d = 2 pi t / k`,
/// written against plain 2x2 arrays.
fn lmr_oracle(tau: [[C64; 2]; 2], rho: [[C64; 2]; 2], t: f64, k: usize) -> [[C64; 2]; 2] {
    let d = 2.0 * PI * t / k as f64;
    let (cc, ss, cs) = (d.cos().powi(2), d.sin().powi(2), d.cos() * d.sin());
    let mul = |a: &[[C64; 2]; 2], b: &[[C64; 2]; 2]| {
        let mut o = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                o[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        o
    };
    let mut s = tau;
    for _ in 0..k {
        let (rs, sr) = (mul(&rho, &s), mul(&s, &rho));
        let mut next = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                next[i][j] = s[i][j] * cc + rho[i][j] * ss + C64::new(0.0, cs) * (rs[i][j] - sr[i][j]);
            }
        }
        s = next;
    }
    s
}

fn to_arr(m: &CMat) -> [[C64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

/// Probability of reading `j` from `m`-bit phase estimation on an eigenvector of phase `theta`.
fn pe_oracle(theta: f64, m: usize, j: usize) -> f64 {
    let big = (1usize << m) as f64;
    let x = theta - j as f64 / big;
    let s: C64 = (0..1usize << m).map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 * x)).sum();
    s.norm_sqr() / (big * big)
}

#[test]
fn lmr_matches_closed_form_iteration() {
    let rho_m = diag(&[c(0.0, 0.0), c(1.0, 0.0)]);
    let rho = DensityMatrix::new(RegisterLayout::single("A", 1), rho_m.clone()).unwrap();
    let tau = DensityMatrix::from_pure(&plus_state(1).unwrap());
    for k in [1, 7, 50] {
        let ours = lmr_apply(&tau, &rho, 0.5, k).unwrap();
        let oracle = lmr_oracle(to_arr(tau.matrix()), to_arr(&rho_m), 0.5, k);
        for (i, row) in oracle.iter().enumerate() {
            for (j, want) in row.iter().enumerate() {
                assert!((ours.matrix()[(i, j)] - want).norm() < 1e-12, "k = {k}");
            }
        }
    }
}

#[test]
fn lmr_errors_are_frozen() {
    let rho = DensityMatrix::new(RegisterLayout::single("A", 1), diag(&[c(0.0, 0.0), c(1.0, 0.0)])).unwrap();
    let tau = DensityMatrix::from_pure(&plus_state(1).unwrap());
    let frozen = [(50, 0.10121), (100, 0.05281), (200, 0.02698)];
    for (k, want) in frozen {
        let got = lmr_error(&tau, &rho, 0.5, k).unwrap();
        assert!((got - want).abs() < 5e-6, "k = {k}: {got}");
        // The ideal here is Z|+> = |->, so the oracle distance is to |-><-|.
        let ideal = CMat::from_row_slice(2, 2, &[c(0.5, 0.0), c(-0.5, 0.0), c(-0.5, 0.0), c(0.5, 0.0)]);
        let o = lmr_oracle(to_arr(tau.matrix()), to_arr(rho.matrix()), 0.5, k);
        let om = CMat::from_row_slice(2, 2, &[o[0][0], o[0][1], o[1][0], o[1][1]]);
        assert!((qubit_td(&om, &ideal) - got).abs() < 1e-10);
    }
}

#[test]
fn phase_estimation_matches_fejer_kernel() {
    let one = CVec::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]);
    for theta in [0.3, 0.71, 0.0625] {
        let u = diag(&[c(1.0, 0.0), turn(theta)]);
        let r = phase_estimation_distribution(&u, 4, &one).unwrap();
        for (j, p) in r.probabilities.iter().enumerate() {
            assert!((p - pe_oracle(theta, 4, j)).abs() < 1e-12);
        }
    }
    // Frozen reading for the non-dyadic phase 0.3 at four bits.
    let u = diag(&[c(1.0, 0.0), turn(0.3)]);
    let r = phase_estimation_distribution(&u, 4, &one).unwrap();
    assert!((r.probabilities[5] - 0.875_5).abs() < 5e-4);
}

#[test]
fn amplification_multiplies_designed_liars() {
    let t = Target::exact(plus_state(1).unwrap(), 10).unwrap();
    let subv = SubVerifier::coin_flip(t.table());
    let table = t.table();
    let liar = lying_prover(t.approx.clone(), BTreeMap::from([((1, 1), (table.ph[1] + 256) % 1024)]));
    let honest = honest_prover(t.approx.clone());
    let cfg = ProtocolConfig::desk(1);
    let r =
        amplify(3, |j| if j == 1 { flawed_protocol(&t, &honest, &subv, &cfg) } else { flawed_protocol(&t, &liar, &subv, &cfg) }).unwrap();
    assert!((r.accept_probability - 0.75 * 0.75).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn swap_test_law(a in prop::array::uniform4(-1.0f64..1.0), b in prop::array::uniform4(-1.0f64..1.0)) {
        let (Some(x), Some(y)) = (qubit_state("A", a[0], a[1], a[2], a[3]), qubit_state("B", b[0], b[1], b[2], b[3])) else {
            return Ok(());
        };
        let overlap = (x.amplitudes().adjoint() * y.amplitudes())[(0, 0)].norm_sqr();
        let out = swap_test(&x.tensor(&y).unwrap(), &["A"], &["B"]).unwrap();
        prop_assert!((out.symmetric_prob - (1.0 + overlap) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn qubit_trace_distance_matches_bloch_oracle(a in prop::array::uniform4(-1.0f64..1.0), b in prop::array::uniform4(-1.0f64..1.0), w in 0.0f64..1.0) {
        let (Some(x), Some(y)) = (qubit_state("A", a[0], a[1], a[2], a[3]), qubit_state("A", b[0], b[1], b[2], b[3])) else {
            return Ok(());
        };
        let px = x.to_density().matrix().clone();
        let py = y.to_density().matrix().clone();
        let mixed = &px * c(w, 0.0) + &py * c(1.0 - w, 0.0);
        let td = trace_distance_mat(&px, &mixed);
        prop_assert!((td - qubit_td(&px, &mixed)).abs() < 1e-10);
        prop_assert!((trace_distance_mat(&px, &py) - trace_distance_mat(&py, &px)).abs() < 1e-12);
        prop_assert!(td <= trace_distance_mat(&px, &py) + 1e-12);
    }

    #[test]
    fn dyadic_rounding_and_torus_distance(x in 0.0f64..1.0, y in 0.0f64..1.0, m in 1u32..20) {
        let step = 2f64.powi(-(m as i32));
        let r = round_to_dyadic(x, m);
        // Interval rounding: within half a step, except in the top half-step where it clamps to 1 - 2^-m.
        let slack = if x <= 1.0 - step / 2.0 { step / 2.0 } else { step };
        prop_assert!((r.value() - x).abs() <= slack + 1e-15);
        let p = round_to_dyadic_phase(TorusAngle::new(x), m);
        prop_assert!(delta(p.r.value(), x) <= step / 2.0 + 1e-15);
        prop_assert!((delta(x, y) - delta(y, x)).abs() < 1e-15);
        prop_assert!(delta(x, y) <= 0.5);
    }

    #[test]
    fn exact_cp_oracle_within_grid(seed in 0u64..10_000, n in 1usize..=3) {
        let psi = random_state(n, seed).unwrap();
        let m = 8;
        prop_assert!(cp_max_error(&psi, &OracleBackend::exact(m).with_output_precision(m)).unwrap() <= 2f64.powi(-(m as i32)) + 1e-12);
    }

    #[test]
    fn restricted_reduction_is_consistent(seed in 0u64..10_000, rank in 1usize..=4) {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let u = random_unitary(4, &mut rng);
        let w = random_unitary(4, &mut rng);
        let entries: Vec<C64> = (0..4).map(|i| c(if i < rank { 1.0 } else { 0.0 }, 0.0)).collect();
        let p = &w * diag(&entries) * w.adjoint();
        let red = restricted_input_reduction(&u, &recognizer_from_projector(&p).unwrap()).unwrap();
        prop_assert_eq!(red.dim, 2 * rank);
        prop_assert!(unitary_deviation(&red.v) < 1e-9);
        prop_assert!(red.verify() < 1e-9);
    }

    #[test]
    fn lmr_output_is_a_state_and_error_shrinks(p in 0.0f64..1.0, t in 0.05f64..0.95, k in 4usize..40) {
        let rho = DensityMatrix::new(RegisterLayout::single("A", 1), diag(&[c(p, 0.0), c(1.0 - p, 0.0)])).unwrap();
        let tau = DensityMatrix::from_pure(&plus_state(1).unwrap());
        let out = lmr_apply(&tau, &rho, t, k).unwrap();
        prop_assert!((out.trace() - 1.0).abs() < 1e-12);
        prop_assert!(out.eigenvalues().iter().all(|&e| e > -1e-12));
        prop_assert!(lmr_error(&tau, &rho, t, 4 * k).unwrap() <= lmr_error(&tau, &rho, t, k).unwrap() + 1e-12);
    }
}
