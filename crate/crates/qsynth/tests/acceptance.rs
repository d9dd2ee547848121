//! Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.
//!
//! Tolerances and runtime budgets are pinned below. A criterion that fails stays failing.

use qsynth::cli::ProverSpec;
use qsynth::primitives::{phase_estimation_distribution, swap_test};
use qsynth::qcore::linalg::{c, diag, hadamard, kron_vec, max_abs, pauli_z, random_vector, swap_matrix, turn, CMat, CVec};
use qsynth::qcore::{
    delta, ghz_state, plus_state, random_state, trace_distance_mat, w_state, zero_state, DensityMatrix, QuantumState, RegisterLayout,
};
use qsynth::rng;
use qsynth::stateproto::{
    amplify, check_soundness_bound, flawed_protocol, lying_prover, run_protocol, HonestProver, LemmaStatus, ProtocolConfig, ProverStrategy,
    SubVerifier, Target,
};
use qsynth::tomography::{cp, cp_max_error, ph_max_error, prefix_probability, u64_to_bits, OracleBackend};
use qsynth::uniproto::{
    honest_factory, is_stable, lmr_error, program_state_generator, shifted, stability_shift, unitary_corpus, unitary_qip_apply,
    UnitaryQipConfig,
};
use std::collections::BTreeMap;
use std::time::{Duration, Instant};

// ---------------------------------------------------------------------------
// Pinned tolerances
// ---------------------------------------------------------------------------

/// Swap-test law and pure-state overlap.
const SWAP_TOL: f64 = 1e-9;
const SWAP_SAMPLES: usize = 500;
/// Honest acceptance and amplification products.
const PROB_TOL: f64 = 1e-9;
/// Conditioned output against the approximation on high-weight branches.
const OUTPUT_TOL: f64 = 1e-8;
/// Attack discrimination.
const ATTACK_MIN_TD: f64 = 0.9;
const ATTACK_MAX_ACCEPT: f64 = 0.95;
/// Tomography: exact backend precision and sampled agreement.
const TOMO_M: u32 = 10;
const TOMO_STATES: usize = 200;
const SAMPLED_M: u32 = 3;
const SAMPLED_RUNS: usize = 100;
const SAMPLED_MIN_PASS: usize = 95;
/// Phase-estimation tails.
const PE_TAIL_MAX: f64 = 0.2;
/// LMR scaling.
const LMR_MAX_ERR_200: f64 = 0.02;
const LMR_RATIO: (f64, f64) = (1.6, 2.4);
/// End-to-end unitary synthesis.
const E2E_MAX_TD: f64 = 0.05;

fn verdict(id: u32, name: &str, pass: bool, elapsed: Duration, budget: Duration, detail: String) {
    let ok = pass && elapsed <= budget;
    println!(
        "criterion {id:>2} {name}: {} ({detail}; {:.2}s of {}s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
    assert!(elapsed <= budget, "criterion {id} ({name}) exceeded its {}s budget", budget.as_secs());
}

fn target(state: QuantumState) -> Target {
    Target::exact(state, 10).expect("target")
}

fn honest(t: &Target) -> Box<dyn ProverStrategy> {
    Box::new(HonestProver::new(t.approx.clone()))
}

// ---------------------------------------------------------------------------
// 1. Swap-test law
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_swap_test_law() {
    let start = Instant::now();
    let mut r = rng::stream(1, &[rng::label("acceptance-swap")]);
    let mut worst = 0.0f64;
    let mut worst_pure = 0.0f64;
    for i in 0..SWAP_SAMPLES {
        let w = 1 + i % 3;
        // A purification on A B E gives a mixed bipartite input on A B.
        let e = i % 2;
        let layout = RegisterLayout::new([("A", w), ("B", w), ("E", e)]).unwrap();
        let s = QuantumState::new(layout, random_vector(1 << (2 * w + e), &mut r)).unwrap();
        let out = swap_test(&s, &["A"], &["B"]).unwrap();
        let rho = s.to_density().partial_trace(&["E"]).unwrap();
        let tr_swap = (swap_matrix(w) * rho.matrix()).trace().re;
        worst = worst.max((out.symmetric_prob - (0.5 + 0.5 * tr_swap)).abs());

        let phi = random_vector(1 << w, &mut r);
        let psi = random_vector(1 << w, &mut r);
        let prod = QuantumState::new(RegisterLayout::new([("A", w), ("B", w)]).unwrap(), kron_vec(&phi, &psi)).unwrap();
        let p = swap_test(&prod, &["A"], &["B"]).unwrap().symmetric_prob;
        worst_pure = worst_pure.max((p - (0.5 + 0.5 * phi.dotc(&psi).norm_sqr())).abs());
    }
    verdict(
        1,
        "swap-test law",
        worst <= SWAP_TOL && worst_pure <= SWAP_TOL,
        start.elapsed(),
        Duration::from_secs(10),
        format!("max deviation {worst:.2e}, pure-vs-pure {worst_pure:.2e}"),
    );
}

// ---------------------------------------------------------------------------
// 2. Completeness
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_completeness() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut runs = 0;
    let mut worst_branch = 0.0f64;
    for n in 1..=3 {
        let mut states =
            vec![("zero".to_string(), zero_state(n).unwrap()), ("ghz".into(), ghz_state(n).unwrap()), ("w".into(), w_state(n).unwrap())];
        for s in 0..20 {
            states.push((format!("random{s}"), random_state(n, 100 + s).unwrap()));
        }
        for (name, st) in states {
            let t = target(st);
            let subv = SubVerifier::coin_flip(t.table());
            let r = run_protocol(&t, honest(&t).as_ref(), &subv, &ProtocolConfig::desk(n)).unwrap();
            runs += 1;
            if (r.accept_probability - 1.0).abs() > PROB_TOL {
                failures.push(format!("{name}/n={n}: acceptance {}", r.accept_probability));
            }
            for l in r.leaves.iter().filter(|l| l.lemma.status == LemmaStatus::Checked) {
                worst_branch = worst_branch.max(l.lemma.lhs);
                if l.lemma.lhs > OUTPUT_TOL {
                    failures.push(format!("{name}/n={n}: branch td {}", l.lemma.lhs));
                }
            }
            let out = r.conditioned_output.as_ref().expect("accepted");
            let v = t.state.amplitudes();
            let td = trace_distance_mat(out.matrix(), &(v * v.adjoint()));
            let rhs = r.low_weight_probability + t.approx.td_to_target.unwrap();
            if td > rhs + OUTPUT_TOL {
                failures.push(format!("{name}/n={n}: td {td} > {rhs}"));
            }
        }
    }
    verdict(
        2,
        "completeness",
        failures.is_empty(),
        start.elapsed(),
        Duration::from_secs(300),
        format!("{runs} targets, worst high-weight branch td {worst_branch:.2e}, failures {failures:?}"),
    );
}

// ---------------------------------------------------------------------------
// 3. Attack discrimination
// ---------------------------------------------------------------------------

struct Attack {
    name: &'static str,
    state: QuantumState,
    prover: ProverSpec,
}

fn attacks() -> Vec<Attack> {
    vec![
        Attack { name: "phase |+>", state: plus_state(1).unwrap(), prover: ProverSpec::PhaseAttack { phases: vec![0.0, 0.5], level: 1 } },
        Attack {
            name: "phase GHZ2",
            state: ghz_state(2).unwrap(),
            prover: ProverSpec::PhaseAttack { phases: vec![0.0, 0.0, 0.0, 0.5], level: 2 },
        },
        Attack { name: "entangle |+>", state: plus_state(1).unwrap(), prover: ProverSpec::EntanglementAttack { levels: vec![1] } },
        Attack { name: "entangle |+>^2", state: plus_state(2).unwrap(), prover: ProverSpec::EntanglementAttack { levels: vec![1, 2] } },
    ]
}

#[test]
fn criterion_03_attack_discrimination() {
    let start = Instant::now();
    let mut pass = true;
    let mut lines = Vec::new();
    for a in attacks() {
        let n = a.state.width();
        let t = target(a.state);
        let subv = SubVerifier::coin_flip(t.table());
        let p = a.prover.build(&t).unwrap();
        let cfg = ProtocolConfig::desk(n);
        let f = flawed_protocol(&t, p.as_ref(), &subv, &cfg).unwrap();
        let r = run_protocol(&t, p.as_ref(), &subv, &cfg).unwrap();
        let td = f.td_to_target.unwrap_or(0.0);
        let ok = (f.accept_probability - 1.0).abs() <= PROB_TOL && td >= ATTACK_MIN_TD && r.accept_probability <= ATTACK_MAX_ACCEPT;
        pass &= ok;
        lines
            .push(format!("{}: flawed acc {:.6} td {:.4}, two-register acc {:.4}", a.name, f.accept_probability, td, r.accept_probability));
    }
    verdict(3, "attack discrimination", pass, start.elapsed(), Duration::from_secs(120), lines.join("; "));
}

// ---------------------------------------------------------------------------
// 4. Soundness inequality on every high-weight branch
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_soundness_inequality() {
    let start = Instant::now();
    let (mut checked, mut violations, mut worst) = (0usize, 0usize, f64::NEG_INFINITY);
    let mut adversaries = 0;
    for st in [ghz_state(2).unwrap(), w_state(2).unwrap(), random_state(2, 7).unwrap()] {
        let t = target(st);
        let subv = SubVerifier::coin_flip(t.table());
        let mut specs = ProverSpec::gallery(2, 11);
        specs.extend((12..16).map(|seed| ProverSpec::RandomUnitary { seed }));
        specs.push(ProverSpec::OrthogonalB { level: 2 });
        specs.push(ProverSpec::EntanglementAttack { levels: vec![1] });
        let mut provers: Vec<Box<dyn ProverStrategy>> = specs.iter().map(|p| p.build(&t).unwrap()).collect();
        let table = t.table();
        provers.push(Box::new(lying_prover(t.approx.clone(), BTreeMap::from([((0, 0), (table.cp[0][0] + 37) % 1024)]))));
        provers.push(Box::new(lying_prover(t.approx.clone(), BTreeMap::from([((2, 3), (table.ph[3] + 512) % 1024)]))));
        for p in &provers {
            let r = run_protocol(&t, p.as_ref(), &subv, &ProtocolConfig::desk(2)).unwrap();
            let rep = check_soundness_bound(&r);
            checked += rep.checked;
            violations += rep.violations;
            worst = worst.max(rep.worst_margin);
            adversaries += 1;
        }
    }
    verdict(
        4,
        "soundness inequality",
        violations == 0 && checked > 0,
        start.elapsed(),
        Duration::from_secs(300),
        format!("{adversaries} prover/target pairs, {checked} branches checked, {violations} violations, worst lhs - rhs {worst:.3e}"),
    );
}

// ---------------------------------------------------------------------------
// 5. Tomography guarantees
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_tomography() {
    let start = Instant::now();
    let exact = OracleBackend::exact(TOMO_M).with_output_precision(TOMO_M);
    let cp_bound = 2f64.powi(-(TOMO_M as i32));
    let ph_bound = 2.0 * 2f64.powi(-(TOMO_M as i32));
    let (mut cp_worst, mut ph_worst) = (0.0f64, 0.0f64);
    let mut ph_fail = 0;
    for i in 0..TOMO_STATES {
        let psi = random_state(1 + i % 3, 1000 + i as u64).unwrap();
        cp_worst = cp_worst.max(cp_max_error(&psi, &exact).unwrap());
        let e = ph_max_error(&psi, &exact).unwrap();
        ph_worst = ph_worst.max(e);
        ph_fail += (e > ph_bound) as usize;
    }

    // Sampled backend with the default trial count 10 * 4^m, against the true cp values.
    let psi = random_state(2, 77).unwrap();
    let sampled_bound = 2.0 * 2f64.powi(-(SAMPLED_M as i32));
    let mut within = 0;
    for run in 0..SAMPLED_RUNS {
        let b = OracleBackend::sampled(SAMPLED_M, run as u64).with_output_precision(SAMPLED_M);
        let mut ok = true;
        for len in 0..2 {
            for x in 0..1u64 << len {
                let bits = u64_to_bits(x, len);
                let px = prefix_probability(&psi, &bits);
                let mut b0 = bits.clone();
                b0.push(false);
                let truth = if px > 0.0 { prefix_probability(&psi, &b0) / px } else { 1.0 };
                ok &= (cp(&psi, &bits, &b).unwrap().value() - truth).abs() <= sampled_bound;
            }
        }
        within += ok as usize;
    }
    verdict(
        5,
        "tomography guarantees",
        cp_worst <= cp_bound && ph_worst <= ph_bound && within >= SAMPLED_MIN_PASS,
        start.elapsed(),
        Duration::from_secs(180),
        format!(
            "cp max {cp_worst:.3e} (bound {cp_bound:.3e}), ph max {ph_worst:.3e} (bound {ph_bound:.3e}, {ph_fail}/{TOMO_STATES} states over), sampled {within}/{SAMPLED_RUNS} within {sampled_bound}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 6. Phase estimation
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_phase_estimation() {
    let start = Instant::now();
    let e0 = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
    let mut worst = 0.0f64;
    for m in 1..=6usize {
        for j in 0..1u64 << m {
            let theta = j as f64 / (1u64 << m) as f64;
            let u = diag(&[turn(theta), c(1.0, 0.0)]);
            let p = phase_estimation_distribution(&u, m, &e0).unwrap().probabilities[j as usize];
            worst = worst.max((p - 1.0).abs());
        }
    }
    let m = 4;
    let u = diag(&[turn(1.0 / 3.0), c(1.0, 0.0)]);
    let dist = phase_estimation_distribution(&u, m, &e0).unwrap().probabilities;
    let tail: f64 = dist.iter().enumerate().filter(|(k, _)| delta(*k as f64 / 16.0, 1.0 / 3.0) > 4.0 / 16.0).map(|(_, p)| p).sum();
    verdict(
        6,
        "phase estimation",
        worst <= PROB_TOL && tail < PE_TAIL_MAX,
        start.elapsed(),
        Duration::from_secs(30),
        format!("dyadic recovery deviation {worst:.2e}, tail Pr[delta > 4/16] at 1/3 = {tail:.4}"),
    );
}

// ---------------------------------------------------------------------------
// 7. LMR scaling
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_lmr_scaling() {
    let start = Instant::now();
    let one = RegisterLayout::single("A", 1);
    let rho = DensityMatrix::new(one.clone(), diag(&[c(0.0, 0.0), c(1.0, 0.0)])).unwrap();
    let tau = DensityMatrix::from_pure(&plus_state(1).unwrap());
    let errs: Vec<f64> = [50, 100, 200].iter().map(|&k| lmr_error(&tau, &rho, 0.5, k).unwrap()).collect();
    let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
    let ratio_ok = ratios.iter().all(|r| (LMR_RATIO.0..=LMR_RATIO.1).contains(r));
    verdict(
        7,
        "LMR scaling",
        errs[2] <= LMR_MAX_ERR_200 && ratio_ok,
        start.elapsed(),
        Duration::from_secs(30),
        format!(
            "errors {:.5}/{:.5}/{:.5} at k = 50/100/200 (bound {LMR_MAX_ERR_200}), ratios {:.3}/{:.3}",
            errs[0], errs[1], errs[2], ratios[0], ratios[1]
        ),
    );
}

// ---------------------------------------------------------------------------
// 8. Program-state pipeline
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_program_state_pipeline() {
    let start = Instant::now();
    let mut fails = Vec::new();
    let one = c(1.0, 0.0);
    // (unitary, m, t~, rho~ diagonal in the eigenbasis order of the diagonal)
    let cases = [
        ("diag(i, i)", diag(&[turn(0.25), turn(0.25)]), 2, 0.5, [0.5, 0.5]),
        ("diag(i, -1)", diag(&[turn(0.25), turn(0.5)]), 2, 0.75, [1.0 / 3.0, 2.0 / 3.0]),
        ("diag(-1, i)", diag(&[-one, turn(0.25)]), 2, 0.75, [2.0 / 3.0, 1.0 / 3.0]),
        ("diag(e^{i pi/4}, i)", diag(&[turn(0.125), turn(0.25)]), 3, 0.375, [1.0 / 3.0, 2.0 / 3.0]),
    ];
    for (name, u, m, t, d) in cases {
        let g = program_state_generator(&u, m).unwrap();
        if (g.accept_probability - g.t_tilde / 2.0).abs() > PROB_TOL {
            fails.push(format!("{name}: acceptance {} vs t~/2 {}", g.accept_probability, g.t_tilde / 2.0));
        }
        if (g.t_tilde - t).abs() > PROB_TOL {
            fails.push(format!("{name}: t~ {}", g.t_tilde));
        }
        let expect = diag(&[c(d[0], 0.0), c(d[1], 0.0)]);
        let dev = max_abs(&(g.rho_tilde.matrix() - expect));
        if dev > PROB_TOL {
            fails.push(format!("{name}: rho~ deviates by {dev:.2e}"));
        }
    }
    let mut shifts = Vec::new();
    for (name, u) in unitary_corpus() {
        let n = u.nrows().trailing_zeros() as usize;
        let rep = stability_shift(&u, n, 12, &OracleBackend::exact(12)).unwrap();
        let phi = rep.shift.map(|s| s.value()).unwrap_or(0.0);
        let bound = 9.0 * 2f64.powi(-2 * n as i32);
        if !rep.stable || !is_stable(&shifted(&u, phi), n).unwrap().stable || phi > bound {
            fails.push(format!("{name}: shift {phi} stable {} (bound {bound})", rep.stable));
        }
        shifts.push(format!("{name}={phi:.4}"));
    }
    verdict(
        8,
        "program-state pipeline",
        fails.is_empty(),
        start.elapsed(),
        Duration::from_secs(60),
        format!("shifts [{}], failures {fails:?}", shifts.join(", ")),
    );
}

// ---------------------------------------------------------------------------
// 9. End-to-end unitary synthesis
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_end_to_end_unitary() {
    let start = Instant::now();
    let phi = plus_state(1).unwrap();
    let z = pauli_z();
    assert!(max_abs(&(&z - (CMat::identity(2, 2) - diag(&[c(0.0, 0.0), c(2.0, 0.0)])))) < 1e-15);
    let r = unitary_qip_apply(&z, &phi, &UnitaryQipConfig::default(), honest_factory().as_ref()).unwrap();
    let minus = hadamard().column(1).into_owned();
    let td = trace_distance_mat(r.output.as_ref().unwrap().matrix(), &(&minus * minus.adjoint()));
    verdict(
        9,
        "end-to-end unitary synthesis",
        (r.accept_probability - 1.0).abs() <= PROB_TOL && td <= E2E_MAX_TD,
        start.elapsed(),
        Duration::from_secs(300),
        format!(
            "acceptance {:.9}, td to |-> {td:.4} (bound {E2E_MAX_TD}), k = {}, calibration error {:.4}",
            r.accept_probability, r.copies, r.calibration_error
        ),
    );
}

// ---------------------------------------------------------------------------
// 10. Amplification
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_amplification() {
    let start = Instant::now();
    let t = target(plus_state(1).unwrap());
    let subv = SubVerifier::coin_flip(t.table());
    let table = t.table();
    // A false ph answer on |1> is reached with weight 1/2; a false cp answer always.
    let provers: Vec<Box<dyn ProverStrategy>> = vec![
        honest(&t),
        Box::new(lying_prover(t.approx.clone(), BTreeMap::from([((1, 1), (table.ph[1] + 256) % 1024)]))),
        Box::new(lying_prover(t.approx.clone(), BTreeMap::from([((0, 0), (table.cp[0][0] + 256) % 1025)]))),
    ];
    let cfg = ProtocolConfig::desk(1);
    let single: Vec<f64> = provers.iter().map(|p| flawed_protocol(&t, p.as_ref(), &subv, &cfg).unwrap().accept_probability).collect();
    let designed = [1.0, 0.75, 0.5];
    let levels_ok = single.iter().zip(designed).all(|(a, b)| (a - b).abs() <= PROB_TOL);
    let mut pass = levels_ok;
    let mut lines = vec![format!("per-instance {single:.6?}")];
    for pattern in [vec![0, 1, 2], vec![1, 1], vec![2, 2, 2], vec![0, 0], vec![1, 2, 1, 2]] {
        let amp = amplify(pattern.len(), |j| flawed_protocol(&t, provers[pattern[j]].as_ref(), &subv, &cfg)).unwrap();
        let product: f64 = pattern.iter().map(|&i| single[i]).product();
        pass &= (amp.accept_probability - product).abs() <= PROB_TOL;
        lines.push(format!("{pattern:?}: {:.6} vs {product:.6}", amp.accept_probability));
    }
    verdict(10, "amplification", pass, start.elapsed(), Duration::from_secs(60), lines.join("; "));
}
