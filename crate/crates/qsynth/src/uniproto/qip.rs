//! The unitary synthesis verifier: synthesize copies of the program-state purification and
//! the evolution time with the state protocol, then apply density-matrix exponentiation.

use super::generator::{estimate_evolution_time, program_state_generator};
use super::lmr::{calibrate_copies, lmr_apply};
use super::program::{canonical_program, default_search_pe_bits, shifted, stability_shift_with};
use crate::error::{Error, Result};
use crate::qcore::linalg::{CMat, CVec, C64};
use crate::qcore::{trace_distance_mat, DensityMatrix, QuantumState, RegisterLayout};
use crate::stateproto::{run_protocol, ProtocolConfig, ProverStrategy, RunResult, SubVerifier, SubVerifierKind, Target};
use crate::tomography::OracleBackend;
use serde::{Deserialize, Serialize};

/// Builds the prover for a synthesized target (the program-state purification or the
/// time register).
pub type ProverFactory = dyn Fn(&Target) -> Result<Box<dyn ProverStrategy>> + Sync;

/// The honest prover for any target.
pub fn honest_factory() -> Box<ProverFactory> {
    Box::new(|t: &Target| Ok(Box::new(crate::stateproto::honest_prover(t.approx.clone())) as Box<dyn ProverStrategy>))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnitaryQipConfig {
    /// Grid precision of the stability-shift search.
    pub search_bits: u32,
    /// Phase-estimation width inside the shift search (`None`: `3n + 2`).
    pub search_pe_bits: Option<usize>,
    /// Phase-estimation width `m` of the program-state generator.
    pub pe_bits: usize,
    /// Bits of the time register `g = f / 2^n` (`None`: `pe_bits + n`).
    pub time_bits: Option<u32>,
    /// Oracle precision of the synthesized targets.
    pub ell: u32,
    /// State-protocol rounds per synthesized qubit.
    pub rounds_per_qubit: usize,
    /// Copies of the program state; `None` calibrates by doubling.
    pub copies: Option<usize>,
    /// Calibration budget is `1 / (5 q^2)`.
    pub budget_q: f64,
    pub subverifier: SubVerifierKind,
}

impl Default for UnitaryQipConfig {
    fn default() -> Self {
        UnitaryQipConfig {
            search_bits: 2,
            search_pe_bits: None,
            pe_bits: 2,
            time_bits: None,
            ell: 10,
            rounds_per_qubit: 5,
            copies: None,
            budget_q: 3.0,
            subverifier: SubVerifierKind::CoinFlip,
        }
    }
}

impl UnitaryQipConfig {
    pub fn budget(&self) -> f64 {
        1.0 / (5.0 * self.budget_q * self.budget_q)
    }
}

#[derive(Clone, Debug)]
pub struct UnitaryRunResult {
    /// `Pr[state run accepts]^k * Pr[time run accepts]`.
    pub accept_probability: f64,
    pub output: Option<DensityMatrix>,
    /// `td(output, u phi u^dagger)`.
    pub td_to_ideal: Option<f64>,
    pub zero_time: bool,
    pub shift: f64,
    pub t_tilde: f64,
    /// Expected evolution time decoded from the synthesized time register.
    pub evolution_time: f64,
    pub copies: usize,
    /// Worst calibration error at the chosen `k` (against the ideal program).
    pub calibration_error: f64,
    /// `td` between the synthesized program copy and the generator's `rho~`.
    pub program_td: f64,
    pub state_run: Option<RunResult>,
    pub time_run: Option<RunResult>,
}

fn subverifier(kind: SubVerifierKind, t: &Target) -> Result<SubVerifier> {
    match kind {
        SubVerifierKind::CoinFlip => Ok(SubVerifier::coin_flip(t.table())),
        SubVerifierKind::Tunable { soundness } => SubVerifier::tunable(t.table(), soundness),
    }
}

fn synthesize(state: QuantumState, cfg: &UnitaryQipConfig, prover: &ProverFactory) -> Result<RunResult> {
    let target = Target::exact(state, cfg.ell)?;
    let n = target.n();
    let pcfg = ProtocolConfig::desk(n).with_precision(cfg.ell, cfg.ell).with_t(cfg.rounds_per_qubit * n);
    let p = prover(&target)?;
    run_protocol(&target, p.as_ref(), &subverifier(cfg.subverifier, &target)?, &pcfg)
}

/// Apply `u` to `phi` through the interactive pipeline. The identity short-circuits.
pub fn unitary_qip_apply(u: &CMat, phi: &QuantumState, cfg: &UnitaryQipConfig, prover: &ProverFactory) -> Result<UnitaryRunResult> {
    let d = u.nrows();
    if phi.amplitudes().len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: phi.amplitudes().len() });
    }
    let n = d.trailing_zeros() as usize;
    let ideal_vec = u * phi.amplitudes();
    let ideal = &ideal_vec * ideal_vec.adjoint();
    let tau = DensityMatrix::from_pure(&phi.with_layout(RegisterLayout::single("A", n))?);
    if let Err(Error::ZeroTime) = canonical_program(u) {
        return Ok(UnitaryRunResult {
            accept_probability: 1.0,
            td_to_ideal: Some(trace_distance_mat(tau.matrix(), &ideal)),
            output: Some(tau),
            zero_time: true,
            shift: 0.0,
            t_tilde: 0.0,
            evolution_time: 0.0,
            copies: 0,
            calibration_error: 0.0,
            program_td: 0.0,
            state_run: None,
            time_run: None,
        });
    }
    let search_pe = cfg.search_pe_bits.unwrap_or_else(|| default_search_pe_bits(n));
    let stab = stability_shift_with(u, n, cfg.search_bits, search_pe, &OracleBackend::exact(cfg.search_bits))?;
    let shift = stab.shift.map(|s| s.value()).unwrap_or(0.0);
    let us = shifted(u, shift);
    let gen = program_state_generator(&us, cfg.pe_bits)?;
    let time_bits = cfg.time_bits.unwrap_or(cfg.pe_bits as u32 + n as u32);
    let evo = estimate_evolution_time(&us, cfg.pe_bits, &OracleBackend::exact(time_bits))?;

    let probes = {
        let mut v = vec![tau.clone()];
        for x in 0..d {
            let mut e = CVec::zeros(d);
            e[x] = C64::new(1.0, 0.0);
            v.push(DensityMatrix::from_pure(&QuantumState::from_vec("A", e)?));
        }
        v
    };
    let (copies, calibration_error) = match cfg.copies {
        Some(k) => (k, 0.0),
        None => calibrate_copies(&gen.rho_tilde, evo.f, &probes, cfg.budget(), 50, 1 << 16)?,
    };

    let state_run = synthesize(gen.psi.clone(), cfg, prover)?;
    let g_state = QuantumState::basis(RegisterLayout::single("A", time_bits as usize), evo.g.numerator() as usize)?;
    let time_run = synthesize(g_state, cfg, prover)?;
    let accept = state_run.accept_probability.powi(copies as i32) * time_run.accept_probability;

    let (output, program_td) = match (&state_run.conditioned_output, &time_run.conditioned_output) {
        (Some(ps), Some(ts)) => {
            let gw = gen.psi.width();
            let program = ps.with_layout(RegisterLayout::new([("R", n), ("rest", gw - n)])?)?.partial_trace(&["rest"])?;
            let program = program.with_layout(RegisterLayout::single("A", n))?;
            let program_td = trace_distance_mat(program.matrix(), gen.rho_tilde.matrix());
            let mut out = CMat::zeros(d, d);
            for x in 0..ts.matrix().nrows() {
                let p = ts.matrix()[(x, x)].re;
                if p <= 1e-15 {
                    continue;
                }
                let f = (1u64 << n) as f64 * x as f64 / (1u64 << time_bits) as f64;
                out += lmr_apply(&tau, &program, f, copies)?.matrix() * C64::new(p, 0.0);
            }
            (Some(DensityMatrix::unnormalized(RegisterLayout::single("A", n), out)?), program_td)
        }
        _ => (None, f64::NAN),
    };
    let evolution_time = time_run
        .conditioned_output
        .as_ref()
        .map(|ts| {
            (0..ts.matrix().nrows()).map(|x| ts.matrix()[(x, x)].re * (1u64 << n) as f64 * x as f64 / (1u64 << time_bits) as f64).sum()
        })
        .unwrap_or(f64::NAN);
    Ok(UnitaryRunResult {
        accept_probability: accept,
        td_to_ideal: output.as_ref().map(|o| trace_distance_mat(o.matrix(), &ideal)),
        output,
        zero_time: false,
        shift,
        t_tilde: gen.t_tilde,
        evolution_time,
        copies,
        calibration_error,
        program_td,
        state_run: Some(state_run),
        time_run: Some(time_run),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::linalg::pauli_z;
    use crate::stateproto::{HonestProver, OrthogonalBProver};

    fn plus() -> QuantumState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        QuantumState::from_vec("A", CVec::from_vec(vec![C64::new(h, 0.0), C64::new(h, 0.0)])).unwrap()
    }

    #[test]
    fn identity_short_circuits() {
        let r = unitary_qip_apply(&CMat::identity(2, 2), &plus(), &UnitaryQipConfig::default(), &*honest_factory()).unwrap();
        assert!(r.zero_time);
        assert_eq!(r.accept_probability, 1.0);
        assert!(r.td_to_ideal.unwrap() < 1e-12);
    }

    #[test]
    fn honest_reflection_on_plus() {
        let r = unitary_qip_apply(&pauli_z(), &plus(), &UnitaryQipConfig::default(), &*honest_factory()).unwrap();
        assert!((r.accept_probability - 1.0).abs() < 1e-9);
        assert!((r.shift - 0.25).abs() < 1e-12);
        assert!((r.t_tilde - 1.0).abs() < 1e-9);
        assert!(r.calibration_error <= UnitaryQipConfig::default().budget());
        assert!(r.td_to_ideal.unwrap() <= 0.05);
    }

    #[test]
    fn corrupted_program_state_lowers_acceptance() {
        let cfg = UnitaryQipConfig { copies: Some(4), ..UnitaryQipConfig::default() };
        let factory: Box<ProverFactory> = Box::new(|t: &Target| {
            Ok(Box::new(OrthogonalBProver { base: HonestProver::new(t.approx.clone()), level: 1 }) as Box<dyn ProverStrategy>)
        });
        let r = unitary_qip_apply(&pauli_z(), &plus(), &cfg, &*factory).unwrap();
        assert!(r.accept_probability < 1.0 - 1e-3, "{}", r.accept_probability);
    }

    #[test]
    fn dimension_checked() {
        assert!(unitary_qip_apply(&CMat::identity(4, 4), &plus(), &UnitaryQipConfig::default(), &*honest_factory()).is_err());
    }
}
