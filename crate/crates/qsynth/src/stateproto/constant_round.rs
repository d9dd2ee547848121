//! The constant-round variant: the prover sends every intermediate stage up front and the
//! verifier checks a single randomly chosen grow step.

use super::config::{ProtocolConfig, RunMode};
use super::engine::SparseState;
use super::protocol::{
    LeafRecord, LemmaCheck, LemmaStatus, Machine, ProtocolTranscript, Regs, RejectCause, Resolve, RoundRecord, RunResult, Target,
};
use super::provers::{honest_prover, ProverRegs, ProverStrategy, RoundCtx};
use super::subverifier::SubVerifier;
use crate::error::{Error, Result};
use crate::qcore::linalg::{CMat, CVec, C64};
use crate::rng;
use rand::Rng;

/// The prover of the constant-round protocol: the first message and the interactive
/// strategy for the single checked round.
pub struct ConstantRoundProver {
    /// `r[j - 1]` is sent in `R_j`, `j = 1..=n`.
    pub r: Vec<CVec>,
    /// `s[j - 1]` is sent in `S_j`, `j = 1..=n`.
    pub s: Vec<CVec>,
    /// Sent in `S_{n+1}` (`n` qubits).
    pub s_final: CVec,
    pub qip: Box<dyn ProverStrategy>,
}

impl ConstantRoundProver {
    /// Every register holds the matching stage of the approximation.
    pub fn honest(target: &Target) -> Self {
        let a = &target.approx;
        let n = a.n;
        let stages: Vec<CVec> = (1..=n).map(|j| a.stage(j).clone()).collect();
        ConstantRoundProver {
            r: stages.clone(),
            s: stages,
            s_final: a.final_state.clone(),
            qip: Box::new(honest_prover(target.approx.clone())),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let ok = self.r.len() == n
            && self.s.len() == n
            && self.r.iter().zip(&self.s).enumerate().all(|(i, (r, s))| r.len() == 1 << (i + 1) && s.len() == 1 << (i + 1))
            && self.s_final.len() == 1 << n;
        if !ok {
            return Err(Error::ProverContract("first message has the wrong register widths".into()));
        }
        Ok(())
    }
}

struct Layout {
    r: Vec<Vec<u32>>,
    s: Vec<Vec<u32>>,
    s_final: Vec<u32>,
    grow: u32,
    regs: Regs,
}

fn allocate(n: usize, ell: u32, scratch: usize, private: usize) -> Result<Layout> {
    let mut next = 0u32;
    let mut take = |w: usize| -> Vec<u32> {
        let r = (next..next + w as u32).collect();
        next += w as u32;
        r
    };
    let r = (1..=n).map(&mut take).collect();
    let s = (1..=n).map(&mut take).collect();
    let s_final = take(n);
    let grow = take(1)[0];
    let xsend = take(n);
    let d = take(ell as usize + 1);
    let flag = take(1)[0];
    let scratch = take(scratch);
    let private = take(private);
    if next > 64 {
        return Err(Error::Config(format!("{next} live qubits exceed the 64-qubit engine word")));
    }
    Ok(Layout { r, s, s_final, grow, regs: Regs { a: vec![], b: vec![], xsend, d, flag, scratch, private } })
}

/// Run the constant-round protocol. Exact mode enumerates the `2n` choices of `(k, b)`.
pub fn constant_round_protocol(
    target: &Target,
    prover: &ConstantRoundProver,
    subv: &SubVerifier,
    cfg: &ProtocolConfig,
) -> Result<RunResult> {
    cfg.validate()?;
    let n = cfg.n;
    if n != target.n() {
        return Err(Error::Config(format!("config n = {n} but target has {} qubits", target.n())));
    }
    prover.validate(n)?;
    let qip = prover.qip.as_ref();
    let lay = allocate(n, cfg.ell, qip.scratch_width(n), qip.private_width())?;
    let pregs = ProverRegs {
        xsend: lay.regs.xsend.clone(),
        d: lay.regs.d.clone(),
        b: vec![],
        scratch: lay.regs.scratch.clone(),
        private: lay.regs.private.clone(),
    };
    let machine = Machine { regs: lay.regs.clone(), pregs, prover: qip, subv, n, ell: cfg.ell };
    if subv.table.n != n || subv.table.ell != cfg.ell {
        return Err(Error::Config("sub-verifier table does not match the protocol parameters".into()));
    }

    let mut init = SparseState::zero();
    for (q, v) in lay.r.iter().zip(&prover.r).chain(lay.s.iter().zip(&prover.s)) {
        init.prepare_fresh(q, v)?;
    }
    init.prepare_fresh(&lay.s_final, &prover.s_final)?;

    let play = |k: usize, b: bool, resolve: &mut Resolve| -> Result<(SparseState, ProtocolTranscript)> {
        let mut s = init.clone();
        let mut tr = ProtocolTranscript { b: vec![b], k_trace: vec![k], reject: None, rounds: vec![] };
        let mut rec = RoundRecord { b, k, flag_loss: 0.0, swap_loss: 0.0 };
        let (rk, sk) = (lay.r[k - 1].clone(), lay.s[k - 1].clone());
        let (l1, rej) = Machine::measure(&mut s, resolve, |st| st.project_swap(&rk, &sk, true));
        rec.swap_loss += l1;
        if rej {
            tr.reject = Some((0, RejectCause::SwapTest));
            tr.rounds.push(rec);
            return Ok((s, tr));
        }
        let ctx = RoundCtx { n, h: 0, k, ell: cfg.ell };
        machine.forward(&mut s, &rk, &ctx)?;
        if b {
            let (l, rej) = Machine::measure(&mut s, resolve, |st| machine.flag_keep(st));
            rec.flag_loss = l;
            if rej {
                tr.reject = Some((0, RejectCause::FlagMeasurement));
                tr.rounds.push(rec);
                return Ok((s, tr));
            }
            machine.grow_or_phase(&mut s, (k < n).then_some(lay.grow));
        }
        machine.backward(&mut s, &rk, &ctx)?;
        let (qa, qb) = match (b, k < n) {
            (false, _) => (rk.clone(), sk.clone()),
            (true, true) => {
                let mut a = rk.clone();
                a.push(lay.grow);
                (a, lay.s[k].clone())
            }
            (true, false) => (rk.clone(), lay.s_final.clone()),
        };
        let (l2, rej) = Machine::measure(&mut s, resolve, |st| st.project_swap(&qa, &qb, true));
        rec.swap_loss += l2;
        tr.rounds.push(rec);
        if rej {
            tr.reject = Some((0, RejectCause::SwapTest));
        }
        Ok((s, tr))
    };

    let leaf = |s: &SparseState, tr: ProtocolTranscript, weight: f64| -> (LeafRecord, CMat) {
        let rejected = tr.reject.is_some();
        let rho = if rejected { CMat::zeros(1 << n, 1 << n) } else { s.reduced_density(&lay.s_final) };
        let survival = if rejected { 0.0 } else { s.norm_sqr() };
        let record = LeafRecord {
            transcript: tr,
            survival,
            b_probability: weight,
            sum_u: 0.0,
            td_to_approx: None,
            lemma: LemmaCheck { lhs: 0.0, rhs: 0.0, holds: true, status: LemmaStatus::NotApplicable },
            output: None,
        };
        (record, rho * C64::new(weight, 0.0))
    };

    let mut leaves = Vec::new();
    let mut total = CMat::zeros(1 << n, 1 << n);
    match cfg.mode {
        RunMode::Exact => {
            let weight = 1.0 / (2 * n) as f64;
            for k in 1..=n {
                for b in [false, true] {
                    let (s, tr) = play(k, b, &mut Resolve::Project)?;
                    let (rec, rho) = leaf(&s, tr, weight);
                    leaves.push(rec);
                    total += rho;
                }
            }
        }
        RunMode::Trajectory { seed } => {
            let mut r = rng::stream(seed, &[rng::label("constant-round")]);
            let k = r.random_range(1..=n);
            let b = r.random::<bool>();
            let (s, tr) = play(k, b, &mut Resolve::Sample(&mut r))?;
            let (rec, rho) = leaf(&s, tr, 1.0);
            leaves.push(rec);
            total += rho;
        }
    }
    Ok(RunResult::from_leaves(leaves, total, None, n, Some(&target.state), Some(&target.approx.final_state)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::linalg::complete_unitary;
    use crate::qcore::QuantumState;

    fn target(v: &[f64]) -> Target {
        let st = QuantumState::from_vec("A", CVec::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0)))).unwrap();
        Target::exact(st, 10).unwrap()
    }

    fn orth(v: &CVec) -> CVec {
        complete_unitary(v).unwrap().column(1).into_owned()
    }

    #[test]
    fn honest_constant_round_outputs_approximation() {
        let t = target(&[0.6, 0.0, 0.0, 0.8]);
        let s = SubVerifier::coin_flip(t.table());
        let r = constant_round_protocol(&t, &ConstantRoundProver::honest(&t), &s, &ProtocolConfig::desk(2)).unwrap();
        assert!((r.accept_probability - 1.0).abs() < 1e-9);
        assert!(r.td_to_approx_target.unwrap() < 1e-8);
        assert_eq!(r.leaves.len(), 4);
    }

    #[test]
    fn orthogonal_first_message_rejected_with_half() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let t = target(&[h, h]);
        let s = SubVerifier::coin_flip(t.table());
        let mut p = ConstantRoundProver::honest(&t);
        p.s[0] = orth(&p.r[0]);
        let r = constant_round_protocol(&t, &p, &s, &ProtocolConfig::desk(1)).unwrap();
        let test_round = r.leaves.iter().find(|l| !l.transcript.b[0]).unwrap();
        assert!((test_round.survival - 0.5).abs() < 1e-9);
    }

    #[test]
    fn wrong_final_register_caught_in_last_grow() {
        let t = target(&[0.6, 0.0, 0.0, 0.8]);
        let s = SubVerifier::coin_flip(t.table());
        let mut p = ConstantRoundProver::honest(&t);
        p.s_final = orth(&t.approx.final_state);
        let r = constant_round_protocol(&t, &p, &s, &ProtocolConfig::desk(2)).unwrap();
        for l in &r.leaves {
            let expected = if l.transcript.k_trace[0] == 2 && l.transcript.b[0] { 0.5 } else { 1.0 };
            assert!((l.survival - expected).abs() < 1e-9, "{:?}", l.transcript);
        }
    }

    #[test]
    fn message_width_is_checked() {
        let t = target(&[0.6, 0.8]);
        let s = SubVerifier::coin_flip(t.table());
        let mut p = ConstantRoundProver::honest(&t);
        p.r.push(CVec::zeros(4));
        assert!(matches!(constant_round_protocol(&t, &p, &s, &ProtocolConfig::desk(1)), Err(Error::ProverContract(_))));
    }
}
