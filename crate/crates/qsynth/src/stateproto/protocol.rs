//! The interactive verifier with grow and test rounds, the single-register protocol,
//! trusted-oracle synthesis and amplification.

use super::approx::{OracleTable, TargetApproximation};
use super::config::{ProtocolConfig, RunMode};
use super::engine::{extract, SparseState};
use super::provers::{ProverIo, ProverRegs, ProverStrategy, RoundCtx};
use super::subverifier::SubVerifier;
use crate::error::{Error, Result};
use crate::primitives::{decode_phase, decode_probability, grow_rotation};
use crate::qcore::linalg::{turn, CMat, CVec, C64};
use crate::qcore::{trace_distance_mat, DensityMatrix, QuantumState, RegisterLayout};
use crate::rng;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Below this survival probability a branch's output is treated as undefined.
pub const UNDEFINED_OUTPUT_EPS: f64 = 1e-12;

/// A target state together with the approximation the honest parties use.
#[derive(Clone, Debug)]
pub struct Target {
    pub state: QuantumState,
    pub approx: Arc<TargetApproximation>,
}

impl Target {
    /// Exact oracle answers at precision `ell` (`m = ell`).
    pub fn exact(state: QuantumState, ell: u32) -> Result<Self> {
        let approx = super::approx::exact_approximation(&state, ell)?;
        Ok(Target { state, approx: Arc::new(approx) })
    }

    pub fn n(&self) -> usize {
        self.state.width()
    }

    pub fn table(&self) -> OracleTable {
        self.approx.table()
    }
}

/// Which measurement rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectCause {
    FlagMeasurement,
    SwapTest,
}

/// Per-round record. In exact mode the losses are absolute rejection probabilities given
/// the round-type string (`r_a = pi(a_{<h}) - pi(a)` split by cause); in trajectory mode
/// they are the conditional rejection probabilities at that point of the path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub b: bool,
    pub k: usize,
    pub flag_loss: f64,
    pub swap_loss: f64,
}

impl RoundRecord {
    pub fn loss(&self) -> f64 {
        self.flag_loss + self.swap_loss
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTranscript {
    pub b: Vec<bool>,
    /// Grow counter at the start of each round.
    pub k_trace: Vec<usize>,
    pub reject: Option<(usize, RejectCause)>,
    pub rounds: Vec<RoundRecord>,
}

impl ProtocolTranscript {
    pub fn hamming_weight(&self) -> usize {
        self.b.iter().filter(|&&x| x).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaStatus {
    Checked,
    /// The branch survives with probability zero, so its output is undefined.
    UndefinedOutput,
    /// Fewer than `n + 1` grow rounds: the inequality does not apply.
    NotApplicable,
}

/// `td(rho_d, psi~) <= 4 (t * sum_h u_{d<h})^(1/4)` for one terminal branch `d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub status: LemmaStatus,
}

/// One terminal branch of an exact enumeration.
#[derive(Clone, Debug)]
pub struct LeafRecord {
    pub transcript: ProtocolTranscript,
    /// Survival probability given the round types, `pi(d)`.
    pub survival: f64,
    /// `2^-|d|`.
    pub b_probability: f64,
    /// `sum_h u_{d<h}` along the path.
    pub sum_u: f64,
    /// Trace distance of the normalized branch output to `psi~`.
    pub td_to_approx: Option<f64>,
    pub lemma: LemmaCheck,
    /// Unnormalized output on `A` (kept on request).
    pub output: Option<DensityMatrix>,
}

/// Aggregate result of a protocol run.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub accept_probability: f64,
    /// Output on `A` conditioned on acceptance; `None` when acceptance is zero.
    pub conditioned_output: Option<DensityMatrix>,
    pub td_to_target: Option<f64>,
    pub td_to_approx_target: Option<f64>,
    /// `Pr[hw(b) <= n]` over round-type strings (exact mode).
    pub low_weight_probability: f64,
    /// Conditioned output restricted to branches with `hw(b) >= n + 1`, distance to `psi~`.
    pub td_high_weight_to_approx: Option<f64>,
    pub leaves: Vec<LeafRecord>,
}

impl RunResult {
    pub fn transcripts(&self) -> impl Iterator<Item = &ProtocolTranscript> {
        self.leaves.iter().map(|l| &l.transcript)
    }

    /// Build the aggregate from branches, conditioning on acceptance.
    pub fn from_leaves(
        leaves: Vec<LeafRecord>,
        unnormalized: CMat,
        high_weight: Option<CMat>,
        n: usize,
        target: Option<&QuantumState>,
        approx: Option<&CVec>,
    ) -> Self {
        let accept: f64 = leaves.iter().map(|l| l.b_probability * l.survival).sum();
        let low: f64 = leaves.iter().filter(|l| l.transcript.hamming_weight() <= n).map(|l| l.b_probability).sum();
        let layout = RegisterLayout::single("A", n);
        let conditioned = (accept > UNDEFINED_OUTPUT_EPS)
            .then(|| DensityMatrix::unnormalized(layout.clone(), unnormalized * C64::new(1.0 / accept, 0.0)).expect("A-sized"));
        let td = |rho: &CMat, v: &CVec| trace_distance_mat(rho, &(v * v.adjoint()));
        let td_to_target = conditioned.as_ref().zip(target).map(|(c, t)| td(c.matrix(), t.amplitudes()));
        let td_to_approx_target = conditioned.as_ref().zip(approx).map(|(c, a)| td(c.matrix(), a));
        let td_high = high_weight.zip(approx).and_then(|(m, a)| {
            let tr = m.trace().re;
            (tr > UNDEFINED_OUTPUT_EPS).then(|| td(&(m * C64::new(1.0 / tr, 0.0)), a))
        });
        RunResult {
            accept_probability: accept,
            conditioned_output: conditioned,
            td_to_target,
            td_to_approx_target,
            low_weight_probability: low,
            td_high_weight_to_approx: td_high,
            leaves,
        }
    }

    /// Worst Lemma check over checked branches (`None` if nothing was checked).
    pub fn worst_lemma(&self) -> Option<LemmaCheck> {
        self.leaves
            .iter()
            .map(|l| l.lemma)
            .filter(|c| c.status == LemmaStatus::Checked)
            .max_by(|a, b| (a.lhs - a.rhs).partial_cmp(&(b.lhs - b.rhs)).unwrap())
    }
}

/// Summary of [`check_soundness_bound`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoundnessReport {
    pub checked: usize,
    pub undefined: usize,
    pub violations: usize,
    /// Largest `lhs - rhs` over checked branches.
    pub worst_margin: f64,
    pub holds: bool,
}

/// Evaluate the per-branch inequality on every branch with at least `n + 1` grow rounds.
pub fn check_soundness_bound(run: &RunResult) -> SoundnessReport {
    let mut r = SoundnessReport { checked: 0, undefined: 0, violations: 0, worst_margin: f64::NEG_INFINITY, holds: true };
    for l in &run.leaves {
        match l.lemma.status {
            LemmaStatus::Checked => {
                r.checked += 1;
                r.worst_margin = r.worst_margin.max(l.lemma.lhs - l.lemma.rhs);
                if !l.lemma.holds {
                    r.violations += 1;
                    r.holds = false;
                }
            }
            LemmaStatus::UndefinedOutput => r.undefined += 1,
            LemmaStatus::NotApplicable => {}
        }
    }
    r
}

/// Callback receiving a terminal branch and its unnormalized output on `A`.
pub type LeafVisitor<'a> = dyn Fn(&LeafRecord, &CMat) + Sync + 'a;

/// Options for exact enumeration.
#[derive(Clone, Copy, Default)]
pub struct RunOptions<'a> {
    pub keep_leaf_outputs: bool,
    /// Called once per terminal branch with the unnormalized output on `A`.
    pub visitor: Option<&'a LeafVisitor<'a>>,
}

/// Qubit positions of every verifier and prover register.
#[derive(Clone, Debug)]
pub(crate) struct Regs {
    pub a: Vec<u32>,
    pub b: Vec<u32>,
    pub xsend: Vec<u32>,
    pub d: Vec<u32>,
    pub flag: u32,
    pub scratch: Vec<u32>,
    pub private: Vec<u32>,
}

impl Regs {
    pub fn allocate(n: usize, ell: u32, scratch: usize, private: usize) -> Result<Self> {
        let mut next = 0u32;
        let mut take = |w: usize| -> Vec<u32> {
            let r = (next..next + w as u32).collect();
            next += w as u32;
            r
        };
        let a = take(n);
        let b = take(n);
        let xsend = take(n);
        let d = take(ell as usize + 1);
        let flag = take(1)[0];
        let scratch = take(scratch);
        let private = take(private);
        if next > 64 {
            return Err(Error::Config(format!("{next} live qubits exceed the 64-qubit engine word")));
        }
        Ok(Regs { a, b, xsend, d, flag, scratch, private })
    }

    pub fn prover_regs(&self) -> ProverRegs {
        ProverRegs {
            xsend: self.xsend.clone(),
            d: self.d.clone(),
            b: self.b.clone(),
            scratch: self.scratch.clone(),
            private: self.private.clone(),
        }
    }

    fn qip_view(&self) -> Vec<u32> {
        let mut v = self.xsend.clone();
        v.extend(&self.d);
        v.extend(&self.scratch);
        v.extend(&self.private);
        v
    }

    fn grow_view(&self, len: usize) -> Vec<u32> {
        let mut v = self.b[..len].to_vec();
        v.extend(&self.scratch);
        v.extend(&self.private);
        v
    }
}

/// Shared round mechanics for the verifier variants.
pub(crate) struct Machine<'a> {
    pub regs: Regs,
    pub pregs: ProverRegs,
    pub prover: &'a dyn ProverStrategy,
    pub subv: &'a SubVerifier,
    pub n: usize,
    pub ell: u32,
}

/// How measurements are resolved.
pub(crate) enum Resolve<'r> {
    /// Keep the accepting projection without renormalizing.
    Project,
    /// Sample an outcome and renormalize.
    Sample(&'r mut ChaCha20Rng),
}

impl<'a> Machine<'a> {
    pub fn new(prover: &'a dyn ProverStrategy, subv: &'a SubVerifier, n: usize, ell: u32) -> Result<Self> {
        if subv.table.n != n || subv.table.ell != ell {
            return Err(Error::Config(format!(
                "sub-verifier table is for n = {}, ell = {}; protocol uses n = {n}, ell = {ell}",
                subv.table.n, subv.table.ell
            )));
        }
        let regs = Regs::allocate(n, ell, prover.scratch_width(n), prover.private_width())?;
        let pregs = regs.prover_regs();
        Ok(Machine { regs, pregs, prover, subv, n, ell })
    }

    fn flag_step(&self, s: &mut SparseState, prefix: &[u32], len: usize, inverse: bool) {
        let d = self.regs.d.clone();
        let p = prefix.to_vec();
        s.apply_local(&[self.regs.flag], |w| Some(self.subv.flag_unitary(len, extract(w, &p), extract(w, &d), inverse)));
    }

    /// Copy the prefix out, let the prover answer, run the sub-verifier.
    pub fn forward(&self, s: &mut SparseState, prefix: &[u32], ctx: &RoundCtx) -> Result<()> {
        let k = prefix.len();
        s.xor_into(prefix, &self.regs.xsend[..k], |v| v);
        let view = self.regs.qip_view();
        self.prover.forward(&mut ProverIo::new(s, &view, &self.pregs), ctx)?;
        self.flag_step(s, prefix, k, false);
        Ok(())
    }

    pub fn backward(&self, s: &mut SparseState, prefix: &[u32], ctx: &RoundCtx) -> Result<()> {
        let k = prefix.len();
        self.flag_step(s, prefix, k, true);
        let view = self.regs.qip_view();
        self.prover.backward(&mut ProverIo::new(s, &view, &self.pregs), ctx)?;
        s.xor_into(prefix, &self.regs.xsend[..k], |v| v);
        Ok(())
    }

    /// Grow `target` (when `Some`) or apply the phase encoded in `D`.
    pub fn grow_or_phase(&self, s: &mut SparseState, target: Option<u32>) {
        let d = self.regs.d.clone();
        let ell = self.ell;
        match target {
            Some(q) => s.apply_local(&[q], |w| Some(grow_rotation(decode_probability(extract(w, &d), ell)))),
            None => s.phase(|w| turn(decode_phase(extract(w, &d), ell))),
        }
    }

    pub fn b_grow(&self, s: &mut SparseState, ctx: &RoundCtx) -> Result<()> {
        let view = self.regs.grow_view(ctx.grow_len());
        self.prover.b_grow(&mut ProverIo::new(s, &view, &self.pregs), ctx)
    }

    /// Measure; returns the (absolute or conditional) rejection probability and whether the
    /// sampled outcome rejected.
    pub fn measure(s: &mut SparseState, resolve: &mut Resolve, project: impl FnOnce(&mut SparseState)) -> (f64, bool) {
        let before = s.norm_sqr();
        let mut kept = s.clone();
        project(&mut kept);
        let after = kept.norm_sqr();
        match resolve {
            Resolve::Project => {
                *s = kept;
                ((before - after).max(0.0), false)
            }
            Resolve::Sample(r) => {
                let keep_p = if before > 0.0 { (after / before).clamp(0.0, 1.0) } else { 0.0 };
                if r.random::<f64>() < keep_p {
                    kept.scale(1.0 / after.sqrt());
                    *s = kept;
                    (1.0 - keep_p, false)
                } else {
                    (1.0 - keep_p, true)
                }
            }
        }
    }

    pub fn flag_keep(&self, s: &mut SparseState) {
        let f = self.regs.flag;
        s.partition(|w| w >> f & 1 == 1);
    }

    pub fn end_round(&self, s: &mut SparseState) {
        let mut gone = self.regs.xsend.clone();
        gone.extend(&self.regs.d);
        gone.push(self.regs.flag);
        gone.extend(&self.regs.scratch);
        s.retire(&gone);
        s.compress();
    }

    /// One round of the two-register protocol.
    pub fn play_round(
        &self,
        s: &mut SparseState,
        k: usize,
        h: usize,
        b: bool,
        resolve: &mut Resolve,
    ) -> Result<(RoundRecord, Option<RejectCause>)> {
        let n = self.n;
        let ctx = RoundCtx { n, h, k, ell: self.ell };
        let prefix = self.regs.a[..k].to_vec();
        let mut rec = RoundRecord { b, k, flag_loss: 0.0, swap_loss: 0.0 };
        self.forward(s, &prefix, &ctx)?;
        if b {
            let (loss, rejected) = Self::measure(s, resolve, |st| self.flag_keep(st));
            rec.flag_loss = loss;
            if rejected {
                return Ok((rec, Some(RejectCause::FlagMeasurement)));
            }
            self.grow_or_phase(s, (k < n).then(|| self.regs.a[k]));
        }
        self.backward(s, &prefix, &ctx)?;
        if b {
            self.b_grow(s, &ctx)?;
        }
        let len = (k + b as usize).min(n);
        let (qa, qb) = (self.regs.a[..len].to_vec(), self.regs.b[..len].to_vec());
        let (loss, rejected) = Self::measure(s, resolve, |st| st.project_swap(&qa, &qb, true));
        rec.swap_loss = loss;
        if rejected {
            return Ok((rec, Some(RejectCause::SwapTest)));
        }
        self.end_round(s);
        Ok((rec, None))
    }
}

struct Explorer<'a> {
    machine: Machine<'a>,
    n: usize,
    t: usize,
    approx: CVec,
    opts: RunOptions<'a>,
}

struct Branch {
    leaves: Vec<LeafRecord>,
    output: CMat,
    high: CMat,
}

impl<'a> Explorer<'a> {
    fn leaf(&self, s: &SparseState, transcript: ProtocolTranscript, sum_u: f64) -> Branch {
        let rho = s.reduced_density(&self.machine.regs.a);
        let survival = s.norm_sqr();
        let len = transcript.b.len();
        let bp = 0.5f64.powi(len as i32);
        let hw = transcript.hamming_weight();
        let td = (survival > UNDEFINED_OUTPUT_EPS)
            .then(|| trace_distance_mat(&(&rho * C64::new(1.0 / survival, 0.0)), &(&self.approx * self.approx.adjoint())));
        let lemma = if hw < self.n + 1 {
            LemmaCheck { lhs: 0.0, rhs: 0.0, holds: true, status: LemmaStatus::NotApplicable }
        } else {
            let rhs = 4.0 * (self.t as f64 * sum_u).max(0.0).powf(0.25);
            match td {
                Some(lhs) => LemmaCheck { lhs, rhs, holds: lhs <= rhs + 1e-9, status: LemmaStatus::Checked },
                None => LemmaCheck { lhs: 0.0, rhs, holds: true, status: LemmaStatus::UndefinedOutput },
            }
        };
        let record = LeafRecord {
            transcript,
            survival,
            b_probability: bp,
            sum_u,
            td_to_approx: td,
            lemma,
            output: self
                .opts
                .keep_leaf_outputs
                .then(|| DensityMatrix::unnormalized(RegisterLayout::single("A", self.n), rho.clone()).expect("A-sized")),
        };
        if let Some(v) = self.opts.visitor {
            v(&record, &rho);
        }
        let weighted = &rho * C64::new(bp, 0.0);
        let high = if hw > self.n { weighted.clone() } else { CMat::zeros(rho.nrows(), rho.ncols()) };
        Branch { leaves: vec![record], output: weighted, high }
    }

    fn explore(&self, s: SparseState, k: usize, transcript: ProtocolTranscript, sum_u: f64) -> Result<Branch> {
        let h = transcript.b.len();
        if k == self.n + 1 || h == self.t {
            return Ok(self.leaf(&s, transcript, sum_u));
        }
        let child = |b: bool| -> Result<(SparseState, RoundRecord)> {
            let mut st = s.clone();
            let (rec, _) = self.machine.play_round(&mut st, k, h, b, &mut Resolve::Project)?;
            Ok((st, rec))
        };
        let (s0, r0) = child(false)?;
        let (s1, r1) = child(true)?;
        let u = r0.loss() + r1.loss();
        let extend = |rec: RoundRecord, b: bool| {
            let mut t = transcript.clone();
            t.b.push(b);
            t.k_trace.push(k);
            t.rounds.push(rec);
            t
        };
        let (t0, t1) = (extend(r0, false), extend(r1, true));
        let (left, right) = if h < 4 {
            rayon::join(|| self.explore(s0, k, t0, sum_u + u), || self.explore(s1, k + 1, t1, sum_u + u))
        } else {
            (self.explore(s0, k, t0, sum_u + u), self.explore(s1, k + 1, t1, sum_u + u))
        };
        let (mut left, right) = (left?, right?);
        left.leaves.extend(right.leaves);
        left.output += right.output;
        left.high += right.high;
        Ok(left)
    }
}

/// Run the two-register protocol with default options.
pub fn run_protocol(target: &Target, prover: &dyn ProverStrategy, subv: &SubVerifier, cfg: &ProtocolConfig) -> Result<RunResult> {
    run_protocol_with(target, prover, subv, cfg, RunOptions::default())
}

/// Run the two-register protocol (exact enumeration or one sampled trajectory).
pub fn run_protocol_with(
    target: &Target,
    prover: &dyn ProverStrategy,
    subv: &SubVerifier,
    cfg: &ProtocolConfig,
    opts: RunOptions,
) -> Result<RunResult> {
    cfg.validate()?;
    if cfg.n != target.n() {
        return Err(Error::Config(format!("config n = {} but target has {} qubits", cfg.n, target.n())));
    }
    let machine = Machine::new(prover, subv, cfg.n, cfg.ell)?;
    let approx = target.approx.final_state.clone();
    match cfg.mode {
        RunMode::Exact => {
            let ex = Explorer { machine, n: cfg.n, t: cfg.t, approx: approx.clone(), opts };
            let br = ex.explore(SparseState::zero(), 0, ProtocolTranscript::default(), 0.0)?;
            Ok(RunResult::from_leaves(br.leaves, br.output, Some(br.high), cfg.n, Some(&target.state), Some(&approx)))
        }
        RunMode::Trajectory { seed } => {
            let mut r = rng::stream(seed, &[rng::label("trajectory")]);
            let mut s = SparseState::zero();
            let mut k = 0;
            let mut tr = ProtocolTranscript::default();
            for h in 0..cfg.t {
                if k == cfg.n + 1 {
                    break;
                }
                let b = r.random::<bool>();
                let (rec, rej) = machine.play_round(&mut s, k, h, b, &mut Resolve::Sample(&mut r))?;
                tr.b.push(b);
                tr.k_trace.push(k);
                tr.rounds.push(rec);
                if let Some(cause) = rej {
                    tr.reject = Some((h, cause));
                    break;
                }
                k += b as usize;
            }
            Ok(trajectory_result(&machine.regs.a, &s, tr, cfg.n, &target.state, &approx))
        }
    }
}

fn trajectory_result(a: &[u32], s: &SparseState, tr: ProtocolTranscript, n: usize, target: &QuantumState, approx: &CVec) -> RunResult {
    let accepted = tr.reject.is_none();
    let rho = if accepted { s.reduced_density(a) } else { CMat::zeros(1 << n, 1 << n) };
    let leaf = LeafRecord {
        transcript: tr,
        survival: if accepted { 1.0 } else { 0.0 },
        b_probability: 1.0,
        sum_u: 0.0,
        td_to_approx: None,
        lemma: LemmaCheck { lhs: 0.0, rhs: 0.0, holds: true, status: LemmaStatus::NotApplicable },
        output: None,
    };
    RunResult::from_leaves(vec![leaf], rho, None, n, Some(target), Some(approx))
}

/// The single-register protocol: for `k = 0..=n` run forward, measure the flag, grow (or
/// apply the phase), run backward. No second copy and no swap test.
pub fn flawed_protocol(target: &Target, prover: &dyn ProverStrategy, subv: &SubVerifier, cfg: &ProtocolConfig) -> Result<RunResult> {
    cfg.validate()?;
    let n = cfg.n;
    let machine = Machine::new(prover, subv, n, cfg.ell)?;
    let mut s = SparseState::zero();
    let mut tr = ProtocolTranscript::default();
    let mut sampler = match cfg.mode {
        RunMode::Exact => None,
        RunMode::Trajectory { seed } => Some(rng::stream(seed, &[rng::label("flawed")])),
    };
    for k in 0..=n {
        let ctx = RoundCtx { n, h: k, k, ell: cfg.ell };
        let prefix = machine.regs.a[..k].to_vec();
        machine.forward(&mut s, &prefix, &ctx)?;
        let mut resolve = match sampler.as_mut() {
            None => Resolve::Project,
            Some(r) => Resolve::Sample(r),
        };
        let (loss, rejected) = Machine::measure(&mut s, &mut resolve, |st| machine.flag_keep(st));
        tr.b.push(true);
        tr.k_trace.push(k);
        tr.rounds.push(RoundRecord { b: true, k, flag_loss: loss, swap_loss: 0.0 });
        if rejected {
            tr.reject = Some((k, RejectCause::FlagMeasurement));
            break;
        }
        machine.grow_or_phase(&mut s, (k < n).then(|| machine.regs.a[k]));
        machine.backward(&mut s, &prefix, &ctx)?;
        machine.end_round(&mut s);
    }
    let approx = target.approx.final_state.clone();
    if sampler.is_some() {
        return Ok(trajectory_result(&machine.regs.a, &s, tr, n, &target.state, &approx));
    }
    let rho = s.reduced_density(&machine.regs.a);
    let survival = s.norm_sqr();
    let leaf = LeafRecord {
        transcript: tr,
        survival,
        b_probability: 1.0,
        sum_u: 0.0,
        td_to_approx: None,
        lemma: LemmaCheck { lhs: 0.0, rhs: 0.0, holds: true, status: LemmaStatus::NotApplicable },
        output: None,
    };
    Ok(RunResult::from_leaves(vec![leaf], rho, None, n, Some(&target.state), Some(&approx)))
}

/// Result of [`trusted_oracle_synthesis`].
#[derive(Clone, Debug)]
pub struct TrustedSynthesis {
    pub state: QuantumState,
    /// Whether the answer register ended in `|0...0>` on every branch.
    pub d_clean: bool,
}

/// Query, grow (or phase), uncompute, for `k = 0..=n`, with a trusted oracle table.
pub fn trusted_oracle_synthesis(table: &OracleTable) -> Result<TrustedSynthesis> {
    let n = table.n;
    let a: Vec<u32> = (0..n as u32).collect();
    let d: Vec<u32> = (n as u32..n as u32 + table.ell + 1).collect();
    let mut s = SparseState::zero();
    for k in 0..=n {
        let prefix = a[..k].to_vec();
        s.xor_into(&prefix, &d, |x| table.value(k, x));
        let dd = d.clone();
        let ell = table.ell;
        if k < n {
            s.apply_local(&[a[k]], |w| Some(grow_rotation(decode_probability(extract(w, &dd), ell))));
        } else {
            s.phase(|w| turn(decode_phase(extract(w, &dd), ell)));
        }
        s.xor_into(&prefix, &d, |x| table.value(k, x));
    }
    let d_clean = s.all_zero(&d);
    let rho = s.reduced_density(&a);
    // The output is pure; read it off the dominant eigenvector of the reduced state.
    let (vals, vecs) = crate::qcore::linalg::hermitian_eig(&rho);
    let top = vecs.column(vals.len() - 1).into_owned();
    let phase = top.iter().find(|c| c.norm() > 1e-9).map(|c| c.conj() / c.norm()).unwrap_or(C64::new(1.0, 0.0));
    let amps = top * phase;
    let state = QuantumState::new(RegisterLayout::single("A", n), amps)?;
    Ok(TrustedSynthesis { state, d_clean })
}

/// Run `instances` independent instances; accept iff all accept, output a uniformly
/// random instance's output. `run_instance(j)` runs instance `j`.
pub fn amplify(instances: usize, run_instance: impl Fn(usize) -> Result<RunResult> + Sync + Send) -> Result<RunResult> {
    if instances == 0 {
        return Err(Error::InvalidArgument("instances must be at least 1".into()));
    }
    let runs: Vec<RunResult> = (0..instances).into_par_iter().map(&run_instance).collect::<Result<_>>()?;
    if instances == 1 {
        return Ok(runs.into_iter().next().expect("one run"));
    }
    let accept: f64 = runs.iter().map(|r| r.accept_probability).product();
    let outputs: Vec<&DensityMatrix> = runs.iter().filter_map(|r| r.conditioned_output.as_ref()).collect();
    let conditioned = (accept > UNDEFINED_OUTPUT_EPS && outputs.len() == instances).then(|| {
        let mut m = outputs[0].matrix() * C64::new(0.0, 0.0);
        for o in &outputs {
            m += o.matrix() * C64::new(1.0 / instances as f64, 0.0);
        }
        DensityMatrix::unnormalized(outputs[0].layout().clone(), m).expect("same layout")
    });
    let leaves = runs.iter().flat_map(|r| r.leaves.iter().cloned()).collect();
    Ok(RunResult {
        accept_probability: accept,
        conditioned_output: conditioned,
        td_to_target: None,
        td_to_approx_target: None,
        low_weight_probability: runs.iter().map(|r| r.low_weight_probability).fold(0.0, f64::max),
        td_high_weight_to_approx: None,
        leaves,
    })
}

/// Amplified two-register protocol; prover `j % provers.len()` plays instance `j`.
pub fn amplified_protocol(
    target: &Target,
    provers: &[Box<dyn ProverStrategy>],
    subv: &SubVerifier,
    cfg: &ProtocolConfig,
    instances: usize,
) -> Result<RunResult> {
    if provers.is_empty() {
        return Err(Error::InvalidArgument("need at least one prover".into()));
    }
    let mut r = amplify(instances, |j| {
        let mut c = *cfg;
        if let RunMode::Trajectory { seed } = c.mode {
            c.mode = RunMode::Trajectory { seed: rng::derive_seed(seed, &[j as u64]) };
        }
        run_protocol(target, provers[j % provers.len()].as_ref(), subv, &c)
    })?;
    attach_distances(&mut r, target);
    Ok(r)
}

/// Fill in the distances of a conditioned output to the target and its approximation.
pub fn attach_distances(r: &mut RunResult, target: &Target) {
    if let Some(c) = &r.conditioned_output {
        let v = target.state.amplitudes();
        let a = &target.approx.final_state;
        r.td_to_target = Some(trace_distance_mat(c.matrix(), &(v * v.adjoint())));
        r.td_to_approx_target = Some(trace_distance_mat(c.matrix(), &(a * a.adjoint())));
    }
}

#[cfg(test)]
mod tests {
    use super::super::provers::*;
    use super::*;
    use std::collections::BTreeMap;

    fn real_state(v: &[f64]) -> QuantumState {
        QuantumState::from_vec("A", CVec::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0)))).unwrap()
    }

    fn setup(v: &[f64]) -> (Target, SubVerifier, ProtocolConfig) {
        let target = Target::exact(real_state(v), 10).unwrap();
        let subv = SubVerifier::coin_flip(target.table());
        let cfg = ProtocolConfig::desk(target.n());
        (target, subv, cfg)
    }

    fn honest(t: &Target) -> Box<dyn ProverStrategy> {
        Box::new(honest_prover(t.approx.clone()))
    }

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn honest_ghz_accepts_and_high_weight_output_is_exact() {
        let (t, s, c) = setup(&[H, 0.0, 0.0, H]);
        let r = run_protocol(&t, honest(&t).as_ref(), &s, &c).unwrap();
        assert!((r.accept_probability - 1.0).abs() < 1e-9);
        assert!(r.td_high_weight_to_approx.unwrap() < 1e-8);
        let rhs = r.low_weight_probability + t.approx.td_to_target.unwrap() + 1e-8;
        assert!(r.td_to_target.unwrap() <= rhs);
        let sb = check_soundness_bound(&r);
        assert!(sb.holds && sb.worst_margin <= 1e-9);
    }

    #[test]
    fn orthogonal_b_rejected_with_half() {
        let (t, s, c) = setup(&[H, H]);
        let p = OrthogonalBProver { base: honest_prover(t.approx.clone()), level: 0 };
        let r = run_protocol(&t, &p, &s, &c).unwrap();
        let first_grow = r.leaves.iter().find(|l| l.transcript.b[0]).unwrap();
        assert!((first_grow.transcript.rounds[0].swap_loss - 0.5).abs() < 1e-12);
        assert!(check_soundness_bound(&r).holds);
    }

    #[test]
    fn phase_attack_fools_flawed_but_not_full_protocol() {
        let (t, s, c) = setup(&[H, H]);
        let phases = vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)];
        let p = phase_attack_prover(honest(&t), phases, 1).unwrap();
        let f = flawed_protocol(&t, &p, &s, &c).unwrap();
        assert!((f.accept_probability - 1.0).abs() < 1e-9);
        assert!((f.td_to_target.unwrap() - 1.0).abs() < 1e-6);
        let r = run_protocol(&t, &p, &s, &c).unwrap();
        assert!(r.accept_probability < 0.95);
        assert!(check_soundness_bound(&r).holds);
    }

    #[test]
    fn trivial_phase_attack_matches_base() {
        let (t, s, c) = setup(&[0.6, 0.0, 0.0, 0.8]);
        let p = phase_attack_prover(honest(&t), vec![C64::new(1.0, 0.0); 4], 2).unwrap();
        let a = run_protocol(&t, &p, &s, &c).unwrap();
        let b = run_protocol(&t, honest(&t).as_ref(), &s, &c).unwrap();
        assert!((a.accept_probability - b.accept_probability).abs() < 1e-12);
        assert!((a.td_to_target.unwrap() - b.td_to_target.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn entanglement_attack_dephases_flawed_output() {
        let (t, s, c) = setup(&[H, H]);
        let p = entanglement_attack_prover(honest(&t), vec![1]);
        let f = flawed_protocol(&t, &p, &s, &c).unwrap();
        assert!((f.accept_probability - 1.0).abs() < 1e-9);
        let out = f.conditioned_output.unwrap();
        let half = CMat::identity(2, 2) * C64::new(0.5, 0.0);
        assert!(trace_distance_mat(out.matrix(), &half) < 1e-9);
        assert!(run_protocol(&t, &p, &s, &c).unwrap().accept_probability < 1.0);
        let idle = entanglement_attack_prover(honest(&t), vec![]);
        assert!((run_protocol(&t, &idle, &s, &c).unwrap().accept_probability - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lying_prover_cases() {
        let (t, s, c) = setup(&[1.0, 0.0, 0.0, 0.0]);
        // Prefix "1" has probability zero, so a lie there is invisible.
        let hidden = lying_prover(t.approx.clone(), BTreeMap::from([((1, 1), 0)]));
        assert!((run_protocol(&t, &hidden, &s, &c).unwrap().accept_probability - 1.0).abs() < 1e-9);
        let truthful = lying_prover(t.approx.clone(), BTreeMap::from([((0, 0), t.table().value(0, 0))]));
        assert!((run_protocol(&t, &truthful, &s, &c).unwrap().accept_probability - 1.0).abs() < 1e-9);
        let liar = lying_prover(t.approx.clone(), BTreeMap::from([((0, 0), 3)]));
        let r = run_protocol(&t, &liar, &s, &c).unwrap();
        let grow = r.leaves.iter().find(|l| l.transcript.b[0]).unwrap();
        assert!(grow.transcript.rounds[0].flag_loss >= 0.5 - 1e-9);
        assert!(check_soundness_bound(&r).holds);
    }

    #[test]
    fn rogue_prover_breaks_contract() {
        let (t, s, c) = setup(&[H, H]);
        assert!(matches!(run_protocol(&t, &RogueProver, &s, &c), Err(Error::ProverContract(_))));
    }

    #[test]
    fn perfect_lie_detector_gives_undefined_outputs() {
        let (t, _, c) = setup(&[H, H]);
        let s0 = SubVerifier::tunable(t.table(), 0.0).unwrap();
        let liar = lying_prover(t.approx.clone(), BTreeMap::from([((0, 0), 3)]));
        let r = run_protocol(&t, &liar, &s0, &c).unwrap();
        let rep = check_soundness_bound(&r);
        assert!(rep.undefined > 0 && rep.checked == 0 && rep.holds);
    }

    #[test]
    fn trusted_synthesis_examples() {
        let z = trusted_oracle_synthesis(&Target::exact(real_state(&[1.0, 0.0, 0.0, 0.0]), 10).unwrap().table()).unwrap();
        assert!(z.d_clean && (z.state.amplitudes()[0].re - 1.0).abs() < 1e-12);
        let ghz = real_state(&[H, 0.0, 0.0, H]);
        let g = trusted_oracle_synthesis(&Target::exact(ghz.clone(), 10).unwrap().table()).unwrap();
        assert!(g.d_clean);
        assert!(1.0 - g.state.inner(&ghz).unwrap().norm_sqr() < 1e-5);
    }

    #[test]
    fn amplification_is_a_product() {
        let (t, s, c) = setup(&[H, H]);
        let p = OrthogonalBProver { base: honest_prover(t.approx.clone()), level: 0 };
        let single = run_protocol(&t, &p, &s, &c).unwrap().accept_probability;
        let provers: Vec<Box<dyn ProverStrategy>> =
            vec![Box::new(OrthogonalBProver { base: honest_prover(t.approx.clone()), level: 0 }), honest(&t)];
        let r = amplified_protocol(&t, &provers, &s, &c, 3).unwrap();
        assert!((r.accept_probability - single * single).abs() < 1e-9);
        let one = amplified_protocol(&t, &provers[1..], &s, &c, 1).unwrap();
        assert!((one.accept_probability - 1.0).abs() < 1e-9);
    }

    #[test]
    fn honest_forward_backward_is_identity() {
        let (t, s, _) = setup(&[0.6, 0.0, 0.0, 0.8]);
        let p = honest_prover(t.approx.clone());
        let m = Machine::new(&p, &s, 2, 10).unwrap();
        let mut st = SparseState::zero();
        let v = CVec::from_vec(vec![C64::new(0.5, 0.0), C64::new(0.0, 0.5), C64::new(-0.5, 0.0), C64::new(0.5, 0.0)]);
        st.prepare_fresh(&m.regs.a, &v).unwrap();
        let before = st.clone();
        for k in 0..=2 {
            let ctx = RoundCtx { n: 2, h: 0, k, ell: 10 };
            let prefix = m.regs.a[..k].to_vec();
            m.forward(&mut st, &prefix, &ctx).unwrap();
            m.backward(&mut st, &prefix, &ctx).unwrap();
            let ov: f64 = before.overlap(&st).norm();
            assert!((ov - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn trajectory_mode_is_deterministic() {
        let (t, s, c) = setup(&[H, H]);
        let p = phase_attack_prover(honest(&t), vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)], 1).unwrap();
        let c = c.with_mode(RunMode::Trajectory { seed: 5 });
        let a = run_protocol(&t, &p, &s, &c).unwrap();
        let b = run_protocol(&t, &p, &s, &c).unwrap();
        assert_eq!(a.leaves[0].transcript, b.leaves[0].transcript);
        assert!(a.accept_probability == 0.0 || a.accept_probability == 1.0);
    }
}

#[cfg(test)]
mod proptests {
    use super::super::provers::honest_prover;
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn honest_prover_is_always_accepted(v in prop::collection::vec(-1.0f64..1.0, 8), n in 1usize..=2) {
            let d = 1 << n;
            let amps: Vec<C64> = (0..d).map(|i| C64::new(v[2 * i], v[2 * i + 1])).collect();
            let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            prop_assume!(norm > 1e-3);
            let st = QuantumState::from_vec("A", CVec::from_iterator(d, amps.iter().map(|a| a / norm))).unwrap();
            let t = Target::exact(st, 10).unwrap();
            let s = SubVerifier::coin_flip(t.table());
            let r = run_protocol(&t, &honest_prover(t.approx.clone()), &s, &ProtocolConfig::desk(n)).unwrap();
            prop_assert!((r.accept_probability - 1.0).abs() < 1e-9);
            prop_assert!(r.td_high_weight_to_approx.unwrap() < 1e-8);
            prop_assert!(check_soundness_bound(&r).holds);
        }

        #[test]
        fn accepted_swap_branches_are_symmetric(v in prop::collection::vec(-1.0f64..1.0, 16)) {
            let mut s = SparseState::zero();
            let amps = CVec::from_iterator(16, (0..16).map(|i| C64::new(v[i], 0.0)));
            let norm = amps.norm();
            prop_assume!(norm > 1e-3);
            s.prepare_fresh(&[0, 1, 2, 3], &(amps / C64::new(norm, 0.0))).unwrap();
            s.project_swap(&[0, 1], &[2, 3], true);
            let mut swapped = s.clone();
            swapped.permute(|w| {
                let a = w & 0b11;
                let b = (w >> 2) & 0b11;
                (w & !0b1111) | (a << 2) | b
            });
            let diff = s.norm_sqr() - s.overlap(&swapped).re;
            prop_assert!(diff.abs() < 1e-9);
        }
    }
}
