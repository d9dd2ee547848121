//! Honest and adversarial prover strategies.
//!
//! A prover only ever touches the registers it currently holds. The verifier hands it a
//! [`ProverIo`] view that rejects operations on any other qubit with
//! [`Error::ProverContract`].

use super::approx::{OracleTable, TargetApproximation};
use super::engine::{extract, mask_of, SparseState};
use crate::error::{Error, Result};
use crate::qcore::linalg::{complete_unitary, random_unitary, CMat, CVec, C64};
use crate::rng;
use std::collections::BTreeMap;
use std::sync::Arc;

/// What the prover knows at a hook.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoundCtx {
    pub n: usize,
    /// Round index, starting at 0.
    pub h: usize,
    /// Grow counter at the start of the round.
    pub k: usize,
    pub ell: u32,
}

impl RoundCtx {
    /// Width of `B` handed over in a grow round.
    pub fn grow_len(&self) -> usize {
        (self.k + 1).min(self.n)
    }
}

/// Qubit positions of the registers a prover may see.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProverRegs {
    /// Copy of the prefix `x`, `n` qubits; only the first `k` are meaningful.
    pub xsend: Vec<u32>,
    /// Answer register, `ell + 1` qubits.
    pub d: Vec<u32>,
    /// The whole `B` register (`n` qubits).
    pub b: Vec<u32>,
    /// Fresh per-round workspace, discarded at the end of the round.
    pub scratch: Vec<u32>,
    /// Persistent private memory.
    pub private: Vec<u32>,
}

/// A restricted view of the joint state.
pub struct ProverIo<'a> {
    state: &'a mut SparseState,
    allowed: u64,
    pub regs: &'a ProverRegs,
}

impl<'a> ProverIo<'a> {
    pub(crate) fn new(state: &'a mut SparseState, allowed: &[u32], regs: &'a ProverRegs) -> Self {
        ProverIo { state, allowed: mask_of(allowed), regs }
    }

    fn check(&self, qubits: &[u32]) -> Result<()> {
        let m = mask_of(qubits);
        if m & !self.allowed != 0 {
            return Err(Error::ProverContract(format!("qubits {qubits:?} are not held by the prover")));
        }
        Ok(())
    }

    /// `dst ^= f(src)`.
    pub fn xor_into(&mut self, src: &[u32], dst: &[u32], f: impl Fn(u64) -> u64) -> Result<()> {
        self.check(src)?;
        self.check(dst)?;
        self.state.xor_into(src, dst, f);
        Ok(())
    }

    /// Multiply branch `v` of `qubits` by `f(v)` (must have modulus one).
    pub fn phase_on(&mut self, qubits: &[u32], f: impl Fn(u64) -> C64) -> Result<()> {
        self.check(qubits)?;
        let q = qubits.to_vec();
        self.state.phase(move |w| f(extract(w, &q)));
        Ok(())
    }

    pub fn unitary_on(&mut self, qubits: &[u32], u: &CMat) -> Result<()> {
        self.check(qubits)?;
        self.state.apply_local(qubits, |_| Some(u.clone()));
        Ok(())
    }

    /// Apply `f(control value)` to `target`.
    pub fn controlled_unitary(&mut self, control: &[u32], target: &[u32], f: impl Fn(u64) -> Option<CMat>) -> Result<()> {
        self.check(control)?;
        self.check(target)?;
        let c = control.to_vec();
        self.state.apply_local(target, move |w| f(extract(w, &c)));
        Ok(())
    }

    pub fn prepare_fresh(&mut self, qubits: &[u32], v: &CVec) -> Result<()> {
        self.check(qubits)?;
        self.state.prepare_fresh(qubits, v)
    }

    pub fn swap_regs(&mut self, a: &[u32], b: &[u32]) -> Result<()> {
        self.check(a)?;
        self.check(b)?;
        let (a, b) = (a.to_vec(), b.to_vec());
        self.state.permute(move |w| {
            let va = extract(w, &a);
            let vb = extract(w, &b);
            super::engine::deposit(super::engine::deposit(w, &a, vb), &b, va)
        });
        Ok(())
    }
}

/// The untrusted party. Hooks must be unitary on the registers they are handed.
///
/// * `forward`: holds `xsend`, `D`, `scratch`, private; writes the claimed value into `D`.
/// * `backward`: same registers; expected to undo `forward`.
/// * `b_grow`: after a grow round, holds `B[..min(k+1, n)]`, `scratch`, private.
pub trait ProverStrategy: Send + Sync {
    fn name(&self) -> String;
    fn private_width(&self) -> usize {
        0
    }
    fn scratch_width(&self, n: usize) -> usize;
    fn forward(&self, io: &mut ProverIo, ctx: &RoundCtx) -> Result<()>;
    fn backward(&self, io: &mut ProverIo, ctx: &RoundCtx) -> Result<()>;
    fn b_grow(&self, io: &mut ProverIo, ctx: &RoundCtx) -> Result<()>;
}

/// Writes the true oracle answer and, in grow rounds, a fresh copy of the next stage.
#[derive(Clone, Debug)]
pub struct HonestProver {
    pub approx: Arc<TargetApproximation>,
    pub table: OracleTable,
}

impl HonestProver {
    pub fn new(approx: Arc<TargetApproximation>) -> Self {
        let table = approx.table();
        HonestProver { approx, table }
    }

    fn answer(&self, io: &mut ProverIo, ctx: &RoundCtx, table: &OracleTable) -> Result<()> {
        let k = ctx.k;
        let src = io.regs.xsend[..k].to_vec();
        let d = io.regs.d.clone();
        io.xor_into(&src, &d, |x| table.value(k, x))
    }

    /// Replace `B[..len]` by `v`, using the first `len` scratch qubits.
    pub fn swap_in(io: &mut ProverIo, len: usize, v: &CVec) -> Result<()> {
        let scratch = io.regs.scratch[..len].to_vec();
        let b = io.regs.b[..len].to_vec();
        io.prepare_fresh(&scratch, v)?;
        io.swap_regs(&scratch, &b)
    }
}

/// Build the honest prover for a target approximation.
pub fn honest_prover(approx: Arc<TargetApproximation>) -> HonestProver {
    HonestProver::new(approx)
}

impl ProverStrategy for HonestProver {
    fn name(&self) -> String {
        "honest".into()
    }
    fn scratch_width(&self, n: usize) -> usize {
        n
    }
    fn forward(&self, io: &mut ProverIo, ctx: &RoundCtx) -> Result<()> {
        self.answer(io, ctx, &self.table)
    }
    fn backward(&self, io: &mut ProverIo, ctx: &RoundCtx) -> Result<()> {
        self.answer(io, ctx, &self.table)
    }
    fn b_grow(&self, io: &mut ProverIo, ctx: &RoundCtx) -> Result<()> {
        Self::swap_in(io, ctx.grow_len(), self.approx.stage(ctx.k + 1))
    }
}

/// Multiplies branch `x` of the prefix copy by `phases[x]` in the forward step of every
/// round whose grow counter equals `level`.
pub struct PhaseAttack {
    pub base: Box<dyn ProverStrategy>,
    pub phases: Vec<C64>,
    pub level: usize,
}

/// Wrap `base` with a phase attack at `level` (`phases.len()` must be `2^level`).
pub fn phase_attack_prover(base: Box<dyn ProverStrategy>, phases: Vec<C64>, level: usize) -> Result<PhaseAttack> {
    if phases.len() != 1 << level {
        return Err(Error::InvalidArgument(format!("phase map needs {} entries, got {}", 1 << level, phases.len())));
    }
    if phases.iter().any(|p| (p.norm() - 1.0).abs() > 1e-9) {
        return Err(Error::InvalidArgument("phases must have modulus one".into()));
    }
    Ok(PhaseAttack { base, phases, level })
}

impl ProverStrategy for PhaseAttack {
    fn name(&self) -> String {
        format!("phase-attack({})", self.base.name())
    }
    fn private_width(&self) -> usize {
        self.base.private_width()
    }
    fn scratch_width(&self, n: usize) -> usize {
        self.base.scratch_width(n)
    }
    fn forward(&self, io: &mut ProverIo, ctx: &RoundCtx) -> Result<()> {
        self.base.forward(io, ctx)?;
        if ctx.k == self.level {
            let q = io.regs.xsend[..self.level].to_vec();
            io.phase_on(&q, |x| self.phases[x as usize])?;
        }
        Ok(())
    }
    fn backward(&self, io: &mut ProverIo, ctx: &RoundCtx) -> Result<()> {
        self.base.backward(io, ctx)
    }
    fn b_grow(&self, io: &mut ProverIo, ctx: &RoundCtx) -> Result<()> {
        self.base.b_grow(io, ctx)
    }
}

/// In the backward step of rounds whose grow counter is in `levels`, copies the prefix
/// into extra scratch qubits (which the prover keeps), then behaves as `base`.
pub struct EntanglementAttack {
    pub base: Box<dyn ProverStrategy>,
    pub levels: Vec<usize>,
}

pub fn entanglement_attack_prover(base: Box<dyn ProverStrategy>, levels: Vec<usize>) -> EntanglementAttack {
    EntanglementAttack { base, levels }
}

impl ProverStrategy for EntanglementAttack {
    fn name(&self) -> String {
        format!("entanglement-attack({})", self.base.name())
    }
    fn private_width(&self) -> usize {
        self.base.private_width()
    }
    fn scratch_width(&self, n: usize) -> usize {
        self.base.scratch_width(n) + n
    }
    fn forward(&self, io: &mut ProverIo, ctx: &RoundCtx) -> Result<()> {
        self.base.forward(io, ctx)
    }
    fn backward(&self, io: &mut ProverIo, ctx: &RoundCtx) -> Result<()> {
        if self.levels.contains(&ctx.k) {
            let off = self.base.scratch_width(ctx.n);
            let src = io.regs.xsend[..ctx.k].to_vec();
            let dst = io.regs.scratch[off..off + ctx.k].to_vec();
            io.xor_into(&src, &dst, |x| x)?;
        }
        self.base.backward(io, ctx)
    }
    fn b_grow(&self, io: &mut ProverIo, ctx: &RoundCtx) -> Result<()> {
        self.base.b_grow(io, ctx)
    }
}

/// Honest-shaped prover that answers `wrong[(len, x)]` where present.
pub struct LyingProver {
    pub honest: HonestProver,
    pub wrong: BTreeMap<(usize, u64), u64>,
    table: OracleTable,
}

pub fn lying_prover(approx: Arc<TargetApproximation>, wrong: BTreeMap<(usize, u64), u64>) -> LyingProver {
    let honest = HonestProver::new(approx);
    let mut table = honest.table.clone();
    for (&(len, x), &v) in &wrong {
        if len < table.n {
            table.cp[len][x as usize] = v;
        } else {
            table.ph[x as usize] = v;
        }
    }
    LyingProver { honest, wrong, table }
}

impl ProverStrategy for LyingProver {
    fn name(&self) -> String {
        format!("lying({} entries)", self.wrong.len())
    }
    fn scratch_width(&self, n: usize) -> usize {
        n
    }
    fn forward(&self, io: &mut ProverIo, ctx: &RoundCtx) -> Result<()> {
        self.honest.answer(io, ctx, &self.table)
    }
    fn backward(&self, io: &mut ProverIo, ctx: &RoundCtx) -> Result<()> {
        self.honest.answer(io, ctx, &self.table)
    }
    fn b_grow(&self, io: &mut ProverIo, ctx: &RoundCtx) -> Result<()> {
        self.honest.b_grow(io, ctx)
    }
}

/// Honest except that at the grow round with counter `level` it hands back `B` holding a
/// state orthogonal to the next stage.
pub struct OrthogonalBProver {
    pub base: HonestProver,
    pub level: usize,
}

impl ProverStrategy for OrthogonalBProver {
    fn name(&self) -> String {
        format!("orthogonal-b(level {})", self.level)
    }
    fn scratch_width(&self, n: usize) -> usize {
        n
    }
    fn forward(&self, io: &mut ProverIo, ctx: &RoundCtx) -> Result<()> {
        self.base.forward(io, ctx)
    }
    fn backward(&self, io: &mut ProverIo, ctx: &RoundCtx) -> Result<()> {
        self.base.backward(io, ctx)
    }
    fn b_grow(&self, io: &mut ProverIo, ctx: &RoundCtx) -> Result<()> {
        if ctx.k != self.level {
            return self.base.b_grow(io, ctx);
        }
        let stage = self.base.approx.stage(ctx.k + 1);
        let orth = complete_unitary(stage)?.column(1).into_owned();
        HonestProver::swap_in(io, ctx.grow_len(), &orth)
    }
}

/// Honest answers followed by seeded random unitaries: on the low two `D` qubits plus one
/// private qubit in the forward and backward steps, and on `B` plus the private qubit in
/// grow rounds.
pub struct RandomUnitaryProver {
    pub base: HonestProver,
    pub seed: u64,
}

impl RandomUnitaryProver {
    fn unitary(&self, tag: &str, h: usize, dim: usize) -> CMat {
        let mut r = rng::stream(self.seed, &[rng::label(tag), h as u64]);
        random_unitary(dim, &mut r)
    }

    fn d_private(io: &ProverIo) -> Vec<u32> {
        let d = &io.regs.d;
        let mut q = d[d.len() - 2..].to_vec();
        q.extend_from_slice(&io.regs.private);
        q
    }
}

impl ProverStrategy for RandomUnitaryProver {
    fn name(&self) -> String {
        format!("random-unitary(seed {})", self.seed)
    }
    fn private_width(&self) -> usize {
        1
    }
    fn scratch_width(&self, n: usize) -> usize {
        n
    }
    fn forward(&self, io: &mut ProverIo, ctx: &RoundCtx) -> Result<()> {
        self.base.forward(io, ctx)?;
        let q = Self::d_private(io);
        io.unitary_on(&q, &self.unitary("forward", ctx.h, 8))
    }
    fn backward(&self, io: &mut ProverIo, ctx: &RoundCtx) -> Result<()> {
        let q = Self::d_private(io);
        io.unitary_on(&q, &self.unitary("backward", ctx.h, 8))?;
        self.base.backward(io, ctx)
    }
    fn b_grow(&self, io: &mut ProverIo, ctx: &RoundCtx) -> Result<()> {
        self.base.b_grow(io, ctx)?;
        let len = ctx.grow_len();
        let mut q = io.regs.b[..len].to_vec();
        q.extend_from_slice(&io.regs.private);
        io.unitary_on(&q, &self.unitary("grow", ctx.h, 1 << (len + 1)))
    }
}

/// A prover that writes into registers it does not hold; used to test the contract check.
pub struct RogueProver;

impl ProverStrategy for RogueProver {
    fn name(&self) -> String {
        "rogue".into()
    }
    fn scratch_width(&self, _n: usize) -> usize {
        0
    }
    fn forward(&self, io: &mut ProverIo, _ctx: &RoundCtx) -> Result<()> {
        let b = io.regs.b.clone();
        io.xor_into(&[], &b, |_| 1)
    }
    fn backward(&self, _io: &mut ProverIo, _ctx: &RoundCtx) -> Result<()> {
        Ok(())
    }
    fn b_grow(&self, _io: &mut ProverIo, _ctx: &RoundCtx) -> Result<()> {
        Ok(())
    }
}
