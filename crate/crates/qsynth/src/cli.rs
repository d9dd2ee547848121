//! Scenario runner: JSON scenario files in, `report.csv` and `summary.json` out.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 when a run violates the
//! per-branch soundness inequality or a sub-verifier breaks its contract.

use crate::error::{Error, Result};
use crate::qcore::linalg::{c, complete_unitary, diag, random_unitary, turn, CMat, CVec};
use crate::qcore::{
    ghz_state, plus_state, random_circuit_state, random_state, w_state, zero_state, DensityMatrix, QuantumState, RegisterLayout,
};
use crate::rng;
use crate::stateproto::{
    amplified_protocol, build_target_approximation, check_soundness_bound, constant_round_protocol, entanglement_attack_prover,
    flawed_protocol, lying_prover, phase_attack_prover, run_protocol, ConstantRoundProver, ContractReport, HonestProver, OrthogonalBProver,
    ProtocolConfig, ProverStrategy, RandomUnitaryProver, RogueProver, RunMode, RunResult, SoundnessReport, SubVerifier, SubVerifierKind,
    Target,
};
use crate::tomography::{cp_max_error, ph_max_error, OracleBackend};
use crate::uniproto::{lmr_error, unitary_corpus, unitary_qip_apply, ProverFactory, UnitaryQipConfig};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

/// Value of the `schema` field every scenario file must carry.
pub const SCHEMA: &str = "qsynth-scenario/1";

/// Column order of `report.csv`.
pub const CSV_COLUMNS: [&str; 20] = [
    "scenario_id",
    "seed",
    "kind",
    "variant",
    "prover",
    "n",
    "t",
    "accept_probability",
    "td_to_target",
    "td_to_approx_target",
    "reject_flag",
    "reject_swap",
    "reject_rounds",
    "bound_checked",
    "bound_lhs",
    "bound_rhs",
    "bound_holds",
    "metric",
    "metric_value",
    "metric_bound",
];

/// Numeric columns aggregated in `summary.json`.
const AGGREGATED: [&str; 8] =
    ["accept_probability", "td_to_target", "td_to_approx_target", "reject_flag", "reject_swap", "bound_lhs", "bound_rhs", "metric_value"];

// ---------------------------------------------------------------------------------------
// Scenario schema
// ---------------------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema: String,
    pub scenarios: Vec<Scenario>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub repetitions: usize,
    #[serde(flatten)]
    pub kind: ScenarioKind,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScenarioKind {
    StateSynthesis {
        target: TargetSpec,
        #[serde(default)]
        protocol: ProtocolSpec,
        #[serde(default)]
        variant: Variant,
        #[serde(default)]
        prover: ProverSpec,
        #[serde(default = "coin_flip")]
        subverifier: SubVerifierKind,
        #[serde(default = "one")]
        instances: usize,
    },
    UnitarySynthesis {
        unitary: UnitarySpec,
        input: TargetSpec,
        #[serde(default)]
        config: UnitaryQipConfig,
        #[serde(default)]
        prover: ProverSpec,
    },
    AttackGallery {
        target: TargetSpec,
        #[serde(default)]
        protocol: ProtocolSpec,
        #[serde(default)]
        provers: Vec<ProverSpec>,
        #[serde(default = "coin_flip")]
        subverifier: SubVerifierKind,
    },
    TomographyBench {
        target: TargetSpec,
        #[serde(default)]
        backend: BackendSpec,
    },
    LmrBench {
        /// Eigenvalues of the diagonal program state.
        rho_diag: Vec<f64>,
        time: f64,
        input: TargetSpec,
        copies: Vec<usize>,
    },
    ConstantRound {
        target: TargetSpec,
        #[serde(default)]
        protocol: ProtocolSpec,
        #[serde(default)]
        prover: ConstantRoundProverSpec,
        #[serde(default = "coin_flip")]
        subverifier: SubVerifierKind,
    },
}

fn coin_flip() -> SubVerifierKind {
    SubVerifierKind::CoinFlip
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::StateSynthesis { .. } => "state-synthesis",
            ScenarioKind::UnitarySynthesis { .. } => "unitary-synthesis",
            ScenarioKind::AttackGallery { .. } => "attack-gallery",
            ScenarioKind::TomographyBench { .. } => "tomography-bench",
            ScenarioKind::LmrBench { .. } => "lmr-bench",
            ScenarioKind::ConstantRound { .. } => "constant-round",
        }
    }
}

/// Named target-state families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetSpec {
    Zero {
        n: usize,
    },
    Plus {
        n: usize,
    },
    Ghz {
        n: usize,
    },
    W {
        n: usize,
    },
    RandomState {
        n: usize,
        seed: u64,
    },
    RandomCircuit {
        n: usize,
        depth: usize,
        seed: u64,
    },
    /// Explicit amplitudes (imaginary parts optional); normalized on load.
    Amplitudes {
        re: Vec<f64>,
        #[serde(default)]
        im: Vec<f64>,
    },
}

impl TargetSpec {
    pub fn build(&self) -> Result<QuantumState> {
        match self {
            TargetSpec::Zero { n } => zero_state(*n),
            TargetSpec::Plus { n } => plus_state(*n),
            TargetSpec::Ghz { n } => ghz_state(*n),
            TargetSpec::W { n } => w_state(*n),
            TargetSpec::RandomState { n, seed } => random_state(*n, *seed),
            TargetSpec::RandomCircuit { n, depth, seed } => random_circuit_state(*n, *depth, *seed),
            TargetSpec::Amplitudes { re, im } => {
                let d = re.len();
                if d < 2 || !d.is_power_of_two() {
                    return Err(Error::InvalidArgument(format!("{d} amplitudes is not a power of two >= 2")));
                }
                if !im.is_empty() && im.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, found: im.len() });
                }
                let v = CVec::from_iterator(d, (0..d).map(|i| c(re[i], im.get(i).copied().unwrap_or(0.0))));
                let norm = v.norm();
                if norm < 1e-12 {
                    return Err(Error::InvalidArgument("amplitudes are all zero".into()));
                }
                QuantumState::from_vec("A", v / c(norm, 0.0))
            }
        }
    }
}

/// Unitaries for the synthesis scenarios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum UnitarySpec {
    /// A named gate from the built-in corpus.
    Gate {
        name: String,
    },
    /// `diag(e^{2 pi i a_j})` with angles in turns.
    DiagUnitary {
        angles: Vec<f64>,
    },
    RandomUnitary {
        n: usize,
        seed: u64,
    },
}

impl UnitarySpec {
    pub fn build(&self) -> Result<CMat> {
        match self {
            UnitarySpec::Gate { name } => unitary_corpus()
                .into_iter()
                .find(|(k, _)| k == name)
                .map(|(_, u)| u)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown gate `{name}`"))),
            UnitarySpec::DiagUnitary { angles } => {
                if angles.len() < 2 || !angles.len().is_power_of_two() {
                    return Err(Error::InvalidArgument("diag-unitary needs a power-of-two number of angles".into()));
                }
                Ok(diag(&angles.iter().map(|&a| turn(a)).collect::<Vec<_>>()))
            }
            UnitarySpec::RandomUnitary { n, seed } => {
                if *n == 0 || *n > 3 {
                    return Err(Error::InvalidArgument(format!("random-unitary width {n} outside 1..=3")));
                }
                let mut r = rng::stream(*seed, &[rng::label("random-unitary"), *n as u64]);
                Ok(random_unitary(1 << n, &mut r))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `t = 3n`, `l = m = 10`.
    #[default]
    Desk,
    /// `t = 18q + 3n + 54`, `m = 4q + 12n`, `l = m + 5`.
    Proof,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    #[default]
    Exact,
    Trajectory,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSpec {
    pub preset: Preset,
    pub q: Option<u32>,
    pub t: Option<usize>,
    pub ell: Option<u32>,
    pub m: Option<u32>,
    pub mode: ModeArg,
}

impl ProtocolSpec {
    pub fn build(&self, n: usize, seed: u64) -> Result<ProtocolConfig> {
        let mut cfg = match self.preset {
            Preset::Desk => ProtocolConfig::desk(n),
            Preset::Proof => ProtocolConfig::proof_defaults(n, self.q.unwrap_or(1)),
        };
        if let Some(t) = self.t {
            cfg.t = t;
        }
        cfg = cfg.with_precision(self.ell.unwrap_or(cfg.ell), self.m.unwrap_or(cfg.m));
        cfg.mode = match self.mode {
            ModeArg::Exact => RunMode::Exact,
            ModeArg::Trajectory => RunMode::Trajectory { seed },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Grow and test rounds with the swap test.
    #[default]
    TwoRegister,
    /// One register, no swap test.
    Flawed,
}

impl Variant {
    fn label(self) -> &'static str {
        match self {
            Variant::TwoRegister => "two-register",
            Variant::Flawed => "flawed",
        }
    }
}

/// Prover strategies for the state protocol.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProverSpec {
    #[default]
    Honest,
    /// Multiply the level-`level` register by `e^{2 pi i phases[x]}` (phases in turns).
    PhaseAttack { phases: Vec<f64>, level: usize },
    /// Entangle the prover's private register with `A` after the listed grow levels.
    EntanglementAttack { levels: Vec<usize> },
    /// Send false values `[len, x, v]` on the listed instances.
    Lying { lies: Vec<[u64; 3]> },
    /// Send a `B` register orthogonal to the honest one at `level`.
    OrthogonalB { level: usize },
    /// Replace every prover unitary by a seeded random one.
    RandomUnitary { seed: u64 },
    /// Write into the verifier's `B` register; the run aborts with a contract error.
    Rogue,
}

impl ProverSpec {
    pub fn build(&self, target: &Target) -> Result<Box<dyn ProverStrategy>> {
        let honest = || Box::new(HonestProver::new(target.approx.clone())) as Box<dyn ProverStrategy>;
        Ok(match self {
            ProverSpec::Honest => honest(),
            ProverSpec::PhaseAttack { phases, level } => {
                Box::new(phase_attack_prover(honest(), phases.iter().map(|&a| turn(a)).collect(), *level)?)
            }
            ProverSpec::EntanglementAttack { levels } => Box::new(entanglement_attack_prover(honest(), levels.clone())),
            ProverSpec::Lying { lies } => {
                let map = lies.iter().map(|&[len, x, v]| ((len as usize, x), v)).collect::<BTreeMap<_, _>>();
                Box::new(lying_prover(target.approx.clone(), map))
            }
            ProverSpec::OrthogonalB { level } => {
                Box::new(OrthogonalBProver { base: HonestProver::new(target.approx.clone()), level: *level })
            }
            ProverSpec::RandomUnitary { seed } => {
                Box::new(RandomUnitaryProver { base: HonestProver::new(target.approx.clone()), seed: *seed })
            }
            ProverSpec::Rogue => Box::new(RogueProver),
        })
    }

    /// Default provers for a width-`n` target: honest, then adversaries that flip the sign
    /// of the last basis string, entangle after every grow level, send an orthogonal `B`,
    /// or play random unitaries.
    pub fn gallery(n: usize, seed: u64) -> Vec<ProverSpec> {
        let d = 1usize << n;
        let mut phases = vec![0.0; d];
        phases[d - 1] = 0.5;
        vec![
            ProverSpec::Honest,
            ProverSpec::PhaseAttack { phases, level: n },
            ProverSpec::EntanglementAttack { levels: (1..=n).collect() },
            ProverSpec::OrthogonalB { level: 1 },
            ProverSpec::RandomUnitary { seed },
        ]
    }
}

/// Provers for the constant-round variant.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConstantRoundProverSpec {
    #[default]
    Honest,
    /// Send `S_stage` orthogonal to `R_stage`.
    OrthogonalS { stage: usize },
    /// Send an `S_{n+1}` orthogonal to the approximation.
    WrongFinal,
}

impl ConstantRoundProverSpec {
    fn label(&self) -> String {
        match self {
            ConstantRoundProverSpec::Honest => "honest".into(),
            ConstantRoundProverSpec::OrthogonalS { stage } => format!("orthogonal-s({stage})"),
            ConstantRoundProverSpec::WrongFinal => "wrong-final".into(),
        }
    }

    fn build(&self, target: &Target) -> Result<ConstantRoundProver> {
        let orth = |v: &CVec| -> Result<CVec> { Ok(complete_unitary(v)?.column(1).into_owned()) };
        let mut p = ConstantRoundProver::honest(target);
        match self {
            ConstantRoundProverSpec::Honest => {}
            ConstantRoundProverSpec::OrthogonalS { stage } => {
                if *stage == 0 || *stage > p.s.len() {
                    return Err(Error::InvalidArgument(format!("stage {stage} outside 1..={}", p.s.len())));
                }
                p.s[stage - 1] = orth(&p.r[stage - 1])?;
            }
            ConstantRoundProverSpec::WrongFinal => p.s_final = orth(&target.approx.final_state)?,
        }
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSpec {
    pub sampled: bool,
    pub m: u32,
    pub ell: u32,
    /// Trial count of the sampled backend (`None`: `10 * 4^m`).
    pub trials: Option<u64>,
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec { sampled: false, m: 10, ell: 10, trials: None }
    }
}

impl BackendSpec {
    fn build(&self, seed: u64) -> Result<OracleBackend> {
        let b = if self.sampled { OracleBackend::sampled(self.m, seed) } else { OracleBackend::exact(self.m) };
        let b = b.with_output_precision(self.ell);
        match self.trials {
            Some(t) => b.with_trials(t),
            None => Ok(b),
        }
    }
}

// ---------------------------------------------------------------------------------------
// Report rows
// ---------------------------------------------------------------------------------------

/// One line of `report.csv`. Absent values print as empty cells.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ReportRow {
    pub scenario_id: String,
    pub seed: u64,
    pub kind: String,
    pub variant: String,
    pub prover: String,
    pub n: usize,
    pub t: Option<usize>,
    pub accept_probability: Option<f64>,
    pub td_to_target: Option<f64>,
    pub td_to_approx_target: Option<f64>,
    /// Rejection probability by flag measurement (exact) or the 0/1 outcome (trajectory).
    pub reject_flag: Option<f64>,
    pub reject_swap: Option<f64>,
    /// Per-round `flag/swap` rejection probabilities, `;`-separated.
    pub reject_rounds: String,
    pub bound_checked: Option<usize>,
    pub bound_lhs: Option<f64>,
    pub bound_rhs: Option<f64>,
    pub bound_holds: Option<bool>,
    pub metric: String,
    pub metric_value: Option<f64>,
    pub metric_bound: Option<f64>,
}

impl ReportRow {
    fn cells(&self) -> Vec<String> {
        let f = |x: Option<f64>| x.map(fmt_sig).unwrap_or_default();
        vec![
            self.scenario_id.clone(),
            self.seed.to_string(),
            self.kind.clone(),
            self.variant.clone(),
            self.prover.clone(),
            self.n.to_string(),
            self.t.map(|t| t.to_string()).unwrap_or_default(),
            f(self.accept_probability),
            f(self.td_to_target),
            f(self.td_to_approx_target),
            f(self.reject_flag),
            f(self.reject_swap),
            self.reject_rounds.clone(),
            self.bound_checked.map(|x| x.to_string()).unwrap_or_default(),
            f(self.bound_lhs),
            f(self.bound_rhs),
            self.bound_holds.map(|b| b.to_string()).unwrap_or_default(),
            self.metric.clone(),
            f(self.metric_value),
            f(self.metric_bound),
        ]
    }

    fn numeric(&self, column: &str) -> Option<f64> {
        match column {
            "accept_probability" => self.accept_probability,
            "td_to_target" => self.td_to_target,
            "td_to_approx_target" => self.td_to_approx_target,
            "reject_flag" => self.reject_flag,
            "reject_swap" => self.reject_swap,
            "bound_lhs" => self.bound_lhs,
            "bound_rhs" => self.bound_rhs,
            "metric_value" => self.metric_value,
            _ => None,
        }
    }
}

/// Format with 12 significant digits, trimming trailing zeros.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return String::new();
    }
    let e = x.abs().log10().floor() as i32;
    if !(-5..=12).contains(&e) {
        return format!("{x:.11e}");
    }
    let s = format!("{:.*}", (11 - e).max(0) as usize, x);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn finite(x: Option<f64>) -> Option<f64> {
    x.filter(|v| v.is_finite())
}

// ---------------------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------------------

/// Command-line overrides applied to every scenario.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Overrides {
    pub mode: Option<ModeArg>,
    pub seed: Option<u64>,
}

struct Job<'a> {
    index: usize,
    scenario: &'a Scenario,
    seed: u64,
}

#[derive(Default)]
struct JobOutput {
    rows: Vec<ReportRow>,
    details: Vec<Value>,
    soundness: Vec<SoundnessReport>,
    contracts: Vec<ContractReport>,
    wall_time: f64,
}

/// Result of [`run_scenarios`].
#[derive(Clone, Debug)]
pub struct RunReport {
    /// Sorted by `(scenario_id, seed)`, then by the order each job emitted them.
    pub rows: Vec<ReportRow>,
    pub summary: Value,
    pub soundness_violations: usize,
    pub contract_breaches: usize,
}

impl RunReport {
    pub fn theorem_checks_pass(&self) -> bool {
        self.soundness_violations == 0 && self.contract_breaches == 0
    }

    /// 0 when every theorem check passed, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.theorem_checks_pass() {
            0
        } else {
            2
        }
    }
}

/// Parse a scenario file and check its schema tag.
pub fn parse_scenarios(text: &str) -> Result<ScenarioFile> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Config(format!("scenario file: {e}")))?;
    if file.schema != SCHEMA {
        return Err(Error::Config(format!("schema `{}` is not `{SCHEMA}`", file.schema)));
    }
    if file.scenarios.is_empty() {
        return Err(Error::Config("no scenarios".into()));
    }
    Ok(file)
}

fn apply_overrides(file: &ScenarioFile, ov: &Overrides) -> ScenarioFile {
    let mut f = file.clone();
    for s in &mut f.scenarios {
        if let Some(seed) = ov.seed {
            s.seed = seed;
        }
        if let Some(mode) = ov.mode {
            match &mut s.kind {
                ScenarioKind::StateSynthesis { protocol, .. }
                | ScenarioKind::AttackGallery { protocol, .. }
                | ScenarioKind::ConstantRound { protocol, .. } => protocol.mode = mode,
                _ => {}
            }
        }
    }
    f
}

/// Check every scenario against the module preconditions without running it.
pub fn validate(file: &ScenarioFile) -> Result<()> {
    let mut ids = std::collections::BTreeSet::new();
    for s in &file.scenarios {
        if !ids.insert(s.id.as_str()) {
            return Err(Error::Config(format!("duplicate scenario id `{}`", s.id)));
        }
        if s.repetitions == 0 {
            return Err(Error::Config(format!("`{}`: repetitions must be at least 1", s.id)));
        }
        let ctx = |e: Error| Error::Config(format!("`{}`: {e}", s.id));
        match &s.kind {
            ScenarioKind::StateSynthesis { target, protocol, instances, subverifier, .. } => {
                let st = target.build().map_err(ctx)?;
                protocol.build(st.width(), 0).map_err(ctx)?;
                check_soundness_param(subverifier).map_err(ctx)?;
                if *instances == 0 {
                    return Err(ctx(Error::InvalidArgument("instances must be at least 1".into())));
                }
            }
            ScenarioKind::AttackGallery { target, protocol, subverifier, .. }
            | ScenarioKind::ConstantRound { target, protocol, subverifier, .. } => {
                let st = target.build().map_err(ctx)?;
                protocol.build(st.width(), 0).map_err(ctx)?;
                check_soundness_param(subverifier).map_err(ctx)?;
            }
            ScenarioKind::UnitarySynthesis { unitary, input, config, .. } => {
                let u = unitary.build().map_err(ctx)?;
                let phi = input.build().map_err(ctx)?;
                if phi.amplitudes().len() != u.nrows() {
                    return Err(ctx(Error::DimensionMismatch { expected: u.nrows(), found: phi.amplitudes().len() }));
                }
                check_soundness_param(&config.subverifier).map_err(ctx)?;
            }
            ScenarioKind::TomographyBench { target, backend } => {
                target.build().map_err(ctx)?;
                backend.build(0).map_err(ctx)?;
                if target.build().map_err(ctx)?.width() > 4 {
                    return Err(ctx(Error::InvalidArgument("tomography bench supports up to 4 qubits".into())));
                }
            }
            ScenarioKind::LmrBench { rho_diag, time, input, copies } => {
                let phi = input.build().map_err(ctx)?;
                if rho_diag.len() != phi.amplitudes().len() {
                    return Err(ctx(Error::DimensionMismatch { expected: phi.amplitudes().len(), found: rho_diag.len() }));
                }
                let tr: f64 = rho_diag.iter().sum();
                if rho_diag.iter().any(|&x| x < 0.0) || (tr - 1.0).abs() > 1e-9 {
                    return Err(ctx(Error::InvalidArgument("rho_diag must be a probability vector".into())));
                }
                if !time.is_finite() || copies.is_empty() || copies.contains(&0) {
                    return Err(ctx(Error::InvalidArgument("need a finite time and positive copy counts".into())));
                }
            }
        }
    }
    Ok(())
}

fn check_soundness_param(kind: &SubVerifierKind) -> Result<()> {
    match kind {
        SubVerifierKind::Tunable { soundness } if !(0.0..=1.0).contains(soundness) => {
            Err(Error::InvalidArgument(format!("soundness {soundness} outside [0, 1]")))
        }
        _ => Ok(()),
    }
}

fn make_subverifier(kind: SubVerifierKind, target: &Target) -> Result<SubVerifier> {
    match kind {
        SubVerifierKind::CoinFlip => Ok(SubVerifier::coin_flip(target.table())),
        SubVerifierKind::Tunable { soundness } => SubVerifier::tunable(target.table(), soundness),
    }
}

fn make_target(state: QuantumState, cfg: &ProtocolConfig) -> Result<Target> {
    let approx = build_target_approximation(&state, &OracleBackend::exact(cfg.m).with_output_precision(cfg.ell))?;
    Ok(Target { state, approx: Arc::new(approx) })
}

fn protocol_row(base: &ReportRow, run: &RunResult, cfg: &ProtocolConfig, check_bound: bool) -> (ReportRow, Option<SoundnessReport>) {
    let mut row = base.clone();
    row.t = Some(cfg.t);
    row.accept_probability = finite(Some(run.accept_probability));
    row.td_to_target = finite(run.td_to_target);
    row.td_to_approx_target = finite(run.td_to_approx_target);
    let rounds = run.leaves.iter().map(|l| l.transcript.rounds.len()).max().unwrap_or(0);
    let mut per_round = vec![(0.0, 0.0); rounds];
    let exact = cfg.mode == RunMode::Exact;
    let (mut flag, mut swap) = (0.0, 0.0);
    for l in &run.leaves {
        if exact {
            for (h, r) in l.transcript.rounds.iter().enumerate() {
                per_round[h].0 += l.b_probability * r.flag_loss;
                per_round[h].1 += l.b_probability * r.swap_loss;
            }
        } else if let Some((h, cause)) = l.transcript.reject {
            match cause {
                crate::stateproto::RejectCause::FlagMeasurement => per_round[h].0 += 1.0,
                crate::stateproto::RejectCause::SwapTest => per_round[h].1 += 1.0,
            }
        }
    }
    for (f, s) in &per_round {
        flag += f;
        swap += s;
    }
    row.reject_flag = Some(flag);
    row.reject_swap = Some(swap);
    row.reject_rounds = per_round.iter().map(|(f, s)| format!("{}/{}", fmt_sig(*f), fmt_sig(*s))).collect::<Vec<_>>().join(";");
    let mut report = None;
    if check_bound && exact {
        let rep = check_soundness_bound(run);
        row.bound_checked = Some(rep.checked);
        row.bound_holds = Some(rep.holds);
        if let Some(w) = run.worst_lemma() {
            row.bound_lhs = Some(w.lhs);
            row.bound_rhs = Some(w.rhs);
        }
        report = Some(rep);
    }
    (row, report)
}

fn run_job(job: &Job) -> Result<JobOutput> {
    let s = job.scenario;
    let start = Instant::now();
    let mut out = JobOutput::default();
    let base = ReportRow { scenario_id: s.id.clone(), seed: job.seed, kind: s.kind.name().into(), ..ReportRow::default() };
    let stream_seed = rng::derive_seed(job.seed, &[rng::label(&s.id)]);
    match &s.kind {
        ScenarioKind::StateSynthesis { target, protocol, variant, prover, subverifier, instances } => {
            let state = target.build()?;
            let cfg = protocol.build(state.width(), stream_seed)?;
            let t = make_target(state, &cfg)?;
            let subv = make_subverifier(*subverifier, &t)?;
            out.contracts.push(subv.check_contract());
            let p = prover.build(&t)?;
            let run = match variant {
                Variant::Flawed if *instances > 1 => {
                    return Err(Error::Config("amplification applies to the two-register protocol only".into()));
                }
                Variant::Flawed => flawed_protocol(&t, p.as_ref(), &subv, &cfg)?,
                Variant::TwoRegister if *instances > 1 => {
                    let provers = (0..*instances).map(|_| prover.build(&t)).collect::<Result<Vec<_>>>()?;
                    amplified_protocol(&t, &provers, &subv, &cfg, *instances)?
                }
                Variant::TwoRegister => run_protocol(&t, p.as_ref(), &subv, &cfg)?,
            };
            let mut b = base.clone();
            b.variant = variant.label().into();
            b.prover = p.name();
            b.n = t.n();
            let (mut row, rep) = protocol_row(&b, &run, &cfg, *variant == Variant::TwoRegister);
            if *instances > 1 {
                row.metric = "instances".into();
                row.metric_value = Some(*instances as f64);
            }
            out.rows.push(row);
            out.soundness.extend(rep);
            out.details.push(json!({
                "seed": job.seed,
                "low_weight_probability": run.low_weight_probability,
                "td_high_weight_to_approx": run.td_high_weight_to_approx,
                "approx_td_to_target": t.approx.td_to_target,
                "leaves": run.leaves.len(),
            }));
        }
        ScenarioKind::AttackGallery { target, protocol, provers, subverifier } => {
            let state = target.build()?;
            let cfg = protocol.build(state.width(), stream_seed)?;
            let t = make_target(state, &cfg)?;
            let subv = make_subverifier(*subverifier, &t)?;
            out.contracts.push(subv.check_contract());
            let list = if provers.is_empty() { ProverSpec::gallery(t.n(), job.seed) } else { provers.clone() };
            for spec in &list {
                let p = spec.build(&t)?;
                for variant in [Variant::Flawed, Variant::TwoRegister] {
                    let run = match variant {
                        Variant::Flawed => flawed_protocol(&t, p.as_ref(), &subv, &cfg)?,
                        Variant::TwoRegister => run_protocol(&t, p.as_ref(), &subv, &cfg)?,
                    };
                    let mut b = base.clone();
                    b.variant = variant.label().into();
                    b.prover = p.name();
                    b.n = t.n();
                    let (row, rep) = protocol_row(&b, &run, &cfg, variant == Variant::TwoRegister);
                    out.rows.push(row);
                    out.soundness.extend(rep);
                }
            }
        }
        ScenarioKind::ConstantRound { target, protocol, prover, subverifier } => {
            let state = target.build()?;
            let cfg = protocol.build(state.width(), stream_seed)?;
            let t = make_target(state, &cfg)?;
            let subv = make_subverifier(*subverifier, &t)?;
            out.contracts.push(subv.check_contract());
            let p = prover.build(&t)?;
            let run = constant_round_protocol(&t, &p, &subv, &cfg)?;
            let mut b = base.clone();
            b.variant = "constant-round".into();
            b.prover = prover.label();
            b.n = t.n();
            let (mut row, _) = protocol_row(&b, &run, &cfg, false);
            row.t = None;
            out.rows.push(row);
        }
        ScenarioKind::UnitarySynthesis { unitary, input, config, prover } => {
            let u = unitary.build()?;
            let phi = input.build()?;
            let spec = prover.clone();
            let factory: Box<ProverFactory> = Box::new(move |t: &Target| spec.build(t));
            let r = unitary_qip_apply(&u, &phi, config, factory.as_ref())?;
            for run in r.state_run.iter().chain(r.time_run.iter()) {
                out.soundness.push(check_soundness_bound(run));
            }
            let mut row = base.clone();
            row.variant = if r.zero_time { "zero-time".into() } else { "two-register".into() };
            row.prover = prover_label(prover);
            row.n = phi.width();
            row.accept_probability = finite(Some(r.accept_probability));
            row.td_to_target = finite(r.td_to_ideal);
            row.metric = "calibration_error".into();
            row.metric_value = Some(r.calibration_error);
            row.metric_bound = Some(config.budget());
            out.rows.push(row);
            out.details.push(json!({
                "seed": job.seed,
                "copies": r.copies,
                "calibration_error": r.calibration_error,
                "budget": config.budget(),
                "shift": r.shift,
                "t_tilde": r.t_tilde,
                "evolution_time": r.evolution_time,
                "program_td": finite(Some(r.program_td)),
                "state_accept": r.state_run.as_ref().map(|x| x.accept_probability),
                "time_accept": r.time_run.as_ref().map(|x| x.accept_probability),
            }));
        }
        ScenarioKind::TomographyBench { target, backend } => {
            let psi = target.build()?;
            let b = backend.build(stream_seed)?;
            let scale = if backend.sampled { 2.0 } else { 1.0 };
            let cp_bound = scale * 2f64.powi(-(backend.m as i32));
            let ph_bound = scale * 2f64.powi(-(backend.m as i32)) + 2f64.powi(-(backend.ell as i32));
            let variant = if backend.sampled { "sampled" } else { "exact" };
            for (metric, value, bound) in
                [("cp_max_error", cp_max_error(&psi, &b)?, cp_bound), ("ph_max_error", ph_max_error(&psi, &b)?, ph_bound)]
            {
                let mut row = base.clone();
                row.variant = variant.into();
                row.n = psi.width();
                row.metric = metric.into();
                row.metric_value = Some(value);
                row.metric_bound = Some(bound);
                out.rows.push(row);
            }
        }
        ScenarioKind::LmrBench { rho_diag, time, input, copies } => {
            let phi = input.build()?;
            let n = phi.width();
            let layout = RegisterLayout::single("A", n);
            let rho = DensityMatrix::new(layout.clone(), diag(&rho_diag.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>()))?;
            let tau = DensityMatrix::from_pure(&phi.with_layout(layout)?);
            let mut errors = Vec::new();
            for &k in copies {
                let e = lmr_error(&tau, &rho, *time, k)?;
                errors.push(e);
                let mut row = base.clone();
                row.variant = format!("k={k}");
                row.n = n;
                row.metric = "lmr_error".into();
                row.metric_value = Some(e);
                out.rows.push(row);
            }
            let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
            out.details.push(json!({ "copies": copies, "errors": errors, "ratios": ratios }));
        }
    }
    out.wall_time = start.elapsed().as_secs_f64();
    Ok(out)
}

fn prover_label(p: &ProverSpec) -> String {
    serde_json::to_value(p).ok().and_then(|v| v.get("name").and_then(|x| x.as_str()).map(String::from)).unwrap_or_default()
}

/// Execute every scenario (repetitions in parallel on the current rayon pool).
pub fn run_scenarios(file: &ScenarioFile, ov: &Overrides) -> Result<RunReport> {
    let file = apply_overrides(file, ov);
    validate(&file)?;
    let jobs: Vec<Job> = file
        .scenarios
        .iter()
        .enumerate()
        .flat_map(|(index, s)| (0..s.repetitions).map(move |r| Job { index, scenario: s, seed: s.seed.wrapping_add(r as u64) }))
        .collect();
    let start = Instant::now();
    let outputs: Vec<(usize, u64, JobOutput)> = jobs.par_iter().map(|j| run_job(j).map(|o| (j.index, j.seed, o))).collect::<Result<_>>()?;
    let total_time = start.elapsed().as_secs_f64();

    let mut rows: Vec<ReportRow> = outputs.iter().flat_map(|(_, _, o)| o.rows.iter().cloned()).collect();
    rows.sort_by(|a, b| (a.scenario_id.as_str(), a.seed).cmp(&(b.scenario_id.as_str(), b.seed)));

    let soundness_violations = outputs.iter().flat_map(|(_, _, o)| &o.soundness).map(|r| r.violations).sum::<usize>();
    let contract_breaches = outputs.iter().flat_map(|(_, _, o)| &o.contracts).filter(|c| !c.holds).count();

    let mut scenarios = Vec::new();
    for (i, s) in file.scenarios.iter().enumerate() {
        let mine: Vec<&JobOutput> = outputs.iter().filter(|(j, _, _)| *j == i).map(|(_, _, o)| o).collect();
        let srows: Vec<&ReportRow> = rows.iter().filter(|r| r.scenario_id == s.id).collect();
        let mut aggregates = serde_json::Map::new();
        for col in AGGREGATED {
            // Aggregate the printed values so the CSV and the summary agree exactly.
            let vals: Vec<f64> =
                srows.iter().filter_map(|r| r.numeric(col)).map(|x| fmt_sig(x).parse::<f64>().expect("formatted float")).collect();
            if vals.is_empty() {
                continue;
            }
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            aggregates.insert(col.into(), json!({ "count": vals.len(), "mean": mean, "min": min, "max": max }));
        }
        let sound: Vec<&SoundnessReport> = mine.iter().flat_map(|o| &o.soundness).collect();
        scenarios.push(json!({
            "id": s.id,
            "kind": s.kind.name(),
            "repetitions": s.repetitions,
            "rows": srows.len(),
            "wall_time_seconds": mine.iter().map(|o| o.wall_time).sum::<f64>(),
            "aggregates": aggregates,
            "soundness": {
                "checked": sound.iter().map(|r| r.checked).sum::<usize>(),
                "violations": sound.iter().map(|r| r.violations).sum::<usize>(),
                "worst_margin": sound.iter().map(|r| r.worst_margin).filter(|x| x.is_finite()).fold(None, |a: Option<f64>, x| Some(a.map_or(x, |a| a.max(x)))),
            },
            "contracts": mine.iter().flat_map(|o| &o.contracts).collect::<Vec<_>>(),
            "details": mine.iter().flat_map(|o| o.details.iter().cloned()).collect::<Vec<_>>(),
        }));
    }
    let summary = json!({
        "schema": "qsynth-summary/1",
        "scenario_file": file,
        "overrides": ov,
        "csv_columns": CSV_COLUMNS,
        "rows": rows.len(),
        "theorem_checks": {
            "soundness_violations": soundness_violations,
            "contract_breaches": contract_breaches,
            "passed": soundness_violations == 0 && contract_breaches == 0,
        },
        "scenarios": scenarios,
        "wall_time_seconds": total_time,
    });
    Ok(RunReport { rows, summary, soundness_violations, contract_breaches })
}

/// The CSV body (header row plus records) without the timestamp comment.
pub fn csv_body(rows: &[ReportRow]) -> std::result::Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.write_record(r.cells())?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("utf-8 cells"))
}

/// Write `report.csv` (timestamp comment, then the body) and `summary.json` into `dir`.
pub fn write_outputs(dir: &Path, report: &RunReport) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let stamp = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let body = csv_body(&report.rows).map_err(std::io::Error::other)?;
    std::fs::write(dir.join("report.csv"), format!("# qsynth report generated_unix={stamp}\n{body}"))?;
    let json = serde_json::to_string_pretty(&report.summary).map_err(std::io::Error::other)?;
    std::fs::write(dir.join("summary.json"), json + "\n")
}

// ---------------------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------------------

/// `(name, category, description)` of every built-in name.
pub const CATALOG: &[(&str, &str, &str)] = &[
    ("state-synthesis", "scenario", "Run the state protocol once per repetition. Fields: target, protocol {preset desk|proof, q, t, ell, m, mode exact|trajectory}, variant two-register|flawed, prover, subverifier, instances (amplification)."),
    ("unitary-synthesis", "scenario", "Apply a unitary to an input state through the synthesized program state and time register. Fields: unitary, input, config {search_bits, search_pe_bits, pe_bits, time_bits, ell, rounds_per_qubit, copies, budget_q, subverifier}, prover."),
    ("attack-gallery", "scenario", "Run every listed prover (default: honest, phase-attack, entanglement-attack, orthogonal-b, random-unitary) against both the flawed and the two-register protocol. Fields: target, protocol, provers, subverifier."),
    ("tomography-bench", "scenario", "Worst cp and ph guarantee errors on a target. Fields: target, backend {sampled, m, ell, trials}."),
    ("lmr-bench", "scenario", "Density-matrix exponentiation error against copy count. Fields: rho_diag, time (turns), input, copies."),
    ("constant-round", "scenario", "The constant-round variant with all stages sent up front. Fields: target, protocol, prover honest|orthogonal-s {stage}|wrong-final, subverifier."),
    ("zero", "target", "|0^n>. Parameters: n."),
    ("plus", "target", "|+>^n. Parameters: n."),
    ("ghz", "target", "(|0^n> + |1^n>)/sqrt(2). Parameters: n."),
    ("w", "target", "Uniform superposition of weight-one strings. Parameters: n."),
    ("random-state", "target", "Haar-random state. Parameters: n, seed."),
    ("random-circuit", "target", "Brickwork of random two-qubit gates on |0^n>. Parameters: n, depth, seed."),
    ("amplitudes", "target", "Explicit amplitudes, normalized on load. Parameters: re, im (optional)."),
    ("gate", "unitary", "A named gate: identity, z, x, h, s, t, quarter-identity, quarter-half, i-minus-one, cz, identity-2. Parameters: name."),
    ("diag-unitary", "unitary", "diag(e^{2 pi i a_j}). Parameters: angles (turns, power-of-two count)."),
    ("random-unitary", "unitary", "Haar-random unitary. Parameters: n (1..=3), seed."),
    ("honest", "prover", "Follows the protocol with the exact oracle answers."),
    ("phase-attack", "prover", "Multiplies basis string x of the level-`level` register by e^{2 pi i phases[x]} before answering. Parameters: phases (turns, 2^level entries), level."),
    ("entanglement-attack", "prover", "Copies the grown qubits into a private register after each listed level, dephasing the output. Parameters: levels."),
    ("lying", "prover", "Answers the listed instances with false values. Parameters: lies, a list of [len, x, v]."),
    ("orthogonal-b", "prover", "Sends a B register orthogonal to the honest stage at one level. Parameters: level."),
    ("random-unitary-prover", "prover", "Replaces every prover unitary by a seeded Haar-random one. Scenario name: random-unitary. Parameters: seed."),
    ("rogue", "prover", "Writes into the verifier's B register. The engine rejects the write and the run aborts with a prover-contract error (exit 1)."),
    ("coin-flip", "subverifier", "True instances set the flag to |1>; false ones to |+> (soundness 1/2). JSON: \"coin-flip\"."),
    ("tunable", "subverifier", "False instances are accepted with probability s in [0, 1]. JSON: {\"tunable\": {\"soundness\": s}}."),
];

pub fn list_text() -> String {
    let mut out = String::new();
    let groups = [
        ("scenario", "scenarios"),
        ("target", "targets"),
        ("unitary", "unitaries"),
        ("prover", "provers"),
        ("subverifier", "subverifiers"),
    ];
    for (cat, heading) in groups {
        out.push_str(&format!("{heading}:\n"));
        for (name, _, _) in CATALOG.iter().filter(|(_, c, _)| *c == cat) {
            out.push_str(&format!("  {name}\n"));
        }
    }
    out
}

pub fn describe_text(name: &str) -> Option<String> {
    CATALOG.iter().find(|(n, _, _)| *n == name).map(|(n, c, d)| format!("{n} ({c})\n{d}\n"))
}

// ---------------------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------------------

#[derive(Parser, Debug)]
#[command(name = "qsynth", version, about = "Run interactive state and unitary synthesis scenarios")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a scenario file and write report.csv and summary.json.
    Run {
        /// Scenario file (JSON, schema "qsynth-scenario/1").
        config: PathBuf,
        /// Output directory for report.csv and summary.json.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Override the run mode of every scenario.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Override the base seed of every scenario; repetition j uses seed + j.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List built-in scenario kinds, targets, unitaries, provers and sub-verifiers.
    List,
    /// Describe one built-in name.
    Describe { name: String },
}

/// Parse arguments, run, print diagnostics and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::List => {
            print!("{}", list_text());
            0
        }
        Command::Describe { name } => match describe_text(&name) {
            Some(t) => {
                print!("{t}");
                0
            }
            None => {
                eprintln!("error: unknown name `{name}` (see `qsynth list`)");
                1
            }
        },
        Command::Run { config, out, threads, mode, seed } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return 1;
                }
            };
            let file = match parse_scenarios(&text) {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("error: {e}");
                    return 1;
                }
            };
            if threads == Some(0) {
                eprintln!("error: --threads must be at least 1");
                return 1;
            }
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build() {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: thread pool: {e}");
                    return 1;
                }
            };
            let ov = Overrides { mode, seed };
            let report = match pool.install(|| run_scenarios(&file, &ov)) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return 1;
                }
            };
            if let Err(e) = write_outputs(&out, &report) {
                eprintln!("error: cannot write outputs to {}: {e}", out.display());
                return 1;
            }
            eprintln!("wrote {} rows to {}", report.rows.len(), out.join("report.csv").display());
            if !report.theorem_checks_pass() {
                eprintln!(
                    "theorem check failed: {} soundness violations, {} contract breaches",
                    report.soundness_violations, report.contract_breaches
                );
            }
            report.exit_code()
        }
    }
}
