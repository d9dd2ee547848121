//! Interactive synthesis of a target state from an untrusted prover.
//!
//! The joint state of verifier and prover is simulated by [`engine::SparseState`], which
//! keeps discarded registers as an orthogonal environment label.

pub mod approx;
pub mod config;
pub mod constant_round;
pub mod engine;
pub mod protocol;
pub mod provers;
pub mod subverifier;

pub use approx::{build_target_approximation, exact_approximation, OracleTable, TargetApproximation};
pub use config::{ProtocolConfig, RunMode};
pub use constant_round::{constant_round_protocol, ConstantRoundProver};
pub use protocol::{
    amplified_protocol, amplify, attach_distances, check_soundness_bound, flawed_protocol, run_protocol, run_protocol_with,
    trusted_oracle_synthesis, LeafRecord, LeafVisitor, LemmaCheck, LemmaStatus, ProtocolTranscript, RejectCause, RoundRecord, RunOptions,
    RunResult, SoundnessReport, Target, TrustedSynthesis, UNDEFINED_OUTPUT_EPS,
};
pub use provers::{
    entanglement_attack_prover, honest_prover, lying_prover, phase_attack_prover, EntanglementAttack, HonestProver, LyingProver,
    OrthogonalBProver, PhaseAttack, ProverIo, ProverRegs, ProverStrategy, RandomUnitaryProver, RogueProver, RoundCtx,
};
pub use subverifier::{ContractReport, SubVerifier, SubVerifierKind};
