//! Unitary synthesis: canonical program states, stability, the program-state generator,
//! density-matrix exponentiation, the interactive verifier and the restricted-input
//! reduction.

pub mod generator;
pub mod lmr;
pub mod program;
pub mod qip;
pub mod restricted;

pub use generator::{
    estimate_evolution_time, program_state_generator, repeat_until_success, repeat_until_success_sampled, EvolutionTime, GeneratorOutput,
    RepeatOutcome,
};
pub use lmr::{calibrate_copies, lmr_apply, lmr_error, lmr_ideal};
pub use program::{
    action_dimension, canonical_program, default_search_pe_bits, eigen_decompose, is_stable, mixed_phase_distribution, shifted,
    stability_shift, stability_shift_with, EigenData, ProgramState, StabilityReport, CLUSTER_TOL,
};
pub use qip::{honest_factory, unitary_qip_apply, ProverFactory, UnitaryQipConfig, UnitaryRunResult};
pub use restricted::{restricted_input_reduction, restricted_program_state, RestrictedInput};

use crate::qcore::linalg::{diag, hadamard, pauli_x, pauli_z, turn, CMat, C64};

/// Small unitaries used by tests, examples and the CLI.
pub fn unitary_corpus() -> Vec<(&'static str, CMat)> {
    let one = C64::new(1.0, 0.0);
    let s = diag(&[one, C64::new(0.0, 1.0)]);
    let t = diag(&[one, turn(0.125)]);
    let cz = diag(&[one, one, one, -one]);
    vec![
        ("identity", CMat::identity(2, 2)),
        ("z", pauli_z()),
        ("x", pauli_x()),
        ("h", hadamard()),
        ("s", s),
        ("t", t),
        ("quarter-identity", diag(&[turn(0.25), turn(0.25)])),
        ("quarter-half", diag(&[turn(0.25), turn(0.5)])),
        ("i-minus-one", diag(&[C64::new(0.0, 1.0), -one])),
        ("cz", cz),
        ("identity-2", CMat::identity(4, 4)),
    ]
}
