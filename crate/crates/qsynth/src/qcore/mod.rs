//! Dense state engine over named registers and the dyadic number types.

mod density;
mod dyadic;
mod layout;
pub mod linalg;
mod state;
pub mod states;

pub use density::{fidelity_bound_check, reduce, trace_distance, trace_distance_mat, DensityMatrix, FidelityBound};
pub use dyadic::{
    delta, round_to_dyadic, round_to_dyadic_phase, round_to_dyadic_probability, DyadicPhase, DyadicProbability, DyadicRational, TorusAngle,
};
pub use layout::RegisterLayout;
pub use linalg::{CMat, CVec, C64};
pub use state::{Branch, QuantumState, BRANCH_EPS};
pub use states::{ghz_state, plus_state, random_circuit_state, random_state, w_state, zero_state};

/// Free-function form of [`QuantumState::tensor`].
pub fn tensor(a: &QuantumState, b: &QuantumState) -> crate::Result<QuantumState> {
    a.tensor(b)
}

/// Free-function form of [`QuantumState::apply_unitary`].
pub fn apply_unitary(s: &QuantumState, u: &CMat, targets: &[&str]) -> crate::Result<QuantumState> {
    s.apply_unitary(u, targets)
}

/// Free-function form of [`DensityMatrix::partial_trace`].
pub fn partial_trace(d: &DensityMatrix, discard: &[&str]) -> crate::Result<DensityMatrix> {
    d.partial_trace(discard)
}

/// Free-function form of [`QuantumState::measure_register`].
pub fn measure_register(s: &QuantumState, target: &str) -> crate::Result<Vec<Branch>> {
    s.measure_register(target)
}
