//! Exact small-register simulation of interactive quantum state synthesis
//! and unitary synthesis protocols.
//!
//! The crate is organised bottom-up:
//!
//! * [`qcore`]: dense statevectors and density matrices over named register
//!   layouts, dyadic rationals and dyadic phases, trace distance.
//! * [`primitives`]: swap test, phase estimation, controlled grow and phase
//!   gates, maximally entangled states, subspace recognizers.
//! * [`tomography`]: acceptance-probability estimation of described circuits
//!   and the conditional-probability (`cp`) and relative-phase (`ph`) oracles,
//!   each with an exact and a sampling backend.
//! * [`stateproto`]: the interactive verifier with grow and test rounds, the
//!   single-register protocol and its attacks, trusted-oracle synthesis,
//!   amplification, the constant-round variant and the soundness diagnostic.
//! * [`uniproto`]: canonical program states, stability shifting, the
//!   program-state generator, density-matrix exponentiation and the unitary
//!   synthesis verifier.
//! * [`cli`]: JSON scenarios, CSV and JSON reports, used by the `qsynth` binary.
//!
//! Runnable walkthroughs live in `examples/` (`cargo run --example <name>`).
//!
//! ```
//! use qsynth::qcore::{QuantumState, RegisterLayout};
//! use qsynth::primitives::swap_test;
//!
//! let layout = RegisterLayout::new([("A", 1), ("B", 1)]).unwrap();
//! let s = QuantumState::basis(layout, 0b01).unwrap();
//! let out = swap_test(&s, &["A"], &["B"]).unwrap();
//! assert!((out.symmetric_prob - 0.5).abs() < 1e-12);
//! ```

pub mod cli;
pub mod error;
pub mod primitives;
pub mod qcore;
pub mod rng;
pub mod stateproto;
pub mod tomography;
pub mod uniproto;

pub use error::{Error, Result};
