//! End-to-end unitary synthesis: stability shift, program-state generation, interactive
//! synthesis of the program and time registers, then density-matrix exponentiation.
//!
//! `cargo run --release --example unitary_synthesis`

use qsynth::qcore::linalg::pauli_z;
use qsynth::qcore::{plus_state, CMat};
use qsynth::uniproto::{honest_factory, unitary_qip_apply, UnitaryQipConfig};

fn main() -> qsynth::Result<()> {
    let phi = plus_state(1)?;
    let cfg = UnitaryQipConfig::default();
    for (name, u) in [("identity", CMat::identity(2, 2)), ("z", pauli_z())] {
        let r = unitary_qip_apply(&u, &phi, &cfg, honest_factory().as_ref())?;
        println!(
            "{name}: accept {:.6}, td to U|phi> {:.4}, zero time {}, shift {:.4}, copies {}, calibration error {:.4}",
            r.accept_probability,
            r.td_to_ideal.unwrap_or(f64::NAN),
            r.zero_time,
            r.shift,
            r.copies,
            r.calibration_error,
        );
    }
    Ok(())
}
