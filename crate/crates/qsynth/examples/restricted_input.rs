//! Reduction of a unitary promised only on a subspace to a program state on a doubled
//! register.
//!
//! `cargo run --example restricted_input`

use qsynth::primitives::recognizer_from_projector;
use qsynth::qcore::linalg::{c, diag, turn};
use qsynth::uniproto::restricted_input_reduction;

fn main() -> qsynth::Result<()> {
    let u = diag(&[turn(0.1), turn(0.35), c(1.0, 0.0), turn(0.6)]);
    for (name, entries) in [("span{|00>}", [1.0, 0.0, 0.0, 0.0]), ("span{|00>,|01>}", [1.0, 1.0, 0.0, 0.0]), ("everything", [1.0; 4])] {
        let pi = diag(&entries.map(|x| c(x, 0.0)));
        let red = restricted_input_reduction(&u, &recognizer_from_projector(&pi)?)?;
        println!(
            "{name:>16}: dim S' = {}, postselection probability {:.4}, invariance defect {:.1e}",
            red.dim,
            red.postselection_probability,
            red.verify(),
        );
    }
    Ok(())
}
