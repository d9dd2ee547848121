//! Canonical program states, stability shifting and the program-state generator.
//!
//! `cargo run --release --example program_state`

use qsynth::tomography::OracleBackend;
use qsynth::uniproto::{canonical_program, is_stable, program_state_generator, shifted, stability_shift, unitary_corpus};

fn main() -> qsynth::Result<()> {
    for (name, u) in unitary_corpus() {
        let n = u.nrows().trailing_zeros() as usize;
        let before = is_stable(&u, n)?;
        let rep = stability_shift(&u, n, 3 * n as u32 + 2, &OracleBackend::exact(12))?;
        let phi = rep.shift.map(|s| s.value()).unwrap_or(0.0);
        let us = shifted(&u, phi);
        let prog = canonical_program(&us)?;
        print!(
            "{name:>15}: stable {} -> shift {phi:.5} (scanned {}), t = {:.4}, contract error {:.1e}",
            before.stable,
            rep.scanned,
            prog.t,
            prog.contract_error(&us, &[u.column(0).into_owned(), u.column(1).into_owned()]),
        );
        match program_state_generator(&us, 6) {
            Ok(g) => println!(", generator accept {:.4}, t~ {:.4}", g.accept_probability, g.t_tilde),
            Err(e) => println!(", generator: {e}"),
        }
    }
    Ok(())
}
