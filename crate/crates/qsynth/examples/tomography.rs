//! Conditional-probability and relative-phase tomography of random states with the exact
//! and the sampling backends.
//!
//! `cargo run --release --example tomography`

use qsynth::qcore::random_state;
use qsynth::tomography::{cp_max_error, ph, ph_max_error, OracleBackend};

fn main() -> qsynth::Result<()> {
    let m = 6;
    println!("precision m = {m}: cp bound {:.3e}, ph bound {:.3e}", 2f64.powi(-m), 2.0 * 2f64.powi(-m));
    for seed in 0..4u64 {
        let psi = random_state(2, seed)?;
        let exact = OracleBackend::exact(m as u32).with_output_precision(m as u32);
        let sampled = OracleBackend::sampled(m as u32, seed).with_output_precision(m as u32);
        println!(
            "seed {seed}: exact cp {:.3e} ph {:.3e} | sampled ({} trials) cp {:.3e}",
            cp_max_error(&psi, &exact)?,
            ph_max_error(&psi, &exact)?,
            sampled.trial_count().unwrap_or(0),
            cp_max_error(&psi, &sampled)?,
        );
    }
    let psi = random_state(2, 0)?;
    let phases = ph(&psi, &OracleBackend::exact(m as u32).with_output_precision(m as u32))?;
    let turns: Vec<String> = phases.ph.iter().map(|p| format!("{}/{}", p.r.numerator(), 1u64 << m)).collect();
    println!("seed 0 phases in turns, relative to string {}: [{}]", phases.y_ref, turns.join(", "));
    Ok(())
}
