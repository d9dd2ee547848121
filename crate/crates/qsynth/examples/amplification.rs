//! Parallel repetition: accepting probabilities multiply across instances while the
//! honest prover keeps acceptance one.
//!
//! `cargo run --release --example amplification`

use qsynth::qcore::ghz_state;
use qsynth::stateproto::{amplified_protocol, honest_prover, OrthogonalBProver, ProtocolConfig, ProverStrategy, SubVerifier, Target};

fn main() -> qsynth::Result<()> {
    let t = Target::exact(ghz_state(2)?, 10)?;
    let subv = SubVerifier::coin_flip(t.table());
    let cfg = ProtocolConfig::desk(2);
    let honest: Vec<Box<dyn ProverStrategy>> = vec![Box::new(honest_prover(t.approx.clone()))];
    let cheat: Vec<Box<dyn ProverStrategy>> = vec![Box::new(OrthogonalBProver { base: honest_prover(t.approx.clone()), level: 1 })];
    for instances in 1..=4 {
        let h = amplified_protocol(&t, &honest, &subv, &cfg, instances)?;
        let c = amplified_protocol(&t, &cheat, &subv, &cfg, instances)?;
        println!("{instances} instance(s): honest accept {:.6}, orthogonal-b accept {:.6}", h.accept_probability, c.accept_probability);
    }
    Ok(())
}
