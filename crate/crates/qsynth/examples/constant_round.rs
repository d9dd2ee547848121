//! The constant-round variant: the prover commits to every stage up front and a single
//! random step is checked.
//!
//! `cargo run --release --example constant_round`

use qsynth::qcore::ghz_state;
use qsynth::qcore::linalg::complete_unitary;
use qsynth::stateproto::{constant_round_protocol, ConstantRoundProver, ProtocolConfig, SubVerifier, Target};

fn main() -> qsynth::Result<()> {
    let t = Target::exact(ghz_state(2)?, 10)?;
    let subv = SubVerifier::coin_flip(t.table());
    let cfg = ProtocolConfig::desk(2);

    let honest = ConstantRoundProver::honest(&t);
    let r = constant_round_protocol(&t, &honest, &subv, &cfg)?;
    println!("honest: accept {:.6}, td to approximation {:.3e}", r.accept_probability, r.td_to_approx_target.unwrap_or(f64::NAN));

    let mut wrong = ConstantRoundProver::honest(&t);
    wrong.s_final = complete_unitary(&t.approx.final_state)?.column(1).into_owned();
    let r = constant_round_protocol(&t, &wrong, &subv, &cfg)?;
    println!("orthogonal final register: accept {:.6}", r.accept_probability);
    for l in &r.leaves {
        println!("  k = {}, grow = {}: survival {:.3}", l.transcript.k_trace[0], l.transcript.b[0], l.survival);
    }
    Ok(())
}
