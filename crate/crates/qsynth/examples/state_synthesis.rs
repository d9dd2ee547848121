//! Honest runs of the two-register state synthesis protocol on the standard target
//! families, in exact mode and as a single sampled trajectory.
//!
//! `cargo run --release --example state_synthesis`

use qsynth::qcore::{ghz_state, plus_state, random_circuit_state, w_state};
use qsynth::stateproto::{honest_prover, run_protocol, ProtocolConfig, RunMode, SubVerifier, Target};

fn main() -> qsynth::Result<()> {
    let targets = [("plus1", plus_state(1)?), ("ghz2", ghz_state(2)?), ("w2", w_state(2)?), ("circuit2", random_circuit_state(2, 3, 5)?)];
    for (name, state) in targets {
        let t = Target::exact(state, 10)?;
        let n = t.n();
        let subv = SubVerifier::coin_flip(t.table());
        let prover = honest_prover(t.approx.clone());
        let exact = run_protocol(&t, &prover, &subv, &ProtocolConfig::desk(n))?;
        let traj = run_protocol(&t, &prover, &subv, &ProtocolConfig::desk(n).with_mode(RunMode::Trajectory { seed: 7 }))?;
        println!(
            "{name:>9}: accept {:.6}, td to target {:.3e}, td to approximation {:.3e}, {} branches; trajectory accept {}",
            exact.accept_probability,
            exact.td_to_target.unwrap_or(f64::NAN),
            exact.td_to_approx_target.unwrap_or(f64::NAN),
            exact.leaves.len(),
            traj.accept_probability,
        );
    }
    Ok(())
}
