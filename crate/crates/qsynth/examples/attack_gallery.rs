//! Dishonest provers against the single-register protocol and the two-register protocol.
//! The phase attack fools the single-register protocol with a far-off output; the
//! two-register protocol either rejects or keeps the per-branch bound.
//!
//! `cargo run --release --example attack_gallery`

use qsynth::cli::ProverSpec;
use qsynth::qcore::{ghz_state, plus_state};
use qsynth::stateproto::{check_soundness_bound, flawed_protocol, run_protocol, ProtocolConfig, SubVerifier, Target};

fn main() -> qsynth::Result<()> {
    for (name, state) in [("plus1", plus_state(1)?), ("ghz2", ghz_state(2)?)] {
        let t = Target::exact(state, 10)?;
        let n = t.n();
        let subv = SubVerifier::coin_flip(t.table());
        let cfg = ProtocolConfig::desk(n);
        println!("target {name}");
        for spec in ProverSpec::gallery(n, 11) {
            let p = spec.build(&t)?;
            let flawed = flawed_protocol(&t, p.as_ref(), &subv, &cfg)?;
            let two = run_protocol(&t, p.as_ref(), &subv, &cfg)?;
            let bound = check_soundness_bound(&two);
            println!(
                "  {:<28} single-register accept {:.4} td {:.4} | two-register accept {:.4} td {:.4}, bound holds on {}/{} branches",
                p.name(),
                flawed.accept_probability,
                flawed.td_to_target.unwrap_or(f64::NAN),
                two.accept_probability,
                two.td_to_target.unwrap_or(f64::NAN),
                bound.checked - bound.violations,
                bound.checked,
            );
        }
    }
    Ok(())
}
