//! Swap test on pairs of single-qubit states: the symmetric outcome has probability
//! `(1 + |<a|b>|^2) / 2`.
//!
//! `cargo run --example swap_test`

use qsynth::primitives::swap_test;
use qsynth::qcore::{CVec, QuantumState, RegisterLayout, C64};

fn qubit(name: &str, theta: f64) -> QuantumState {
    let v = CVec::from_vec(vec![C64::new(theta.cos(), 0.0), C64::new(theta.sin(), 0.0)]);
    QuantumState::new(RegisterLayout::single(name, 1), v).unwrap()
}

fn main() -> qsynth::Result<()> {
    println!("{:>8} {:>12} {:>12}", "angle", "symmetric", "predicted");
    for step in 0..=4 {
        let theta = step as f64 * std::f64::consts::FRAC_PI_8;
        let pair = qubit("A", 0.0).tensor(&qubit("B", theta))?;
        let out = swap_test(&pair, &["A"], &["B"])?;
        let overlap = theta.cos().powi(2);
        println!("{theta:>8.4} {:>12.6} {:>12.6}", out.symmetric_prob, (1.0 + overlap) / 2.0);
    }
    Ok(())
}
