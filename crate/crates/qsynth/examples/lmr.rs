//! Density-matrix exponentiation with `k` program copies: the error to `e^(2 pi i t rho)`
//! shrinks roughly as `1/k`.
//!
//! `cargo run --release --example lmr`

use qsynth::qcore::linalg::{c, diag};
use qsynth::qcore::{plus_state, DensityMatrix, RegisterLayout};
use qsynth::uniproto::{calibrate_copies, lmr_error};

fn main() -> qsynth::Result<()> {
    let rho = DensityMatrix::new(RegisterLayout::single("A", 1), diag(&[c(0.0, 0.0), c(1.0, 0.0)]))?;
    let tau = DensityMatrix::from_pure(&plus_state(1)?);
    let mut prev = None;
    for k in [25, 50, 100, 200, 400, 800] {
        let e = lmr_error(&tau, &rho, 0.5, k)?;
        let ratio = prev.map(|p: f64| format!("{:.3}", p / e)).unwrap_or_default();
        println!("k = {k:>4}: error {e:.5} {ratio}");
        prev = Some(e);
    }
    let (k, err) = calibrate_copies(&rho, 0.5, &[tau], 0.01, 50, 1 << 16)?;
    println!("calibrated to error 0.01: k = {k}, error {err:.5}");
    Ok(())
}
