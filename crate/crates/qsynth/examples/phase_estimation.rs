//! Phase estimation on eigenvectors of diagonal unitaries, with dyadic and non-dyadic
//! eigenphases.
//!
//! `cargo run --example phase_estimation`

use qsynth::primitives::phase_estimation_distribution;
use qsynth::qcore::linalg::{diag, turn};
use qsynth::qcore::{CVec, C64};

fn main() -> qsynth::Result<()> {
    let m = 4;
    let one = CVec::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
    for phase in [0.125, 0.3] {
        let u = diag(&[C64::new(1.0, 0.0), turn(phase)]);
        let r = phase_estimation_distribution(&u, m, &one)?;
        let (best, p) = r.probabilities.iter().enumerate().fold((0, 0.0), |acc, (k, &p)| if p > acc.1 { (k, p) } else { acc });
        println!("phase {phase}: most likely reading {best}/{} with probability {p:.4}", 1 << m);
        let shown: Vec<String> = r.probabilities.iter().map(|p| format!("{p:.3}")).collect();
        println!("  distribution [{}]", shown.join(", "));
    }
    Ok(())
}
