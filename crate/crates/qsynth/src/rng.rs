//! Counter-based reproducible randomness.
//!
//! Every random consumer derives its own ChaCha stream from a base seed and a
//! list of labels, so results do not depend on execution order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a base seed with a sequence of labels into a new 64-bit seed.
pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(splitmix64(seed), |acc, &l| splitmix64(acc ^ splitmix64(l)))
}

/// A ChaCha20 generator keyed by `seed` and positioned on the stream named by `labels`.
pub fn stream(seed: u64, labels: &[u64]) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(derive_seed(0, labels));
    rng
}

/// Hash a string label into a stream label.
pub fn label(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}
