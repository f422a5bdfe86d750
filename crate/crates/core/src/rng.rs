//! Counter-based random streams.
//!
//! A stream is addressed by `(master_seed, index)`: the seed keys ChaCha8 and
//! the index selects the ChaCha stream, so the numbers drawn for trial `i`
//! never depend on which worker ran it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream(master_seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Derives a sub-seed, so independent experiments sharing one master seed
/// do not reuse streams.
pub fn derive_seed(master_seed: u64, label: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = master_seed ^ label.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
