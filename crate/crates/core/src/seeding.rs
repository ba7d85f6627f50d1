//! Counter-based seed derivation.
//!
//! Every run or replicate gets its own ChaCha20 stream keyed by the master
//! seed, so results do not depend on scheduling order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Generator for the `stream`-th independent substream of `master`.
pub fn stream_rng(master: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

/// A `u64` seed for the `index`-th child of `master`, stable across platforms.
pub fn child_seed(master: u64, index: u64) -> u64 {
    use rand::RngCore;
    stream_rng(master, index.wrapping_add(1 << 32)).next_u64()
}
