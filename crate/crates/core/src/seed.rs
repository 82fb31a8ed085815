//! Deterministic seed derivation.
//!
//! Every random draw in the crate flows from an explicit `u64` seed plus a
//! stream index, so any subset of work (one dataset sample, one epoch
//! shuffle) is reproducible independently of the rest.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Expand `(seed, stream)` into a 32-byte ChaCha seed.
///
/// The mapping is fixed: changing either input changes the seed, and two
/// distinct `(seed, stream)` pairs never collide.
pub fn derive_seed(seed: u64, stream: u64) -> [u8; 32] {
    let mut out = [0u8; 32];
    out[..8].copy_from_slice(&seed.to_le_bytes());
    out[8..16].copy_from_slice(&stream.to_le_bytes());
    // Mix a fixed tag so (0, 0) is not the all-zero seed.
    out[16..24].copy_from_slice(&0x6772_6964_6361_7363u64.to_le_bytes());
    out[24..32].copy_from_slice(&(seed ^ stream.rotate_left(32)).to_le_bytes());
    out
}

/// Deterministic RNG for the given seed and stream index.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(derive_seed(seed, stream))
}
