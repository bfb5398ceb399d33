//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by the
//! run seed and selected by a stream index, so the value drawn for sample `i`
//! never depends on how the work was split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines a key with a sub-index into a new 64-bit key.
#[inline]
pub fn derive_key(key: u64, index: u64) -> u64 {
    mix64(mix64(key) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Independent stream number `index` for the given seed.
pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed));
    rng.set_stream(index);
    rng
}

/// Stream addressed by a two-level index, e.g. (generation, slot).
pub fn stream2(seed: u64, major: u64, minor: u64) -> StreamRng {
    stream(derive_key(seed, major), minor)
}
