//! Seeded, counter-based random streams.
//!
//! A stream is a ChaCha8 generator keyed by a 64-bit seed with a 64-bit
//! stream id, so sample `i` of a run always draws from stream `i` no matter
//! which thread evaluates it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::ChaCha8Rng as StreamRng;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finaliser applied to `base ^ golden·(id + 1)`.
///
/// This is the documented per-trial seed: `trial_seed(base, id)`.
pub fn trial_seed(base: u64, id: u64) -> u64 {
    let mut z = base ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(id.wrapping_add(1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
