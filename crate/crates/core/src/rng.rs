//! Deterministic random substreams.
//!
//! Every stochastic routine takes its generator from a `(seed, index)` pair
//! so that serial and parallel executions draw identical numbers. The child
//! seed is
//!
//! ```text
//! child = splitmix64(seed ^ splitmix64(index ^ 0x5851_f42d_4c95_7f2d))
//! ```
//!
//! and the child generator is `ChaCha8Rng::seed_from_u64(child)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// The splitmix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for substream `index` of `seed`.
#[inline]
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index ^ 0x5851_f42d_4c95_7f2d))
}

/// Generator for substream `index` of `seed`.
pub fn substream(seed: u64, index: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, index))
}
