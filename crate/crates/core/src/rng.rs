//! Seeded random streams.
//!
//! Every stream is a Xoshiro256++ generator. A stream for `(seed, key)` is
//! seeded through SplitMix64 from `splitmix64(seed) ^ splitmix64(key + φ)`,
//! so per-row streams are independent of the order rows are generated in.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Stream = Xoshiro256PlusPlus;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The stream for `seed` alone.
pub fn stream(seed: u64) -> Stream {
    Stream::seed_from_u64(splitmix64(seed))
}

/// The substream keyed by `(seed, key)`.
pub fn substream(seed: u64, key: u64) -> Stream {
    Stream::seed_from_u64(splitmix64(seed) ^ splitmix64(key.wrapping_add(GOLDEN)))
}
