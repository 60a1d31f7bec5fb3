//! Deterministic seed derivation for independent RNG streams.

/// SplitMix64 scramble.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for stream `stream`, element `index`, derived from a run seed.
/// Distinct (stream, index) pairs give independent-looking streams, and the
/// derivation is stable across runs and thread schedules.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_mul(0x9E37_79B9).wrapping_add(index)))
}
