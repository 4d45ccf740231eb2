//! Seed derivation for independent deterministic streams.

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for stream `tag` of `seed`.
pub fn derive(seed: u64, tag: u64) -> u64 {
    mix(mix(seed) ^ tag.wrapping_mul(0xd6e8_feb8_6659_fd93))
}
