//! Seed derivation for independent deterministic substreams.

fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a substream seed from a master seed and an index.
///
/// The master is diffused first so that nearby masters do not merely
/// permute each other's substreams, then XORed with the index and
/// diffused again. Parallel loops seed each work item with
/// `mix(master, i)` and produce the same bytes as the sequential
/// fallback.
pub(crate) fn mix(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index)
}
