//! Deterministic seed fan-out.
//!
//! Every randomized component derives its own seed from the single
//! user-facing seed plus a stable text label, so adding or reordering
//! components never perturbs the streams of the others, and identical
//! (seed, label) pairs always yield identical streams — including across
//! experiment types that evaluate the same model on the same data.

/// Derives a child seed from a master seed and a label. FNV-1a hashes the
/// label; a splitmix64 finalizer mixes in the master seed so that nearby
/// masters produce unrelated children.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = FNV_OFFSET;
    for byte in label.as_bytes() {
        h ^= u64::from(*byte);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(master ^ h)
}

fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
