//! Seed derivation for splitting one run seed into independent, platform-stable
//! RNG streams. All randomness in this crate flows through these helpers plus
//! ChaCha, so identical seeds reproduce identical runs on any target.

/// SplitMix64 finalizer. Stateless; maps any 64-bit value to a well-mixed one.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent seed for (`stream`, `item`) under `base`.
///
/// Used to give every batch item its own RNG so that parallel execution order
/// cannot change what gets drawn.
pub fn derive_seed(base: u64, stream: u64, item: u64) -> u64 {
    splitmix64(splitmix64(base ^ splitmix64(stream)).wrapping_add(splitmix64(item)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_is_stable() {
        // Known-answer values pin the stream layout across releases.
        assert_eq!(splitmix64(0), 0xe220a8397b1dcdaf);
        assert_eq!(splitmix64(1), 0x910a2dec89025cc1);
    }

    #[test]
    fn derived_seeds_differ_across_items_and_streams() {
        let a = derive_seed(42, 0, 0);
        let b = derive_seed(42, 0, 1);
        let c = derive_seed(42, 1, 0);
        let d = derive_seed(43, 0, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
        assert_eq!(a, derive_seed(42, 0, 0));
    }
}
