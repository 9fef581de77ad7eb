//! Small shared helpers.

/// SplitMix64 step: a cheap, high-quality 64-bit mixer. Used to derive
/// independent per-repeat seeds and deterministic start vectors without
/// dragging a full RNG into places that only need a few mixed words.
pub(crate) fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Map a mixed 64-bit word to a float in (-1, 1), for deterministic
/// power-iteration start vectors.
pub(crate) fn mixed_unit(state: u64) -> f64 {
    let z = splitmix64(state);
    (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_is_deterministic_and_spreads() {
        assert_eq!(splitmix64(1), splitmix64(1));
        assert_ne!(splitmix64(1), splitmix64(2));
        let a = mixed_unit(17);
        assert!((-1.0..1.0).contains(&a));
    }
}
