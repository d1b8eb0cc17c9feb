//! Stable seed derivation for Monte Carlo replicates.

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a master seed with a path of indices. The result depends only on
/// its inputs, never on platform or scheduling.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &i| splitmix64(acc ^ splitmix64(i)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_and_path_sensitive() {
        // frozen so a refactor cannot silently reshuffle every experiment
        assert_eq!(derive_seed(0, &[]), 0xe220_a839_7b1d_cdaf);
        assert_eq!(derive_seed(7, &[1, 2]), derive_seed(7, &[1, 2]));
        assert_ne!(derive_seed(7, &[1, 2]), derive_seed(7, &[2, 1]));
        assert_ne!(derive_seed(7, &[1]), derive_seed(8, &[1]));
    }
}
