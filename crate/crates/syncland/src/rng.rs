//! Seeded randomness.
//!
//! Every random draw in the crate comes from [`ModelRng`], ChaCha20 seeded
//! through [`rand::SeedableRng::seed_from_u64`]. Streams for independent
//! purposes are separated with [`derive_seed`], so the same seed always
//! reproduces the same matrices, initial points and trial sequences.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// The counter-based generator behind all sampling.
pub type ModelRng = ChaCha20Rng;

pub fn rng_from_seed(seed: u64) -> ModelRng {
    ModelRng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub const fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(splitmix64(master) ^ cell) ^ trial)`.
///
/// This is the trial-seed formula used by phase sweeps; it is part of the
/// output format and must not change.
pub const fn derive_seed(master: u64, cell: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ cell) ^ trial)
}

/// Stream tags passed as `cell` to [`derive_seed`] for draws that hang off a
/// single seed.
pub(crate) mod stream {
    pub const GROUND_TRUTH: u64 = 0x7a5e_0001;
    pub const INIT: u64 = 0x7a5e_0002;
    pub const KURAMOTO_INIT: u64 = 0x7a5e_0003;
    pub const PROBE: u64 = 0x7a5e_0004;
    pub const ESCAPE: u64 = 0x7a5e_0005;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn splitmix_reference_values() {
        // First outputs of the reference SplitMix64 stream seeded with 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(0x9E37_79B9_7F4A_7C15), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn derived_seeds_differ_across_cells_and_trials() {
        let a = derive_seed(7, 0, 0);
        assert_ne!(a, derive_seed(7, 0, 1));
        assert_ne!(a, derive_seed(7, 1, 0));
        assert_ne!(a, derive_seed(8, 0, 0));
        assert_eq!(a, derive_seed(7, 0, 0));
    }

    #[test]
    fn generator_is_reproducible() {
        let mut a = rng_from_seed(99);
        let mut b = rng_from_seed(99);
        for _ in 0..8 {
            assert_eq!(a.random::<u64>(), b.random::<u64>());
        }
    }
}
