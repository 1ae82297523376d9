//! Seeded, order-independent random streams.
//!
//! Every stochastic task draws from its own ChaCha12 stream. The stream key
//! is a SplitMix64 expansion of `(seed, label, index)`, so a replicate,
//! fold assignment or thinning draw sees the same numbers no matter which
//! thread runs it or in what order tasks complete.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Generator used for every stream.
pub type StreamRng = ChaCha12Rng;

/// A 64-bit root seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngSeed(pub u64);

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(label: &str) -> u64 {
    label
        .bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngSeed {
    fn mix(&self, label: &str, index: u64) -> u64 {
        let mut state = self.0 ^ fnv1a(label).rotate_left(17);
        let a = splitmix64(&mut state);
        state ^= index.wrapping_mul(0xd6e8_feb8_6659_fd93);
        a ^ splitmix64(&mut state)
    }

    /// Independent generator for task `(label, index)`.
    pub fn stream(&self, label: &str, index: u64) -> StreamRng {
        let mut state = self.mix(label, index);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha12Rng::from_seed(key)
    }

    /// Derived root seed for a nested task, e.g. one Monte Carlo replicate.
    pub fn child(&self, label: &str, index: u64) -> RngSeed {
        let mut state = self.mix(label, index);
        RngSeed(splitmix64(&mut state))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn identical_labels_give_identical_draws() {
        let seed = RngSeed(42);
        let mut ra = seed.stream("boot", 3);
        let mut rb = seed.stream("boot", 3);
        let a: Vec<u64> = (0..8).map(|_| ra.random()).collect();
        let b: Vec<u64> = (0..8).map(|_| rb.random()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_labels_and_indices_differ() {
        let seed = RngSeed(42);
        let x = seed.stream("boot", 3).random::<u64>();
        assert_ne!(x, seed.stream("boot", 4).random::<u64>());
        assert_ne!(x, seed.stream("folds", 3).random::<u64>());
        assert_ne!(x, RngSeed(43).stream("boot", 3).random::<u64>());
        assert_ne!(seed.child("rep", 0), seed.child("rep", 1));
    }

    #[test]
    fn streams_are_portable_constants() {
        // Pinned output: any change here breaks reproducibility of saved runs.
        let v = RngSeed(7).stream("folds", 0).random::<u64>();
        assert_eq!(v, 1_742_587_098_759_124_964);
        assert_eq!(RngSeed(7).child("a", 1), RngSeed(18_365_755_113_844_713_404));
    }
}
