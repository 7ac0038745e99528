//! Seeded randomness built on splitmix64.
//!
//! Every random draw in the workspace flows through this module. splitmix64
//! was picked because it is a fixed 64-bit integer algorithm that is trivial
//! to reimplement bit-exactly in any language, so generated worlds and
//! datasets are portable across platforms. Sub-streams are derived as
//! `splitmix64(seed XOR stream_id)`, which keeps independent pipeline stages
//! (collection, training, evaluation, ...) on provably disjoint seed sets.

/// Stream ids for deriving purpose-specific sub-seeds from one master seed.
///
/// The constants are arbitrary odd 64-bit values; what matters is that they
/// are distinct and fixed forever.
pub mod stream {
    /// Worlds generated for demonstration collection.
    pub const COLLECT: u64 = 0x636f_6c6c_6563_7431;
    /// Worlds generated for online evaluation (disjoint from COLLECT).
    pub const EVAL: u64 = 0x6576_616c_7761_7264;
    /// Policy training (init + shuffling).
    pub const TRAIN: u64 = 0x7472_6169_6e69_7467;
    /// Almost-collision set synthesis.
    pub const ACD: u64 = 0x6163_645f_7365_7465;
    /// Per-world style palette draws.
    pub const STYLE: u64 = 0x7374_796c_6570_616c;
    /// Internal feasibility retries.
    pub const RETRY: u64 = 0x7265_7472_795f_3332;
}

/// splitmix64 state.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Next 64 uniformly distributed bits.
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform double in `[0, 1)` using the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform double in `[lo, hi)`.
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.next_f64() * (hi - lo)
    }

    /// Uniform integer in `[0, n)`. `n` must be nonzero.
    pub fn next_below(&mut self, n: u64) -> u64 {
        // Modulo bias is negligible for the small n used here and keeps the
        // draw count independent of n, which matters for reproducibility.
        self.next_u64() % n
    }
}

/// Derive a sub-seed: `splitmix64(seed XOR stream_id)`.
pub fn derive(seed: u64, stream_id: u64) -> u64 {
    SplitMix64::new(seed ^ stream_id).next_u64()
}

/// Derive a sub-seed from a stream plus two indices (e.g. kind and episode).
pub fn derive3(seed: u64, stream_id: u64, a: u64, b: u64) -> u64 {
    derive(derive(derive(seed, stream_id), a.wrapping_mul(2).wrapping_add(1)), b)
}

/// Deterministic in-place Fisher-Yates shuffle.
pub fn shuffle<T>(items: &mut [T], rng: &mut SplitMix64) {
    for i in (1..items.len()).rev() {
        let j = rng.next_below(i as u64 + 1) as usize;
        items.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix64_reference_values() {
        // Reference outputs for seed 0 from the published splitmix64 algorithm.
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(rng.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn next_f64_in_unit_interval() {
        let mut rng = SplitMix64::new(12345);
        for _ in 0..10_000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn streams_are_distinct() {
        let ids = [
            stream::COLLECT,
            stream::EVAL,
            stream::TRAIN,
            stream::ACD,
            stream::STYLE,
            stream::RETRY,
        ];
        for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                assert_ne!(a, b);
                assert_ne!(derive(7, *a), derive(7, *b));
            }
        }
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut v: Vec<u32> = (0..100).collect();
        let mut rng = SplitMix64::new(42);
        shuffle(&mut v, &mut rng);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());
        assert_ne!(v, (0..100).collect::<Vec<_>>());
    }
}
