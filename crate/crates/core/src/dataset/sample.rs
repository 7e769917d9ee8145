//! Seeded subsampling.
//!
//! Recipe, reproducible in any language:
//!
//! 1. Seed a SplitMix64 generator with the 64-bit seed as its state.
//!    Each draw adds `0x9E3779B97F4A7C15` to the state (wrapping) and
//!    returns the state mixed by `z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!    z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31` (wrapping
//!    multiplies).
//! 2. Start from the index list `0..N`. For `i` in `0..n`, draw `r`, set
//!    `j = i + r mod (N - i)` and swap positions `i` and `j`.
//! 3. Take the first `n` indices, sort them ascending, and return the
//!    corresponding items. The output keeps the input's relative order.

/// SplitMix64 pseudo-random generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// Positions selected by the recipe above, ascending.
pub fn sample_indices(total: usize, n: usize, seed: u64) -> Vec<usize> {
    assert!(n <= total, "sample size exceeds population");
    let mut rng = SplitMix64::new(seed);
    let mut idx: Vec<usize> = (0..total).collect();
    for i in 0..n {
        let span = (total - i) as u64;
        let j = i + (rng.next_u64() % span) as usize;
        idx.swap(i, j);
    }
    idx.truncate(n);
    idx.sort_unstable();
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // published SplitMix64 outputs for seed 0
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xE220A8397B1DCDAF);
        assert_eq!(rng.next_u64(), 0x6E789E6AA1B965F4);
        assert_eq!(rng.next_u64(), 0x06C45D188009454F);
    }

    #[test]
    fn full_sample_is_identity() {
        assert_eq!(sample_indices(5, 5, 99), vec![0, 1, 2, 3, 4]);
        assert!(sample_indices(5, 0, 99).is_empty());
    }
}
