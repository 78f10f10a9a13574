//! Seeded random stream shared by the engine, the rule interpreter and the
//! native baselines.
//!
//! Every consumer draws through the same three primitives so the documented
//! draw order is meaningful across implementations:
//! `index(n)` is `random_range(0..n)`, `uniform()` is `random::<f64>()` in
//! `[0, 1)`, `normal()` is one `StandardNormal` sample.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone)]
pub struct RunRng(ChaCha8Rng);

impl RunRng {
    pub fn seed_from_u64(seed: u64) -> Self {
        RunRng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Independent stream derived from a base seed and a stream label.
    pub fn derived(seed: u64, stream: u64) -> Self {
        RunRng(ChaCha8Rng::seed_from_u64(mix(seed, stream)))
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }

    pub fn uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.0)
    }

    pub fn inner(&mut self) -> &mut ChaCha8Rng {
        &mut self.0
    }
}

/// SplitMix64 finalizer over `seed ^ stream`; spreads nearby seeds apart.
pub fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws three indices distinct from each other and from `target`,
/// by rejection in the order r1, r2, r3. Requires `n >= 4`.
pub fn distinct_triplet(rng: &mut RunRng, n: usize, target: usize) -> [usize; 3] {
    debug_assert!(n >= 4);
    let mut r1 = rng.index(n);
    while r1 == target {
        r1 = rng.index(n);
    }
    let mut r2 = rng.index(n);
    while r2 == target || r2 == r1 {
        r2 = rng.index(n);
    }
    let mut r3 = rng.index(n);
    while r3 == target || r3 == r1 || r3 == r2 {
        r3 = rng.index(n);
    }
    [r1, r2, r3]
}
