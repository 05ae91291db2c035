use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform variates for one replication: ChaCha8 keyed by the experiment
/// seed, one stream per replication, so draw i of replication r is fixed by
/// (seed, r, i) alone.
pub struct UniformStream {
    rng: ChaCha8Rng,
}

impl UniformStream {
    pub fn new(seed: u64, replication: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(replication);
        Self { rng }
    }

    /// A variate strictly inside (0, 1) on the grid (k + 1/2) 2^-52, so that
    /// 1 - u is exact.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 52) as f64;
        ((self.rng.next_u64() >> 12) as f64 + 0.5) * SCALE
    }
}
