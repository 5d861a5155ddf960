use rand::Rng as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded random stream for one trajectory.
///
/// Every `(seed, stream)` pair names an independent, reproducible ChaCha8
/// stream, so shots can be simulated in any order on any worker.
#[derive(Debug, Clone)]
pub struct TrajectoryRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl TrajectoryRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// `true` with probability `p`. Never consumes a draw when `p <= 0`.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            return false;
        }
        self.uniform() < p
    }
}

/// Mix several integers into one stream id. Used to give nested loops
/// (instance, shot, ...) their own streams from a single user seed.
pub fn stream_id(parts: &[u64]) -> u64 {
    // splitmix64 finaliser over a running fold
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        h ^= p
            .wrapping_add(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(h << 6)
            .wrapping_add(h >> 2);
        h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h ^= h >> 31;
    }
    h
}
