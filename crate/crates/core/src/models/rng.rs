use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// Reproducible random stream identified by `(seed, index)`.
///
/// Substreams are derived by hashing, so trial `i` of an experiment always
/// draws the same numbers regardless of scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub index: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, index: 0 }
    }

    /// Independent child stream `i`.
    pub fn substream(&self, i: u64) -> Self {
        Self { seed: splitmix64(self.seed ^ splitmix64(self.index)), index: i }
    }

    pub fn rng(&self) -> ChaCha12Rng {
        let mut r = ChaCha12Rng::seed_from_u64(self.seed);
        r.set_stream(self.index);
        r
    }
}
