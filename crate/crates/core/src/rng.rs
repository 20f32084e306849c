//! Counter-based random streams.
//!
//! An experiment owns one root stream; trial `k` draws from the stream with
//! `stream_index = k`, so results do not depend on the order (or thread) in
//! which trials run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        Self { seed, stream_index }
    }

    /// Root stream of an experiment.
    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, 0)
    }

    /// Stream of trial `k`: same seed, `stream_index = k`.
    pub fn trial(&self, k: u64) -> Self {
        Self::new(self.seed, k)
    }

    /// Independent child experiment. The child seed mixes the parent seed,
    /// the parent stream index and `label`, so sibling forks never share
    /// trial streams.
    pub fn fork(&self, label: u64) -> Self {
        let mixed = splitmix64(self.seed ^ splitmix64(self.stream_index ^ splitmix64(label)));
        Self::new(mixed, 0)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
