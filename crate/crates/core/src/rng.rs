//! Counter-based random streams.
//!
//! A draw is addressed by `(seed, counter, block)`: the same address always
//! yields the same numbers, independent of the order in which blocks are
//! generated or which thread generates them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

/// Seed of a named sub-stream derived from a master seed.
pub fn derive_seed(master: u64, name: &str) -> u64 {
    name.bytes().fold(splitmix64(master), |h, b| mix(h, b as u64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub counter: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    /// Same stream, positioned at `counter`.
    pub fn at(self, counter: u64) -> Self {
        Self { counter, ..self }
    }

    /// Named sub-stream of this stream's seed.
    pub fn named(master: u64, name: &str) -> Self {
        Self::new(derive_seed(master, name))
    }

    /// Generator for one block of draws at the current counter.
    pub fn block_rng(&self, block: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(mix(mix(self.seed, self.counter), block))
    }

    /// Generator for scalar draws (component indices, initial points).
    pub fn rng(&self) -> ChaCha8Rng {
        self.block_rng(u64::MAX)
    }
}
