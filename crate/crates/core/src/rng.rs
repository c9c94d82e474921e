//! Seeded, splittable random streams.
//!
//! Every consumer of randomness in a run draws from its own ChaCha8 stream
//! derived from the run seed, so adding draws in one component never shifts
//! the sequence seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifies the consumer of a random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Additive oracle noise drawn per call in deterministic feedback mode.
    OracleNoise = 0,
    /// Realizations of the stochastic sample ξ (noise part).
    Sample = 1,
    /// Minibatch index sets.
    Minibatch = 2,
    /// Coordinate indices and random directions used by estimators.
    Estimator = 3,
    /// Harness-level choices (e.g. the uniformly drawn GD candidate).
    Harness = 4,
}

/// Factory for the streams of a single run.
#[derive(Debug, Clone, Copy)]
pub struct Streams {
    seed: u64,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rng(&self, stream: Stream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream as u64);
        rng
    }
}
