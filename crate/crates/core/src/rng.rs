//! Seeded, replayable randomness.
//!
//! A [`RandomSource`] wraps a ChaCha8 stream. Every layer draws from its own
//! sub-stream selected by hashing the layer key into the ChaCha stream id, so
//! the draws one layer makes never shift the draws of another.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    stream: u64,
    draws: u64,
    rng: ChaCha8Rng,
}

/// 64-bit FNV-1a; stable across platforms and releases.
fn stream_key(key: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.as_bytes() {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            seed,
            stream,
            draws: 0,
            rng,
        }
    }

    /// Fresh sub-stream for `key`, independent of how far `self` has advanced.
    pub fn substream(&self, key: &str) -> RandomSource {
        Self::with_stream(self.seed, self.stream ^ stream_key(key))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of draws taken so far from this stream.
    pub fn position(&self) -> u64 {
        self.draws
    }

    /// Uniform index in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        self.draws += 1;
        // u64 sampling keeps the sequence identical on 32- and 64-bit targets
        self.rng.gen_range(0..n as u64) as usize
    }

    /// Uniform integer in `lo..=hi`.
    pub fn between(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below(hi - lo + 1)
    }

    /// Uniform real in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.draws += 1;
        self.rng.gen::<f64>()
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> Option<&'a T> {
        if items.is_empty() {
            None
        } else {
            Some(&items[self.below(items.len())])
        }
    }

    /// Index drawn with probability proportional to `weights`.
    /// Returns `None` when no weight is positive.
    pub fn pick_weighted(&mut self, weights: &[f64]) -> Option<usize> {
        let dist = WeightedIndex::new(weights).ok()?;
        self.draws += 1;
        Some(dist.sample(&mut self.rng))
    }
}
