//! Deterministic RNG streams.
//!
//! Every random draw in the pipeline comes from a ChaCha stream whose key is
//! derived from the run seed plus a list of labels (stage name, problem id,
//! attempt index, ...). Streams are independent of iteration order, so the
//! same key always yields the same draws no matter how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Builder for a keyed RNG stream.
#[derive(Debug, Clone)]
pub struct Stream {
    hasher: Sha256,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"piecehint-stream-v1");
        hasher.update(seed.to_le_bytes());
        Stream { hasher }
    }

    /// Mixes a string label into the key. Labels are length-prefixed so
    /// `("ab", "c")` and `("a", "bc")` produce different streams.
    pub fn label(mut self, label: &str) -> Self {
        self.hasher.update(b"s");
        self.hasher.update((label.len() as u64).to_le_bytes());
        self.hasher.update(label.as_bytes());
        self
    }

    pub fn index(mut self, index: u64) -> Self {
        self.hasher.update(b"i");
        self.hasher.update(index.to_le_bytes());
        self
    }

    pub fn rng(self) -> ChaCha8Rng {
        let digest = self.hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(key)
    }
}
