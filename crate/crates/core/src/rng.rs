//! Deterministic random streams.
//!
//! Every stream is a ChaCha20 generator whose 256-bit key is derived from a
//! master seed and a path of integer labels (for example realization index
//! then matrix index). Keys are produced by SplitMix64 finalization of the
//! path, so two different paths give unrelated streams and a given path
//! always reproduces the same bits on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

/// Randomness used by every constructor in this crate.
pub type Stream = ChaCha20Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A hierarchical seed: master seed plus a path of labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedPath {
    pub master: u64,
    pub path: Vec<u64>,
}

impl SeedPath {
    pub fn new(master: u64) -> Self {
        Self {
            master,
            path: Vec::new(),
        }
    }

    /// Child path with one more label appended.
    pub fn child(&self, label: u64) -> Self {
        let mut path = self.path.clone();
        path.push(label);
        Self {
            master: self.master,
            path,
        }
    }

    fn key(&self) -> [u8; 32] {
        let mut state = splitmix64(self.master);
        for &label in &self.path {
            state = splitmix64(state ^ splitmix64(label.wrapping_add(0xA076_1D64_78BD_642F)));
        }
        let mut key = [0u8; 32];
        for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
            state = splitmix64(state.wrapping_add(i as u64));
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        key
    }

    pub fn stream(&self) -> Stream {
        ChaCha20Rng::from_seed(self.key())
    }
}

/// Labels used under a realization's seed path.
pub mod label {
    pub const MODEL: u64 = 0;
    pub const BASELINE: u64 = 1;
    pub const INITIAL_ANGLES: u64 = 2;
}
