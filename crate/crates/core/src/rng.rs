//! Counter-based random streams for reproducible Monte Carlo.
//!
//! A stream is addressed by `(seed, replicate)`; each simulation component
//! (diffusion noise, jump arrivals, ...) draws from its own ChaCha stream
//! under that key, so replicates can run in any order or in parallel and
//! still produce bit-identical paths.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifies one replicate's random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub replicate: u64,
}

/// Independent components drawing from the same key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Component {
    Diffusion = 0,
    Jumps = 1,
    Auxiliary = 2,
}

impl StreamKey {
    pub fn new(seed: u64, replicate: u64) -> Self {
        StreamKey { seed, replicate }
    }

    pub(crate) fn rng(self, component: Component) -> ChaCha8Rng {
        let mut bytes = [0u8; 32];
        bytes[..8].copy_from_slice(&self.seed.to_le_bytes());
        bytes[8..16].copy_from_slice(&self.replicate.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(bytes);
        rng.set_stream(component as u64);
        rng
    }

    /// Generator for caller-side randomness tied to this key, independent of
    /// the streams used by the simulators.
    pub fn auxiliary_rng(self) -> ChaCha8Rng {
        self.rng(Component::Auxiliary)
    }
}

impl From<u64> for StreamKey {
    fn from(seed: u64) -> Self {
        StreamKey::new(seed, 0)
    }
}
