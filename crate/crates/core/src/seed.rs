//! Seed discipline.
//!
//! A run is driven by one master [`Seed`]. Every randomized step draws from
//! its own ChaCha8 stream keyed by that seed and a fixed stream id, so the
//! steps are independent of each other and of how much randomness the others
//! consume.
//!
//! | stream | use                                        |
//! |--------|--------------------------------------------|
//! | 1      | message content                            |
//! | 2      | cached index selection (prefetching)       |
//! | 3      | per-message index permutation              |
//! | 4      | per-database query shuffle                 |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Content = 1,
    CacheIndices = 2,
    MessageOrder = 3,
    Shuffle = 4,
}

impl Seed {
    pub fn rng(self, stream: Stream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream as u64);
        rng
    }

    /// Seed for the `ordinal`-th independent trial derived from this base.
    pub fn trial(self, ordinal: u64) -> Seed {
        Seed(self.0.wrapping_add(ordinal))
    }
}

impl From<u64> for Seed {
    fn from(value: u64) -> Self {
        Seed(value)
    }
}

impl std::fmt::Display for Seed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}
