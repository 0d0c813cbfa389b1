//! Counter-based random streams.
//!
//! A [`RngSeed`] names one ChaCha12 keystream: the key is expanded from the
//! master seed with `seed_from_u64` and the 64-bit stream id selects an
//! independent nonce. Sub-streams (per trial, per codeword, per user) are
//! derived by hashing `(stream, index)` with SplitMix64, so any value drawn
//! for trial `i` depends only on `(master, i)` and never on the order in
//! which trials are executed.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub master: u64,
    pub stream: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngSeed {
    pub fn new(master: u64, stream: u64) -> Self {
        Self { master, stream }
    }

    /// Stream 0 of a master seed.
    pub fn master(master: u64) -> Self {
        Self { master, stream: 0 }
    }

    /// Deterministic child stream `index` of this stream.
    pub fn child(self, index: u64) -> Self {
        Self { master: self.master, stream: splitmix64(splitmix64(self.stream) ^ index) }
    }

    pub fn rng(self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}
