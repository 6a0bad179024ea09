//! Per-node random substreams.
//!
//! Every stream is a ChaCha8 generator keyed by the run seed with a stream id
//! derived from `(node, purpose)`. Streams never share state, so the order in
//! which nodes consume randomness (or how often metrics are sampled) cannot
//! perturb trajectories or key material.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Mobility = 1,
    KeyGen = 2,
    Signing = 3,
    KeyPhase = 4,
}

pub fn substream(seed: u64, node: usize, purpose: Purpose) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((node as u64) << 8) | purpose as u64);
    rng
}
