//! Seeded random streams.
//!
//! Every stochastic operation draws from a ChaCha8 stream keyed by
//! `(master_seed, trial, stage)`. The key fills the whole 256-bit ChaCha key,
//! so distinct triples give independent streams and a triple always replays
//! the same sequence, no matter how trials are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const DOMAIN_TAG: u64 = 0x7162_6179_6573_0001;

/// Deterministic stream for one `(trial, stage)` cell of a run.
pub fn substream(master_seed: u64, trial: u64, stage: u64) -> SimRng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    key[16..24].copy_from_slice(&stage.to_le_bytes());
    key[24..32].copy_from_slice(&DOMAIN_TAG.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
