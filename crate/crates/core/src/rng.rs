//! Keyed random streams.
//!
//! Every random draw in a run comes from a ChaCha stream whose seed is a
//! function of `(run seed, purpose, iteration, worker)`. Two calls with the
//! same key see the same numbers regardless of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Compress = 0x51,
    Delay = 0xD1,
    Dataset = 0xDA,
    Probe = 0x9B,
}

/// Opens the stream keyed by `(seed, purpose, k, worker)`.
pub fn stream(seed: u64, purpose: Purpose, k: u64, worker: u64) -> Stream {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    key[16..24].copy_from_slice(&k.to_le_bytes());
    key[24..32].copy_from_slice(&worker.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Stream used to compress the message of `worker` at iteration `k`.
/// Central compression uses worker 0.
pub fn compress_stream(seed: u64, k: usize, worker: usize) -> Stream {
    stream(seed, Purpose::Compress, k as u64, worker as u64)
}
