//! Counter-based random streams.
//!
//! Every stream is a ChaCha8 generator seeded from a SHA-256 digest of the
//! master seed, a short tag naming the stream's purpose, and the integer
//! coordinates of the task. Tasks therefore never share generator state, and
//! the draws of a task do not depend on how many tasks run or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn stream(master_seed: u64, tag: &str, coords: &[u64]) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update((tag.len() as u64).to_le_bytes());
    h.update(tag.as_bytes());
    for c in coords {
        h.update(c.to_le_bytes());
    }
    let seed: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(seed)
}
