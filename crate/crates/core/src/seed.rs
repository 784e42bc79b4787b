//! Seed derivation and random streams.
//!
//! Every story owns one ChaCha8 generator seeded from its 64-bit seed. Separate
//! purposes (board construction, event filling, entity renaming) read from
//! separate ChaCha streams of that generator, so adding a draw in one never
//! shifts the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Seed = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Board = 0,
    Events = 1,
    Entities = 2,
    Names = 3,
}

pub fn rng(seed: Seed, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Stable 64-bit seed for one record: SHA-256 over the base seed and the
/// `|`-joined parameter parts, truncated to the first eight bytes.
pub fn derive_seed(base_seed: Seed, parts: &[&str]) -> Seed {
    let mut hasher = Sha256::new();
    hasher.update(base_seed.to_le_bytes());
    for part in parts {
        hasher.update(b"|");
        hasher.update(part.as_bytes());
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}
