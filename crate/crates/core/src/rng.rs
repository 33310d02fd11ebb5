//! Seeded random streams. Every independent unit of work (sweep cell,
//! Monte-Carlo trial block) draws from its own ChaCha stream derived from the
//! master seed, so serial and parallel runs produce identical numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type LabRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> LabRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Packs two indices into one stream id.
pub fn cell_stream(major: usize, minor: usize) -> u64 {
    ((major as u64) << 32) | (minor as u64 & 0xFFFF_FFFF)
}
