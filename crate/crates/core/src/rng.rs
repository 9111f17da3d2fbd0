//! Seeded random streams.
//!
//! Every consumer of randomness draws from its own ChaCha8 stream. The seed is
//! the campaign seed; the stream number is derived from a [`StreamKey`], so a
//! shot's noise and jitter do not depend on which worker ran it or in which
//! order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::code_model::Sector;

/// Jitter/stage identifiers used in stream keys.
pub type StageTag = u8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamKey {
    /// Fault sampling for one sector of one shot.
    Noise { shot: u64, sector: Sector },
    /// Jitter of one pipeline stage at one node.
    Jitter { node: u32, stage: StageTag, shot: u64, round: u32 },
    /// Initial clock offsets and drift of one node.
    Clock { node: u32, shot: u64 },
}

impl StreamKey {
    /// Stream number fed to the ChaCha counter.
    pub fn stream_id(self) -> u64 {
        let (domain, a, b, c) = match self {
            StreamKey::Noise { shot, sector } => (1u64, shot, sector.index() as u64, 0),
            StreamKey::Jitter { node, stage, shot, round } => (
                2,
                shot,
                ((node as u64) << 8) | stage as u64,
                round as u64,
            ),
            StreamKey::Clock { node, shot } => (3, shot, node as u64, 0),
        };
        let mut h = splitmix64(domain);
        h = splitmix64(h ^ a);
        h = splitmix64(h ^ b);
        splitmix64(h ^ c)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Opens the stream identified by `key` under `seed`.
pub fn stream(seed: u64, key: StreamKey) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key.stream_id());
    rng
}
