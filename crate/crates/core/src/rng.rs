//! Seeded random streams.
//!
//! Every consumer of randomness takes its own ChaCha8 stream derived from a
//! user seed and a stream number, so results never depend on thread count or
//! the order in which work items are evaluated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream numbers at or above this are reserved for non-identity consumers.
const RESERVED_BASE: u64 = 1 << 62;

/// Named stream families. Identity streams use the identity index directly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Identity(u64),
    Pairing,
    NonmatedCap,
    Custom(u64),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Identity(i) => {
                assert!(i < RESERVED_BASE, "identity index out of range");
                i
            }
            Stream::Pairing => RESERVED_BASE,
            Stream::NonmatedCap => RESERVED_BASE + 1,
            Stream::Custom(k) => RESERVED_BASE + 1024 + k,
        }
    }
}

pub fn substream(seed: u64, stream: Stream) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}
