use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::simcore::SimTime;

/// Independent random stream for `(seed, generator, stream)`.
///
/// Streams are derived by hashing, so adding a generator or a stream never
/// shifts the draws of another one.
pub fn substream(seed: u64, generator: &str, stream: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((generator.len() as u64).to_le_bytes());
    h.update(generator.as_bytes());
    h.update(stream.as_bytes());
    let mut key = [0u8; 32];
    key.copy_from_slice(&h.finalize());
    ChaCha8Rng::from_seed(key)
}

/// Converts a drawn duration in seconds to whole microseconds.
///
/// Random times are quantized before any time compression so that dividing
/// by the compression factor stays exact.
pub fn quantize_us(secs: f64) -> SimTime {
    SimTime::from_micros((secs * 1e6).round().max(0.0) as u64)
}

/// Rounds a positive duration in picoseconds to whole nanoseconds, at least 1 ns.
pub fn quantize_ns(ps: f64) -> SimTime {
    SimTime::from_nanos(((ps / 1e3).round() as u64).max(1))
}
