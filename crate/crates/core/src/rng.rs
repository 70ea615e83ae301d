//! Keyed random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator seeded by the
//! master seed and positioned on a stream derived from a tuple of integers
//! (trial index, sample size, batch number, ...). ChaCha is counter based, so
//! two distinct keys give independent streams and the output of a stream does
//! not depend on which thread consumes it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a key tuple into a single stream id. Order matters.
pub fn stream_id(key: &[u64]) -> u64 {
    key.iter()
        .fold(splitmix64(key.len() as u64), |acc, &k| {
            splitmix64(acc ^ splitmix64(k))
        })
}

/// Generator for stream `key` under `seed`.
pub fn stream(seed: u64, key: &[u64]) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(key));
    rng
}

// Stream namespaces. Keys start with one of these so that unrelated
// consumers never share a stream.
pub(crate) const NS_CLOUD: u64 = 1;
pub(crate) const NS_MU: u64 = 2;
pub(crate) const NS_XI: u64 = 3;
pub(crate) const NS_TRIAL: u64 = 4;
