//! Deterministic random streams. Every stochastic routine draws from a
//! ChaCha8 stream derived from an explicit seed plus a label path, so results
//! are reproducible byte-for-byte across runs and thread counts.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mixes a label into a 64-bit stream id (splitmix64 finalizer over bytes).
fn mix(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        h ^= h >> 30;
        h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 27;
    }
    h
}

/// A ChaCha8 generator for the given seed, scoped by a label path such as
/// `&["federer", "centers"]`. Distinct paths give independent streams; the
/// same path always gives the same stream.
pub fn stream(seed: u64, path: &[&str]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut id = 0x243f_6a88_85a3_08d3u64;
    for label in path {
        id = mix(id, label.as_bytes());
        id = mix(id, &[0x1f]); // separator so ["ab","c"] != ["a","bc"]
    }
    rng.set_stream(id);
    rng
}

/// Stream scoped by a label path plus a numeric index (e.g. a work-cell id),
/// for parallel loops that must stay deterministic under any thread count.
pub fn indexed_stream(seed: u64, path: &[&str], index: u64) -> ChaCha8Rng {
    let mut rng = stream(seed, path);
    let base = rng.get_stream();
    rng.set_stream(mix(base, &index.to_le_bytes()));
    rng
}
