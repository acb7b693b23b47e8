//! Seed derivation. Every random choice in a run is drawn from a ChaCha
//! stream keyed by the run seed and a domain tag, so independent consumers
//! never share state and evaluation order cannot change outcomes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn tag_hash(tag: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Independent stream for `(seed, tag, index)`.
pub fn stream(seed: u64, tag: &str, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let words = [
        mix(seed),
        mix(seed ^ tag_hash(tag)),
        mix(tag_hash(tag).rotate_left(17) ^ 0x5851_f42d_4c95_7f2d),
        mix(seed.wrapping_add(0x9e37_79b9_7f4a_7c15)),
    ];
    for (chunk, w) in key.chunks_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// A single derived seed, for callers that only need to key further streams.
pub fn derive(seed: u64, tag: &str, index: u64) -> u64 {
    use rand::Rng;
    stream(seed, tag, index).random()
}
