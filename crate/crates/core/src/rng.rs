//! Deterministic random streams.
//!
//! Every random quantity in a study is drawn from a ChaCha20 stream whose key
//! is derived from the master seed and a list of tags (study id, population
//! size, replicate index, ...). Streams never share state, so replicates can
//! run in any order or in parallel and still produce the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Generator used throughout the crate.
pub type StreamRng = ChaCha20Rng;

/// A tag mixed into a stream key.
#[derive(Debug, Clone, Copy)]
pub enum Tag<'a> {
    Str(&'a str),
    Int(u64),
}

impl From<u64> for Tag<'_> {
    fn from(v: u64) -> Self {
        Tag::Int(v)
    }
}

impl From<usize> for Tag<'_> {
    fn from(v: usize) -> Self {
        Tag::Int(v as u64)
    }
}

impl<'a> From<&'a str> for Tag<'a> {
    fn from(v: &'a str) -> Self {
        Tag::Str(v)
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn absorb(acc: u64, word: u64) -> u64 {
    let mut s = acc ^ word.rotate_left(17);
    splitmix64(&mut s)
}

/// Derive a 64-bit child seed from a master seed and a path of tags.
pub fn child_seed(master: u64, tags: &[Tag<'_>]) -> u64 {
    let mut acc = absorb(0x5EED_0F5A_3B1E_D00D, master);
    for tag in tags {
        match *tag {
            Tag::Int(v) => {
                acc = absorb(acc, 0x01);
                acc = absorb(acc, v);
            }
            Tag::Str(s) => {
                acc = absorb(acc, 0x02);
                // FNV-1a over the bytes, then the length.
                let mut h: u64 = 0xcbf2_9ce4_8422_2325;
                for b in s.bytes() {
                    h ^= u64::from(b);
                    h = h.wrapping_mul(0x0000_0100_0000_01B3);
                }
                acc = absorb(acc, h);
                acc = absorb(acc, s.len() as u64);
            }
        }
    }
    acc
}

/// Stream for the given master seed and tag path.
pub fn stream(master: u64, tags: &[Tag<'_>]) -> StreamRng {
    let mut state = child_seed(master, tags);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha20Rng::from_seed(key)
}
