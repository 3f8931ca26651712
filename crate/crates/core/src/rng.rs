//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a stream addressed by
//! `(seed, domain, a, b)`, typically `a` = particle or replicate index and
//! `b` = observation index. The ChaCha key is derived from `(seed, domain)`
//! and the 64-bit stream id packs `(a, b)`, so a stream's contents never
//! depend on the order in which workers visit it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purpose tags that separate otherwise identical `(a, b)` addresses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    Init = 1,
    Process = 2,
    Measure = 3,
    Resample = 4,
    Perturb = 5,
    Forecast = 6,
    Draw = 7,
    Misc = 8,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministically derive a child seed, e.g. a fresh seed per IF2 iteration.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    let mut s = seed ^ tag.rotate_left(17) ^ index.wrapping_mul(0xA24B_AED4_963E_E407);
    splitmix64(&mut s);
    splitmix64(&mut s)
}

/// Open the stream addressed by `(seed, domain, a, b)`.
///
/// `a` and `b` must each fit in 32 bits to stay collision free.
pub fn stream(seed: u64, domain: Domain, a: u64, b: u64) -> StreamRng {
    debug_assert!(a <= u32::MAX as u64 && b <= u32::MAX as u64);
    let mut state = seed ^ (domain as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream((a << 32) | (b & 0xFFFF_FFFF));
    rng
}
