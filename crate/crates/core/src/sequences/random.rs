//! Counter-based random streams.
//!
//! Every random quantity is addressed by `(seed, stream, index)`: the
//! ChaCha8 key is derived from the seed, the stream id selects the family
//! (prime phases, prime signs, iid draws, geometric digits) and the word
//! position selects the index. Values therefore never depend on the window
//! that asked for them.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub(crate) const STREAM_PRIME_PHASE: u64 = 1;
pub(crate) const STREAM_PRIME_SIGN: u64 = 2;
pub(crate) const STREAM_IID: u64 = 3;
pub(crate) const STREAM_DIGITS: u64 = 4;

/// Words reserved per index inside a stream.
const STRIDE: u128 = 4;

pub(crate) fn stream_at(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(index as u128 * STRIDE);
    rng
}

/// Phase of `X_p` as a 64-bit fixed-point fraction of a turn.
pub(crate) fn prime_phase(seed: u64, p: u64) -> u64 {
    stream_at(seed, STREAM_PRIME_PHASE, p).next_u64()
}

/// `Y_p` in `{-1, +1}`.
pub(crate) fn prime_sign(seed: u64, p: u64) -> i8 {
    if stream_at(seed, STREAM_PRIME_SIGN, p).next_u64() >> 63 == 0 {
        1
    } else {
        -1
    }
}

/// A fixed-point turn mapped to `e(t)` with `t` in `[-1/2, 1/2)`.
pub(crate) fn fixed_turn_to_unit(u: u64) -> Complex64 {
    let t = (u as i64) as f64 * (1.0 / 18_446_744_073_709_551_616.0);
    crate::dd::cis_turns(t)
}

pub(crate) fn iid_steinhaus(seed: u64, n: u64) -> Complex64 {
    fixed_turn_to_unit(stream_at(seed, STREAM_IID, n).next_u64())
}

pub(crate) fn iid_rademacher(seed: u64, n: u64) -> Complex64 {
    let s = stream_at(seed, STREAM_IID, n).next_u64() >> 63;
    Complex64::new(if s == 0 { 1.0 } else { -1.0 }, 0.0)
}

/// Standard complex Gaussian with `E|z|^2 = 1` (Box-Muller).
pub(crate) fn iid_gaussian(seed: u64, n: u64) -> Complex64 {
    let mut rng = stream_at(seed, STREAM_IID, n);
    // u in (0, 1] so the logarithm stays finite
    let u = 1.0 - rng.random::<f64>();
    let v: f64 = rng.random();
    let radius = (-u.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * v).sin_cos();
    Complex64::new(radius * c, radius * s)
}

pub(crate) fn digit(seed: u64, base: u64, i: u64) -> u64 {
    stream_at(seed, STREAM_DIGITS, i).random_range(0..base)
}

/// SplitMix64 finalizer, used to derive per-trial seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
