//! Counter-based random streams.
//!
//! Every replicate draws from its own ChaCha8 stream keyed by a mix of
//! `(seed, domain, a, b)`, so results do not depend on how replicates are
//! spread across workers.

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream domains. Distinct tags keep calibration and simulation draws apart.
pub mod domain {
    pub const BU_CALIBRATION: u64 = 1;
    pub const LAST_STEP_CALIBRATION: u64 = 2;
    pub const OMT2_CALIBRATION: u64 = 3;
    pub const SIMULATION: u64 = 5;
    pub const DATASET: u64 = 6;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for replicate `b` of sub-problem `a` in `domain`.
pub fn stream(seed: u64, domain: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut state = splitmix64(seed);
    let mut key = [0u8; 32];
    for (i, word) in [domain, a, b, 0x5EED].into_iter().enumerate() {
        state = splitmix64(state ^ word.wrapping_mul(0xD6E8_FEB8_6659_FD93));
        key[i * 8..(i + 1) * 8].copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Uniform draw from the open interval (0,1).
#[inline]
pub fn open01<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}
