//! Seeded, stream-splittable random number generation.
//!
//! Every random draw in the crate goes through [`stream_rng`]: a ChaCha20
//! generator keyed by the user seed, with one stream per sample index. This
//! makes samples independent of evaluation order, so parallel sampling is
//! bit-reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::matrix::{c, C64};

pub type LabRng = ChaCha20Rng;

pub fn stream_rng(seed: u64, stream: u64) -> LabRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard complex normal: real and imaginary parts `N(0, 1/2)`.
pub fn complex_normal(rng: &mut LabRng) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re * s, im * s)
}

/// Derives a child seed, used to give sub-experiments their own key.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
