//! Deterministic random streams.
//!
//! Every Monte-Carlo trial draws from its own ChaCha8 stream, selected by
//! the trial index, under a seed mixed from the master seed and the sweep
//! point. Results are therefore independent of thread count and scheduling.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer applied to `master ⊕ f(label)`.
pub fn mix_seed(master: u64, label: u64) -> u64 {
    let mut z = master
        ^ label
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Stream for trial `trial` of sweep point `point`.
pub fn trial_stream(master: u64, point: u64, trial: u64) -> SimRng {
    stream(mix_seed(master, point), trial)
}

/// Circularly-symmetric complex Gaussian with total variance `variance`.
#[inline]
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}
