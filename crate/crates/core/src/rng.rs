//! Seeded random stream shared by every stochastic component of a run.

use rand::{Rng, SeedableRng};

/// The run-wide generator. ChaCha8 is portable and reproducible across
/// platforms for a given seed.
pub type SimRng = rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Bernoulli draw that tolerates `p` outside `[0, 1]` by saturating. Draws
/// with `p <= 0` or `p >= 1` consume no randomness.
#[inline]
pub fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    if p <= 0.0 {
        false
    } else if p >= 1.0 {
        true
    } else {
        rng.random::<f64>() < p
    }
}
