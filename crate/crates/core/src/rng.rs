//! Seeding rules.
//!
//! Every chain, replica or reference cloud owns a ChaCha8 stream selected by
//! `(seed, stream)`. ChaCha is counter based, so distinct stream ids give
//! independent sequences and the output of one stream never depends on how
//! many others were consumed, or on which thread.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type ChainRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Exactly `dim` standard normal draws.
pub fn standard_normal_vector(rng: &mut ChainRng, dim: usize) -> DVector<f64> {
    DVector::from_iterator(dim, (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// SplitMix64 finalizer; used to derive child seeds (reference clouds,
/// per-experiment sub-seeds) from a base seed without collisions between
/// neighbouring indices.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15_u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
