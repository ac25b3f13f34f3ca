//! Seed splitting.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by the
//! run's global 64-bit seed. Independent purposes use distinct ChaCha stream
//! ids, `(purpose << 32) | sub`, so adding draws to one purpose never shifts
//! another purpose's sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tag occupying the high half of the ChaCha stream id.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u32)]
pub enum Stream {
    /// Shape parameters, `sub` = `(class << 16) | instance`.
    ShapeParams = 1,
    /// Network initialisation.
    Init = 3,
    /// Per-epoch object order and observed views, `sub` = epoch.
    Epoch = 4,
    /// Fixed validation views.
    Validation = 5,
    /// k-NN training-set sampling, `sub` = class id.
    KnnSample = 6,
    /// Random-weight baseline initialisation.
    RandomWeights = 7,
    /// Free for tests and tools.
    Aux = 15,
}

/// Deterministic generator for `(seed, purpose, sub)`.
pub fn stream(seed: u64, purpose: Stream, sub: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 32) | sub as u64);
    rng
}
