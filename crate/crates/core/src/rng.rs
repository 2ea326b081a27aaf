//! Seeded, portable random streams.
//!
//! Every random draw in the crate comes from ChaCha8 keyed by a 64-bit seed.
//! Independent substreams are obtained in two ways:
//!
//! * [`stream`] selects ChaCha's 64-bit stream word, so `stream(seed, j)` for
//!   process column `j` never overlaps `stream(seed, j')`;
//! * [`derive_seed`] folds a list of indices (fold number, sweep cell
//!   coordinates, Monte-Carlo realization, ...) into a fresh seed using the
//!   SplitMix64 finalizer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, indices: &[u64]) -> u64 {
    indices
        .iter()
        .fold(splitmix(seed), |acc, &i| splitmix(acc ^ splitmix(i.wrapping_add(1))))
}
