//! Seeded randomness with per-sample substreams.
//!
//! Every sampled quantity in the library is a pure function of `(seed,
//! index)`: sample `i` draws from its own ChaCha stream, so parallel
//! iteration order cannot change any result.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent generator for sample `index` of the run identified by `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
