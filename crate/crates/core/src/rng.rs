//! Counter-style random streams: one independent ChaCha stream per `(seed, k)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for replicate `k` under master `seed`.
///
/// The key is derived from `seed` and the stream id is `k`, so replicate `k`
/// produces the same numbers regardless of how many other replicates exist
/// or which thread generates them.
pub fn replicate_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}
