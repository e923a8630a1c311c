//! Seeded, partition-independent random streams.
//!
//! Every Monte Carlo consumer draws from `(seed, stream, chunk)`-keyed ChaCha8
//! generators. Work is split into fixed-size chunks, so the output is
//! identical no matter how many threads process the chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Samples per chunk. Part of the reproducibility contract: changing it
/// changes every seeded output.
pub const CHUNK: usize = 1 << 14;

/// Stream tags. Distinct consumers of one user seed never share a stream.
pub mod stream {
    pub const SIGNAL: u64 = 1;
    pub const VACUUM_PORT: u64 = 2;
    pub const CHAIN_1: u64 = 3;
    pub const CHAIN_2: u64 = 4;
    pub const RAMSEY: u64 = 5;
    pub const PHASE: u64 = 6;
    pub const MODE_TRAJECTORY: u64 = 7;
    pub const FIT_NOISE: u64 = 8;
}

/// Generator for one chunk of one stream.
pub fn chunk_rng(seed: u64, stream: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((stream << 40) ^ chunk);
    rng
}

/// Fill `count` values in parallel, chunk `c` drawn from `chunk_rng(seed, stream, c)`.
pub fn generate<T, F>(count: usize, seed: u64, stream: u64, draw: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(count - c * CHUNK);
            let mut rng = chunk_rng(seed, stream, c as u64);
            (0..len).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    parts.into_iter().flatten().collect()
}
