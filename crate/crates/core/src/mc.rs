//! Counter-based random streams for reproducible Monte Carlo.
//!
//! A run is a seed plus a stream plan: sample `i` of a run belongs to batch
//! `i / BATCH`, and batch `b` draws from ChaCha8 keyed by `seed` on stream
//! `base + b`. Batches are evaluated independently and their accumulators
//! merged in batch order, so the result depends only on
//! `(seed, base, n)`, never on how many workers ran the batches.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::par;

/// Samples per batch.
pub const BATCH: usize = 16_384;

/// Stream handle for batch `stream` of a run keyed by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Disjoint stream ranges for the independent parts of one report.
///
/// Each part gets 2^40 batches, far more than any run uses.
pub fn part_base(part: u64) -> u64 {
    part << 40
}

/// Evaluate `n` samples in batches and return the per-batch accumulators in
/// batch order. `f(rng, count)` must consume exactly the samples of one
/// batch.
pub fn run_batches<A, F>(seed: u64, base: u64, n: usize, f: F) -> Vec<A>
where
    A: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> A + Sync + Send,
{
    let batches = n.div_ceil(BATCH);
    par::map_range(batches, |b| {
        let count = if b + 1 == batches { n - b * BATCH } else { BATCH };
        let mut rng = stream_rng(seed, base + b as u64);
        f(&mut rng, count)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn batches_cover_exactly_n() {
        let counts = run_batches(7, 0, 3 * BATCH + 5, |_, c| c);
        assert_eq!(counts.iter().sum::<usize>(), 3 * BATCH + 5);
        assert_eq!(counts.len(), 4);
    }

    #[test]
    fn deterministic_across_modes() {
        let f = |rng: &mut ChaCha8Rng, c: usize| (0..c).map(|_| rng.random::<f64>()).sum::<f64>();
        let a = run_batches(11, 3, 100_000, f);
        let b = par::sequential(|| run_batches(11, 3, 100_000, f));
        assert_eq!(a, b);
    }

    #[test]
    fn streams_differ() {
        let x: u64 = stream_rng(1, 0).random();
        let y: u64 = stream_rng(1, 1).random();
        assert_ne!(x, y);
    }
}
