//! Seed-stable chunked parallelism.
//!
//! Work is split into fixed-size chunks. Chunk `i` draws from a ChaCha8
//! generator seeded with the run seed and switched to stream `i`, and chunk
//! results are combined in chunk order. Results therefore do not depend on
//! the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Samples per chunk for Monte Carlo loops. Changing it changes the random
/// streams, so it is part of the reproducibility contract.
pub const CHUNK_SIZE: u64 = 1 << 16;

/// Generator for chunk `chunk` of a run seeded with `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Runs `work(rng, chunk_index, len)` for each chunk covering `n_items`
/// items and returns the per-chunk results in chunk order.
///
/// `threads = None` uses the global rayon pool; `Some(n)` builds a dedicated
/// pool with `n` workers.
pub fn map_chunks<T, F>(n_items: u64, chunk_size: u64, seed: u64, threads: Option<usize>, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64, u64) -> T + Sync + Send,
{
    assert!(chunk_size > 0);
    let n_chunks = n_items.div_ceil(chunk_size);
    let run = || {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let len = chunk_size.min(n_items - c * chunk_size);
                let mut rng = chunk_rng(seed, c);
                work(&mut rng, c, len)
            })
            .collect::<Vec<T>>()
    };
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("failed to build thread pool")
            .install(run),
        None => run(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn thread_count_does_not_change_results() {
        let sum = |threads| -> Vec<u64> {
            map_chunks(10_000, 333, 42, threads, |rng, _, len| (0..len).map(|_| rng.random::<u32>() as u64).sum())
        };
        let one = sum(Some(1));
        assert_eq!(one, sum(Some(4)));
        assert_eq!(one, sum(None));
        assert_eq!(one.len(), 31);
    }

    #[test]
    fn empty_run() {
        let out: Vec<u64> = map_chunks(0, 10, 0, Some(2), |_, _, len| len);
        assert!(out.is_empty());
    }

    #[test]
    fn chunk_lengths_cover_items() {
        let lens: Vec<u64> = map_chunks(25, 10, 0, None, |_, _, len| len);
        assert_eq!(lens, vec![10, 10, 5]);
    }
}
