//! Seeded, worker-count-independent random sampling.
//!
//! Every stochastic routine draws from ChaCha streams derived from an
//! explicit seed. Batches of shots get one independent stream each and are
//! merged in batch index order, so results depend only on the seed and the
//! batch layout, never on how many threads executed them.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Shots per independent stream when a run is split into batches.
pub const BATCH_SIZE: u64 = 4096;

/// The RNG used throughout the crate.
pub type Stream = ChaCha12Rng;

pub fn stream_from_seed(seed: u64) -> Stream {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Derive the stream for one batch of a run: same 256-bit key, distinct
/// ChaCha stream index, so batches are independent by construction.
pub fn batch_stream(seed: u64, batch: u64) -> Stream {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(batch.wrapping_add(1));
    rng
}

/// Draw a fresh 64-bit seed; used to give sub-tasks their own root seeds.
pub fn derive_seed(rng: &mut impl RngCore) -> u64 {
    rng.next_u64()
}

/// Split `shots` into batch sizes of at most `BATCH_SIZE`.
pub fn batch_sizes(shots: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut left = shots;
    while left > 0 {
        let n = left.min(BATCH_SIZE);
        out.push(n);
        left -= n;
    }
    out
}

/// One standard-normal draw (Box-Muller; two uniforms per call).
pub fn standard_normal(rng: &mut impl Rng) -> f64 {
    loop {
        let u1: f64 = rng.random();
        if u1 <= f64::MIN_POSITIVE {
            continue;
        }
        let u2: f64 = rng.random();
        return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
    }
}

/// Sample an index from a probability vector. Probabilities are taken in
/// index order; any shortfall from roundoff goes to the last index.
pub fn sample_index(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p.max(0.0);
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_streams_are_independent_of_worker_layout() {
        let mut a = batch_stream(42, 0);
        let mut b = batch_stream(42, 1);
        assert_ne!(a.next_u64(), b.next_u64());
        let mut a2 = batch_stream(42, 0);
        let mut again = batch_stream(42, 0);
        assert_eq!(a2.next_u64(), again.next_u64());
    }

    #[test]
    fn batch_sizes_cover_all_shots() {
        assert_eq!(batch_sizes(0), Vec::<u64>::new());
        assert_eq!(batch_sizes(100), vec![100]);
        let sizes = batch_sizes(3 * BATCH_SIZE + 17);
        assert_eq!(sizes.iter().sum::<u64>(), 3 * BATCH_SIZE + 17);
        assert!(sizes[..sizes.len() - 1].iter().all(|&s| s == BATCH_SIZE));
    }

    #[test]
    fn normal_draws_have_sane_moments() {
        let mut rng = stream_from_seed(7);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let x = standard_normal(&mut rng);
            sum += x;
            sum2 += x * x;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn sample_index_respects_distribution() {
        let mut rng = stream_from_seed(3);
        let probs = [0.5, 0.25, 0.25];
        let mut counts = [0u64; 3];
        for _ in 0..100_000 {
            counts[sample_index(&probs, &mut rng)] += 1;
        }
        assert!((counts[0] as f64 / 1e5 - 0.5).abs() < 0.01);
        assert!((counts[1] as f64 / 1e5 - 0.25).abs() < 0.01);
    }
}
