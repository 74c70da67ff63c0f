//! Seeded Born-rule sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Deterministic RNG used throughout the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws `count` indices with probability proportional to `weights`.
///
/// Weights need not be normalized; zero-weight entries are never chosen.
pub fn sample_indices(weights: &[f64], seed: u64, count: usize) -> Result<Vec<usize>> {
    if weights.is_empty() {
        return Err(Error::EmptyBranches);
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidParameter("weights sum to zero".into()));
    }
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w / total;
        cumulative.push(acc);
    }
    let last_positive = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
    let mut rng = seeded_rng(seed);
    Ok((0..count)
        .map(|_| {
            let u: f64 = rng.gen();
            let idx = cumulative.partition_point(|&c| c <= u);
            // u can land past the last cumulative value only through round-off
            let idx = idx.min(last_positive);
            if weights[idx] > 0.0 {
                idx
            } else {
                // step forward to the next nonzero weight
                (idx..weights.len()).find(|&i| weights[i] > 0.0).unwrap_or(last_positive)
            }
        })
        .collect())
}

/// Per-index counts of `count` seeded draws.
pub fn sample_counts(weights: &[f64], seed: u64, count: usize) -> Result<Vec<usize>> {
    let mut counts = vec![0usize; weights.len()];
    for i in sample_indices(weights, seed, count)? {
        counts[i] += 1;
    }
    Ok(counts)
}
