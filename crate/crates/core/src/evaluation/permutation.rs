use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linmodels::stats::percentile;

pub const CHANCE_PERCENTILE: f64 = 95.0;
pub const DEFAULT_N_PERM: usize = 1000;

/// SplitMix64 finalizer; decorrelates neighbouring seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn replicate_rng(seed: u64, replicate: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, replicate as u64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub chance: f64,
    pub percentile: f64,
    pub distribution: Vec<f64>,
}

/// Runs `n` replicates of `metric`, each with its own generator seeded from
/// `(seed, replicate)`. Replicates may run on any number of threads; the
/// distribution is stored in replicate order, so results do not depend on
/// the schedule.
pub fn permutation_distribution<F>(n: usize, seed: u64, metric: F) -> Result<PermutationResult>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    let distribution = (0..n)
        .into_par_iter()
        .map(|r| metric(&mut replicate_rng(seed, r)))
        .collect::<Result<Vec<f64>>>()?;
    let chance = percentile(&distribution, CHANCE_PERCENTILE);
    Ok(PermutationResult {
        chance,
        percentile: CHANCE_PERCENTILE,
        distribution,
    })
}

/// A uniformly shuffled copy of `values`.
///
/// Replicates relabel every trial once and rerun the whole fold loop. A
/// trial then carries the same label when it trains one fold and when it
/// tests another, as it does under the real labels; shuffling training
/// rows alone breaks that coupling between folds and gives a null that is
/// too narrow.
pub fn shuffled<T: Copy>(values: &[T], rng: &mut ChaCha8Rng) -> Vec<T> {
    let mut out = values.to_vec();
    out.shuffle(rng);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derived_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|r| derive_seed(7, r)).collect();
        assert_eq!(seeds.len(), 1000);
    }

    #[test]
    fn distribution_is_independent_of_thread_count() {
        let metric = |rng: &mut ChaCha8Rng| Ok(rng.random::<f64>());
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| permutation_distribution(300, 11, metric)).unwrap();
        let b = four.install(|| permutation_distribution(300, 11, metric)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let values: Vec<usize> = (0..50).collect();
        let out = shuffled(&values, &mut replicate_rng(1, 0));
        assert_ne!(out, values);
        let mut sorted = out.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, values);
        assert_eq!(out, shuffled(&values, &mut replicate_rng(1, 0)));
    }

    #[test]
    fn chance_is_the_95th_percentile() {
        let r = permutation_distribution(2000, 3, |rng| Ok(rng.random::<f64>())).unwrap();
        assert_eq!(r.chance, percentile(&r.distribution, 95.0));
        assert!((r.chance - 0.95).abs() < 0.02);
    }
}
