//! Parallel trial execution with order-preserving collection.
//!
//! Trial `i` always draws from `RandomStream::substream(seed, i)` and its
//! result lands at index `i`, so reductions over the returned buffer are
//! independent of the number of worker threads. Work runs on whatever rayon
//! pool is current; callers pick the thread count with `ThreadPool::install`.

use rayon::prelude::*;

use crate::error::Result;
use crate::stream::RandomStream;

pub fn run_trials<T, F>(n_trials: u64, seed: u64, trial: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &mut RandomStream) -> Result<T> + Sync + Send,
{
    (0..n_trials as usize)
        .into_par_iter()
        .with_min_len(64)
        .map(|i| {
            let i = i as u64;
            let mut stream = RandomStream::substream(seed, i);
            trial(i, &mut stream)
        })
        .collect()
}

/// Mean and unbiased sample variance from exact integer sums.
pub fn count_moments(counts: &[u64]) -> (f64, f64) {
    let n = counts.len() as u128;
    let sum: u128 = counts.iter().map(|&c| c as u128).sum();
    let sum_sq: u128 = counts.iter().map(|&c| (c as u128) * (c as u128)).sum();
    let mean = sum as f64 / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    // n·Σc² − (Σc)² is exact in u128 for any realistic trial count
    let centred = n * sum_sq - sum * sum;
    (mean, centred as f64 / (n as f64 * (n - 1) as f64))
}

/// [`count_moments`] for signed counts, exact in i128.
pub fn signed_count_moments(counts: &[i64]) -> (f64, f64) {
    let n = counts.len() as i128;
    let sum: i128 = counts.iter().map(|&c| c as i128).sum();
    let sum_sq: i128 = counts.iter().map(|&c| (c as i128) * (c as i128)).sum();
    let mean = sum as f64 / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let centred = n * sum_sq - sum * sum;
    (mean, centred as f64 / (n as f64 * (n - 1) as f64))
}

/// Mean and unbiased sample variance of real samples, summed in index order.
pub fn moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1.0))
}
