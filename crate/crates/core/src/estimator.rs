//! Monte Carlo estimates of expected window counts `E[N(u1 -> u2)]`.
//!
//! Each trial draws a fresh window and a fresh trajectory from its own
//! substream; the window start is drawn first, then the inter-arrival times.

use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::process::count_window;
use crate::stream::derive_seed;
use crate::trials::{count_moments, run_trials};
use crate::window::WindowStrategy;

const Z95: f64 = 1.96;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_trials: u64,
    pub ci95_lo: f64,
    pub ci95_hi: f64,
    /// Reference value `u / t`.
    pub target: f64,
}

impl CountEstimate {
    pub fn from_counts(counts: &[u64], target: f64) -> Self {
        let (mean, var) = count_moments(counts);
        Self::from_moments(mean, var, counts.len() as u64, target)
    }

    pub fn from_moments(mean: f64, variance: f64, n_trials: u64, target: f64) -> Self {
        let stderr = (variance / n_trials as f64).sqrt();
        Self { mean, stderr, n_trials, ci95_lo: mean - Z95 * stderr, ci95_hi: mean + Z95 * stderr, target }
    }

    /// `|mean - target| <= k * stderr`.
    pub fn within(&self, k: f64) -> bool {
        (self.mean - self.target).abs() <= k * self.stderr
    }

    /// Distance from the target in standard errors (infinite when the
    /// estimate has zero spread but misses the target).
    pub fn sigmas_off(&self) -> f64 {
        let d = (self.mean - self.target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

fn check_trials(n_trials: u64) -> Result<()> {
    if n_trials < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 trials, got {n_trials}")));
    }
    Ok(())
}

/// Per-trial counts for `estimate_interval_count`.
pub fn interval_counts(spec: &DistributionSpec, strat: &WindowStrategy, u: f64, n_trials: u64, seed: u64) -> Result<Vec<u64>> {
    strat.validate()?;
    run_trials(n_trials, seed, |_, stream| {
        let w = strat.place_window(u, stream)?;
        count_window(spec, &w, stream)
    })
}

pub fn estimate_interval_count(
    spec: &DistributionSpec,
    strat: &WindowStrategy,
    u: f64,
    n_trials: u64,
    seed: u64,
) -> Result<CountEstimate> {
    check_trials(n_trials)?;
    let counts = interval_counts(spec, strat, u, n_trials, seed)?;
    Ok(CountEstimate::from_counts(&counts, u / spec.mean()))
}

/// `μ(s) = E[N(s)]`, counting events in `(0, s]`. The target is `s / t`.
pub fn estimate_mu(spec: &DistributionSpec, s: f64, n_trials: u64, seed: u64) -> Result<CountEstimate> {
    estimate_interval_count(spec, &WindowStrategy::FixedStart { m: 0.0 }, s, n_trials, seed)
}

/// One estimate per window length; cell `i` uses the seed family
/// `derive_seed(seed, i)`.
pub fn sweep(
    spec: &DistributionSpec,
    strat: &WindowStrategy,
    u_list: &[f64],
    n_trials: u64,
    seed: u64,
) -> Result<Vec<CountEstimate>> {
    if u_list.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one window length".into()));
    }
    u_list
        .iter()
        .enumerate()
        .map(|(i, &u)| estimate_interval_count(spec, strat, u, n_trials, derive_seed(seed, i as u64)))
        .collect()
}
