//! Mapping a sampled trajectory and window onto the deterministic process
//! with events at `k t`, `k >= 1`.
//!
//! Removing every `ε_i = T_i − t` while keeping what happens inside the
//! window shifts the window to
//!
//! ```text
//! u1' = u1 − Σ_{i≤M} ε_i   = M t + X,        X = u1 − S_M
//! u2' = u2 − Σ_{i≤M+N} ε_i = (M + N) t + Y,  Y = u2 − S_{M+N}
//! ```
//!
//! and the modified count differs from the original by exactly
//! `⌊Y/t⌋ − ⌊X/t⌋`.
//!
//! When `X > N t + Y` the shifted window is inverted (`u2' < u1'`). The
//! modified count is then the signed lattice count `⌊u2'/t⌋ − ⌊u1'/t⌋`,
//! which can be negative.

use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::estimator::CountEstimate;
use crate::process::{generate, ObservationWindow, Realization};
use crate::trials::{count_moments, moments, run_trials, signed_count_moments};
use crate::window::WindowStrategy;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformOutcome {
    pub original_count: u64,
    /// `#{k : u1' < k t <= u2'}`, negated when the window is inverted.
    pub modified_count: i64,
    pub delta: i64,
    pub u1_mod: f64,
    pub u2_mod: f64,
    /// `X = u1 − S_M`.
    pub age_start: f64,
    /// `Y = u2 − S_{M+N}`.
    pub age_end: f64,
    pub t: f64,
    pub m: u64,
    pub n: u64,
}

impl TransformOutcome {
    /// `⌊Y/t⌋ − ⌊X/t⌋`.
    pub fn boundary_delta(&self) -> i64 {
        (self.age_end / self.t).floor() as i64 - (self.age_start / self.t).floor() as i64
    }

    pub fn identity_holds(&self) -> bool {
        self.delta == self.boundary_delta()
    }

    pub fn is_inverted(&self) -> bool {
        self.u2_mod < self.u1_mod
    }
}

/// Largest `k` with `k t <= x`, checked against the actual products.
fn lattice_floor(x: f64, t: f64) -> i64 {
    let mut k = (x / t).floor() as i64;
    while ((k + 1) as f64) * t <= x {
        k += 1;
    }
    while (k as f64) * t > x {
        k -= 1;
    }
    k
}

pub fn determinize(real: &Realization, w: &ObservationWindow, t: f64) -> Result<TransformOutcome> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidMean(t));
    }
    let original = real.count_in(w)?;
    let m = real.count_upto(w.u1)? as usize;
    let n = original as usize;
    let times = real.event_times();
    let at = |k: usize| if k == 0 { 0.0 } else { times[k - 1] };
    let age_start = w.u1 - at(m);
    let age_end = w.u2 - at(m + n);
    let u1_mod = m as f64 * t + age_start;
    let u2_mod = (m + n) as f64 * t + age_end;
    let modified = lattice_floor(u2_mod, t) - lattice_floor(u1_mod, t);
    Ok(TransformOutcome {
        original_count: original,
        modified_count: modified,
        delta: modified - original as i64,
        u1_mod,
        u2_mod,
        age_start,
        age_end,
        t,
        m: m as u64,
        n: n as u64,
    })
}

fn check_strategy(spec: &DistributionSpec, strat: &WindowStrategy) -> Result<()> {
    strat.validate()?;
    match *strat {
        WindowStrategy::LargeUniform { theta } if theta >= 100.0 * spec.mean() => Ok(()),
        _ => Err(Error::InvalidArgument(format!(
            "transform check needs a large-uniform start with theta >= 100 t = {}",
            100.0 * spec.mean()
        ))),
    }
}

/// One [`TransformOutcome`] per trial; trial `i` replays substream `i`.
pub fn transform_trials(
    spec: &DistributionSpec,
    strat: &WindowStrategy,
    u: f64,
    n_trials: u64,
    seed: u64,
) -> Result<Vec<TransformOutcome>> {
    check_strategy(spec, strat)?;
    let t = spec.mean();
    run_trials(n_trials, seed, |_, stream| {
        let w = strat.place_window(u, stream)?;
        let real = generate(spec, w.u2, stream)?;
        determinize(&real, &w, t)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformCheck {
    pub original: CountEstimate,
    pub modified: CountEstimate,
    pub mean_delta: f64,
    pub delta_stderr: f64,
    /// Empirical `P(X > t)`.
    pub p_exit: f64,
    /// Empirical `P(Y > t)`.
    pub p_enter: f64,
    /// Standard error of `p_exit − p_enter` from the paired indicators.
    pub p_diff_stderr: f64,
    /// Trials where `delta != ⌊Y/t⌋ − ⌊X/t⌋`.
    pub identity_violations: u64,
    /// Share of trials with `|delta| > 1`.
    pub frac_abs_delta_gt1: f64,
    /// Share of trials whose shifted window is inverted.
    pub frac_inverted: f64,
}

pub fn summarize(outcomes: &[TransformOutcome], u: f64, t: f64) -> Result<TransformCheck> {
    if outcomes.len() < 2 {
        return Err(Error::InvalidArgument("need at least 2 trials".into()));
    }
    let n = outcomes.len() as f64;
    let target = u / t;
    let orig: Vec<u64> = outcomes.iter().map(|o| o.original_count).collect();
    let modi: Vec<i64> = outcomes.iter().map(|o| o.modified_count).collect();
    let deltas: Vec<f64> = outcomes.iter().map(|o| o.delta as f64).collect();
    let (mean_delta, var_delta) = moments(&deltas);
    let exits = outcomes.iter().filter(|o| o.age_start > t).count() as f64;
    let enters = outcomes.iter().filter(|o| o.age_end > t).count() as f64;
    let diffs: Vec<f64> = outcomes.iter().map(|o| (o.age_start > t) as i32 as f64 - (o.age_end > t) as i32 as f64).collect();
    let (_, var_diff) = moments(&diffs);
    let (mo, vo) = count_moments(&orig);
    let (mm, vm) = signed_count_moments(&modi);
    Ok(TransformCheck {
        original: CountEstimate::from_moments(mo, vo, orig.len() as u64, target),
        modified: CountEstimate::from_moments(mm, vm, modi.len() as u64, target),
        mean_delta,
        delta_stderr: (var_delta / n).sqrt(),
        p_exit: exits / n,
        p_enter: enters / n,
        p_diff_stderr: (var_diff / n).sqrt(),
        identity_violations: outcomes.iter().filter(|o| !o.identity_holds()).count() as u64,
        frac_abs_delta_gt1: outcomes.iter().filter(|o| o.delta.abs() > 1).count() as f64 / n,
        frac_inverted: outcomes.iter().filter(|o| o.is_inverted()).count() as f64 / n,
    })
}

pub fn transform_expectation_check(
    spec: &DistributionSpec,
    strat: &WindowStrategy,
    u: f64,
    n_trials: u64,
    seed: u64,
) -> Result<TransformCheck> {
    let outcomes = transform_trials(spec, strat, u, n_trials, seed)?;
    summarize(&outcomes, u, spec.mean())
}
