//! Residual life, age and the length-biased law of the interval that covers
//! an observation point.
//!
//! For an inter-arrival law with survival `S` and mean `t`, the residual life
//! seen from a point placed uniformly far into the process has density
//! `S(x) / t`, and the covering interval has the size-biased density
//! `v f(v) / t` (or `v p(v) / t` on atoms).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, Law};
use crate::error::{Error, Result};
use crate::ks::{self, KsReport};
use crate::process::age_and_residual_at;
use crate::quadrature::integrate;
use crate::trials::run_trials;
use crate::window::WindowStrategy;

const CDF_TOL: f64 = 1e-11;

/// Buckets with fewer samples are reported but not tested.
pub const MIN_BUCKET_SAMPLES: usize = 500;

/// Family-wise level for the conditional-uniformity buckets.
pub const BUCKET_FAMILY_ALPHA: f64 = 0.01;

/// `h_X(x) = P(T > x) / E(T)`.
pub fn residual_pdf(spec: &DistributionSpec, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    spec.survival(x) / spec.mean()
}

/// `∫_0^x S(y) dy`: exact on atom laws, adaptive quadrature otherwise.
fn integrated_survival(spec: &DistributionSpec, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    if let Some(atoms) = spec.atoms() {
        return Ok(atoms.iter().map(|&(v, p)| p * v.min(x)).sum());
    }
    let s = |y: f64| spec.survival(y);
    match *spec.law() {
        // split at the kinks of the survival function
        Law::UniformInterval { a, b } => {
            let mut total = x.min(a);
            if x > a {
                total += integrate(s, a, x.min(b), CDF_TOL)?;
            }
            Ok(total)
        }
        _ => integrate(s, 0.0, x, CDF_TOL),
    }
}

/// CDF of the residual life, integrated from [`residual_pdf`].
pub fn residual_cdf(spec: &DistributionSpec, x: f64) -> Result<f64> {
    Ok((integrated_survival(spec, x)? / spec.mean()).clamp(0.0, 1.0))
}

fn atom_probability(atoms: &[(f64, f64)], v: f64) -> Option<f64> {
    atoms.iter().find(|(a, _)| (a - v).abs() <= 1e-12 * a.abs().max(1.0)).map(|&(_, p)| p)
}

/// `g_T(v) = v f(v) / t` for continuous laws, `v p(v) / t` at atoms.
pub fn length_biased_pdf(spec: &DistributionSpec, v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::UnsupportedPoint { v });
    }
    if let Some(atoms) = spec.atoms() {
        return atom_probability(&atoms, v).map(|p| v * p / spec.mean()).ok_or(Error::UnsupportedPoint { v });
    }
    if let Law::UniformInterval { a, b } = *spec.law() {
        if v < a || v > b {
            return Err(Error::UnsupportedPoint { v });
        }
    }
    let f = spec.density(v).expect("continuous law has a density");
    Ok(v * f / spec.mean())
}

/// CDF of the length-biased law.
pub fn length_biased_cdf(spec: &DistributionSpec, v: f64) -> Result<f64> {
    if v <= 0.0 {
        return Ok(0.0);
    }
    let t = spec.mean();
    if let Some(atoms) = spec.atoms() {
        return Ok(atoms.iter().filter(|(a, _)| *a <= v).map(|&(a, p)| a * p).sum::<f64>() / t);
    }
    let g = |y: f64| y * spec.density(y).unwrap_or(0.0) / t;
    let value = match *spec.law() {
        Law::UniformInterval { a, b } => {
            if v <= a {
                0.0
            } else {
                integrate(g, a, v.min(b), CDF_TOL)?
            }
        }
        _ => integrate(g, 0.0, v, CDF_TOL)?,
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Age, residual and covering interval observed at the window start, one
/// entry per trial.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualSampleSet {
    pub residuals: Vec<f64>,
    pub ages: Vec<f64>,
    pub containing_intervals: Vec<f64>,
}

impl ResidualSampleSet {
    pub fn len(&self) -> usize {
        self.residuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residuals.is_empty()
    }
}

pub fn sample_residuals(spec: &DistributionSpec, strat: &WindowStrategy, n_trials: u64, seed: u64) -> Result<ResidualSampleSet> {
    strat.validate()?;
    if n_trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let obs = run_trials(n_trials, seed, |_, stream| {
        let u1 = strat.place_window(1.0, stream)?.u1;
        age_and_residual_at(spec, u1, stream)
    })?;
    let mut set = ResidualSampleSet {
        residuals: Vec::with_capacity(obs.len()),
        ages: Vec::with_capacity(obs.len()),
        containing_intervals: Vec::with_capacity(obs.len()),
    };
    for o in obs {
        set.residuals.push(o.residual);
        set.ages.push(o.age);
        set.containing_intervals.push(o.containing_interval);
    }
    Ok(set)
}

/// How covering intervals are grouped before testing conditional uniformity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bucketing {
    /// Bins `[k w, (k + 1) w)`.
    Width { width: f64 },
    /// One bucket per distinct interval length (atom laws).
    Exact,
}

impl Bucketing {
    /// Exact matching for atom laws, bins of width `t / 50` otherwise.
    pub fn default_for(spec: &DistributionSpec) -> Self {
        if spec.is_continuous() {
            Bucketing::Width { width: spec.mean() / 50.0 }
        } else {
            Bucketing::Exact
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketReport {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// `None` when the bucket has fewer than [`MIN_BUCKET_SAMPLES`] samples.
    pub ks: Option<KsReport>,
}

/// KS test of `residual / containing_interval` against `U(0, 1)` inside each
/// bucket of covering-interval length. Thresholds are Bonferroni-adjusted so
/// that the tested buckets jointly run at the 1% level (a single bucket gets
/// the plain `1.63 / sqrt(n)`).
pub fn conditional_uniformity_check(samples: &ResidualSampleSet, bucketing: Bucketing) -> Result<Vec<BucketReport>> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let mut groups: BTreeMap<i64, (f64, f64, Vec<f64>)> = BTreeMap::new();
    for (r, c) in samples.residuals.iter().zip(&samples.containing_intervals) {
        let (key, lo, hi) = match bucketing {
            Bucketing::Width { width } => {
                if !(width > 0.0) {
                    return Err(Error::InvalidArgument(format!("bucket width must be positive, got {width}")));
                }
                let k = (c / width).floor();
                (k as i64, k * width, (k + 1.0) * width)
            }
            // positive floats order like their bit patterns
            Bucketing::Exact => (c.to_bits() as i64, *c, *c),
        };
        groups.entry(key).or_insert_with(|| (lo, hi, Vec::new())).2.push(r / c);
    }
    let tested = groups.values().filter(|g| g.2.len() >= MIN_BUCKET_SAMPLES).count();
    Ok(groups
        .into_values()
        .map(|(lo, hi, ratios)| {
            let count = ratios.len();
            let ks = (count >= MIN_BUCKET_SAMPLES).then(|| {
                let stat = ks::ks_statistic(&ratios, ks::unit_uniform_cdf);
                let threshold = if tested > 1 {
                    ks::threshold_at(BUCKET_FAMILY_ALPHA / tested as f64, count as u64)
                } else {
                    ks::default_threshold(count as u64)
                };
                KsReport::with_threshold(stat, count as u64, threshold)
            });
            BucketReport { lo, hi, count, ks }
        })
        .collect())
}

/// KS of a sample against the residual CDF.
pub fn residual_ks(spec: &DistributionSpec, xs: &[f64]) -> Result<KsReport> {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cdf: Vec<f64> = sorted.iter().map(|&x| residual_cdf(spec, x)).collect::<Result<_>>()?;
    Ok(KsReport::new(ks::ks_statistic_tabulated(&sorted, &cdf), xs.len() as u64))
}

/// KS of covering-interval lengths against the length-biased CDF
/// (continuous laws).
pub fn length_biased_ks(spec: &DistributionSpec, xs: &[f64]) -> Result<KsReport> {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cdf: Vec<f64> = sorted.iter().map(|&x| length_biased_cdf(spec, x)).collect::<Result<_>>()?;
    Ok(KsReport::new(ks::ks_statistic_tabulated(&sorted, &cdf), xs.len() as u64))
}

/// Observed frequency of each atom among covering intervals, with its
/// length-biased prediction and binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomFrequency {
    pub value: f64,
    pub observed: f64,
    pub predicted: f64,
    pub stderr: f64,
}

pub fn atom_frequencies(spec: &DistributionSpec, containing: &[f64]) -> Option<Vec<AtomFrequency>> {
    let atoms = spec.atoms()?;
    let n = containing.len() as f64;
    Some(
        atoms
            .iter()
            .map(|&(v, p)| {
                let hits = containing.iter().filter(|&&c| c == v).count() as f64;
                let predicted = v * p / spec.mean();
                AtomFrequency { value: v, observed: hits / n, predicted, stderr: (predicted * (1.0 - predicted) / n).sqrt() }
            })
            .collect(),
    )
}
