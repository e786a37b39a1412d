//! One-sample Kolmogorov–Smirnov statistic and pass/fail reports.

use serde::{Deserialize, Serialize};

/// Asymptotic critical value at the 1% level, `sqrt(-ln(0.005) / 2)`, rounded.
pub const KS_CRITICAL_1PCT: f64 = 1.63;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    pub n: u64,
    pub threshold: f64,
    pub pass: bool,
}

impl KsReport {
    /// Report against the default threshold `1.63 / sqrt(n)`.
    pub fn new(statistic: f64, n: u64) -> Self {
        Self::with_threshold(statistic, n, default_threshold(n))
    }

    pub fn with_threshold(statistic: f64, n: u64, threshold: f64) -> Self {
        Self { statistic, n, threshold, pass: statistic < threshold }
    }
}

pub fn default_threshold(n: u64) -> f64 {
    KS_CRITICAL_1PCT / (n as f64).sqrt()
}

/// Asymptotic threshold at level `alpha`: `sqrt(-ln(alpha / 2) / 2) / sqrt(n)`.
pub fn threshold_at(alpha: f64, n: u64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt() / (n as f64).sqrt()
}

/// `sup_x |F_n(x) - F(x)|`, checking both sides of every jump of the
/// empirical CDF. Ties are grouped so that atoms in the data are handled.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    ks_statistic_sorted(&xs, cdf)
}

pub fn ks_statistic_sorted<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    sup_distance(sorted, |i| cdf(sorted[i]))
}

/// Same as [`ks_statistic_sorted`] with the reference CDF already evaluated
/// at every sample.
pub fn ks_statistic_tabulated(sorted: &[f64], cdf_values: &[f64]) -> f64 {
    assert_eq!(sorted.len(), cdf_values.len());
    sup_distance(sorted, |i| cdf_values[i])
}

fn sup_distance<F: FnMut(usize) -> f64>(sorted: &[f64], mut cdf_at: F) -> f64 {
    let n = sorted.len() as f64;
    let mut sup = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let f = cdf_at(i);
        // F_n just below x is i/n, at x it is j/n
        sup = sup.max((f - i as f64 / n).abs()).max((j as f64 / n - f).abs());
        i = j;
    }
    sup
}

pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> KsReport {
    KsReport::new(ks_statistic(samples, cdf), samples.len() as u64)
}

/// CDF of `U[0, 1)`.
pub fn unit_uniform_cdf(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_grid_has_half_step_statistic() {
        let n = 100;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&xs, unit_uniform_cdf);
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn point_mass_against_uniform() {
        let xs = vec![0.0; 50];
        assert_eq!(ks_statistic(&xs, unit_uniform_cdf), 1.0);
        let half: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 0.0 } else { 0.5 }).collect();
        assert!((ks_statistic(&half, unit_uniform_cdf) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn thresholds() {
        assert!((default_threshold(10_000) - 0.0163).abs() < 1e-12);
        assert!((threshold_at(0.01, 1) - 1.6276).abs() < 1e-4);
        let r = KsReport::new(0.01, 10_000);
        assert!(r.pass);
        assert!(!KsReport::new(0.02, 10_000).pass);
    }
}
