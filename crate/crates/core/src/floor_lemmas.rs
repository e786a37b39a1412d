//! `E⌊c − U⌋ = c − 1` for `U` uniform, its zero-mean-noise extension, and a
//! numerical probe of the converse (only the uniform law satisfies it for
//! every `c`).

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::stream::RandomStream;
use crate::trials::moments;

const NOISE_MEAN_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloorExpectationResult {
    pub c: f64,
    pub estimate: f64,
    pub exact: f64,
    pub n: u64,
    pub stderr: f64,
}

impl FloorExpectationResult {
    pub fn within(&self, k: f64) -> bool {
        (self.estimate - self.exact).abs() <= k * self.stderr
    }
}

/// `c − 1`. Integer `c` lies outside the lemma's `n < c < n + 1` setting and
/// is flagged with [`Error::IntegerC`], which still carries `c − 1`.
pub fn floor_expectation_exact(c: f64) -> Result<f64> {
    if !c.is_finite() {
        return Err(Error::InvalidArgument(format!("c must be finite, got {c}")));
    }
    if c == c.floor() {
        return Err(Error::IntegerC { c, value: c - 1.0 });
    }
    Ok(c - 1.0)
}

fn exact_or_boundary(c: f64) -> Result<f64> {
    match floor_expectation_exact(c) {
        Ok(v) | Err(Error::IntegerC { value: v, .. }) => Ok(v),
        Err(e) => Err(e),
    }
}

fn mc_floor<F: FnMut(&mut RandomStream) -> f64>(c: f64, n: u64, seed: u64, mut noise: F) -> Result<FloorExpectationResult> {
    if n < 100 {
        return Err(Error::InvalidArgument(format!("need n >= 100 draws, got {n}")));
    }
    let exact = exact_or_boundary(c)?;
    let mut stream = RandomStream::new(seed);
    let xs: Vec<f64> = (0..n)
        .map(|_| {
            let eta = noise(&mut stream);
            let u = stream.uniform_open_closed();
            (c + eta - u).floor()
        })
        .collect();
    let (estimate, var) = moments(&xs);
    Ok(FloorExpectationResult { c, estimate, exact, n, stderr: (var / n as f64).sqrt() })
}

/// Monte Carlo mean of `⌊c − U⌋`, `U ~ U(0, 1]`. Uses the true floor, which
/// differs from truncation toward zero whenever `c − U < 0`.
pub fn floor_expectation_mc(c: f64, n: u64, seed: u64) -> Result<FloorExpectationResult> {
    mc_floor(c, n, seed, |_| 0.0)
}

/// Zero-mean perturbation `η`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseLaw {
    /// `(value, probability)` pairs.
    Atoms { atoms: Vec<(f64, f64)> },
    Gaussian { mean: f64, sd: f64 },
    Uniform { a: f64, b: f64 },
    /// `T − E(T)` for an inter-arrival law.
    Centered { spec: DistributionSpec },
}

impl NoiseLaw {
    pub fn mean(&self) -> f64 {
        match self {
            NoiseLaw::Atoms { atoms } => atoms.iter().map(|(v, p)| v * p).sum(),
            NoiseLaw::Gaussian { mean, .. } => *mean,
            NoiseLaw::Uniform { a, b } => 0.5 * (a + b),
            NoiseLaw::Centered { .. } => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            NoiseLaw::Atoms { atoms } => {
                !atoms.is_empty()
                    && atoms.iter().all(|(v, p)| v.is_finite() && *p > 0.0 && *p <= 1.0)
                    && (atoms.iter().map(|a| a.1).sum::<f64>() - 1.0).abs() <= 1e-12
            }
            NoiseLaw::Gaussian { mean, sd } => mean.is_finite() && sd.is_finite() && *sd >= 0.0,
            NoiseLaw::Uniform { a, b } => a.is_finite() && b.is_finite() && a < b,
            NoiseLaw::Centered { .. } => true,
        };
        if !ok {
            return Err(Error::InvalidArgument(format!("invalid noise law {self:?}")));
        }
        let mean = self.mean();
        if mean.abs() > NOISE_MEAN_TOL {
            return Err(Error::NonZeroMeanNoise { mean });
        }
        Ok(())
    }

    fn sampler(&self) -> Box<dyn FnMut(&mut RandomStream) -> f64 + '_> {
        match self {
            NoiseLaw::Atoms { atoms } if atoms.len() == 1 => {
                let v = atoms[0].0;
                Box::new(move |_| v)
            }
            NoiseLaw::Gaussian { mean, sd } if *sd == 0.0 => {
                let v = *mean;
                Box::new(move |_| v)
            }
            NoiseLaw::Atoms { atoms } => Box::new(move |s| {
                let u = s.uniform();
                let mut acc = 0.0;
                for &(v, p) in atoms {
                    acc += p;
                    if u < acc {
                        return v;
                    }
                }
                atoms[atoms.len() - 1].0
            }),
            NoiseLaw::Gaussian { mean, sd } => {
                let normal = Normal::new(*mean, *sd).expect("validated");
                Box::new(move |s| normal.sample(s))
            }
            NoiseLaw::Uniform { a, b } => Box::new(move |s| a + (b - a) * s.uniform()),
            NoiseLaw::Centered { spec } => Box::new(move |s| spec.sample(s) - spec.mean()),
        }
    }
}

/// Monte Carlo mean of `⌊c + η − U⌋` for zero-mean `η`; `exact` is `c − 1`.
pub fn floor_expectation_noisy(c: f64, noise: &NoiseLaw, n: u64, seed: u64) -> Result<FloorExpectationResult> {
    noise.validate()?;
    mc_floor(c, n, seed, noise.sampler())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConverseRow {
    pub c: f64,
    /// `E⌊c − U'⌋ = −(1 − F(c))` for `U'` on `(0, 1)` with CDF `F`.
    pub lhs: f64,
    /// `c − 1`.
    pub rhs: f64,
}

impl ConverseRow {
    pub fn violation(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

pub fn converse_probe<F: Fn(f64) -> f64>(cdf: F, c_grid: &[f64]) -> Result<Vec<ConverseRow>> {
    c_grid
        .iter()
        .map(|&c| {
            if !(c > 0.0 && c < 1.0) {
                return Err(Error::InvalidArgument(format!("probe points must lie in (0, 1), got {c}")));
            }
            Ok(ConverseRow { c, lhs: -(1.0 - cdf(c)), rhs: c - 1.0 })
        })
        .collect()
}

/// `0.01, 0.02, ..., 0.99`.
pub fn dense_grid() -> Vec<f64> {
    (1..100).map(|i| i as f64 / 100.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn beta22(x: f64) -> f64 {
        3.0 * x * x - 2.0 * x * x * x
    }

    /// Piecewise integral of ⌊c − u⌋ over u ∈ (0, 1): floor is n on
    /// (0, c − n] and n − 1 on (c − n, 1).
    fn floor_integral_oracle(c: f64) -> f64 {
        let n = c.floor();
        let f = c - n;
        n * f + (n - 1.0) * (1.0 - f)
    }

    #[test]
    fn exact_examples() {
        assert_abs_diff_eq!(floor_expectation_exact(3.2).unwrap(), 2.2, epsilon = 1e-15);
        assert_abs_diff_eq!(floor_expectation_exact(0.5).unwrap(), -0.5);
        assert!(matches!(floor_expectation_exact(1.0), Err(Error::IntegerC { value, .. }) if value == 0.0));
        for c in [-2.7, 0.5, 3.2, 7.99, 12.345] {
            assert_abs_diff_eq!(floor_expectation_exact(c).unwrap(), floor_integral_oracle(c), epsilon = 1e-12);
        }
    }

    #[test]
    fn mc_listing_case() {
        let r = floor_expectation_mc(3.2, 100_000, 7).unwrap();
        assert!(r.within(5.0), "{r:?}");
        let r = floor_expectation_mc(1.0, 1000, 7).unwrap();
        assert_eq!((r.estimate, r.stderr), (0.0, 0.0));
        assert!(floor_expectation_mc(3.2, 10, 7).is_err());
    }

    #[test]
    fn truncation_differs_from_floor_below_one() {
        // truncation of c − U for c = 0.5 averages to 0, the floor to −0.5
        let mut s = RandomStream::new(1);
        let trunc: f64 = (0..10_000).map(|_| (0.5 - s.uniform_open_closed()).trunc()).sum::<f64>() / 10_000.0;
        assert_eq!(trunc, 0.0);
        let r = floor_expectation_mc(0.5, 10_000, 1).unwrap();
        assert!((r.estimate + 0.5).abs() < 0.05);
    }

    #[test]
    fn noisy_requires_zero_mean() {
        let bad = NoiseLaw::Atoms { atoms: vec![(0.0, 0.5), (1.0, 0.5)] };
        assert!(matches!(floor_expectation_noisy(3.2, &bad, 1000, 0), Err(Error::NonZeroMeanNoise { .. })));
        let zero = NoiseLaw::Gaussian { mean: 0.0, sd: 0.0 };
        let a = floor_expectation_noisy(3.2, &zero, 1000, 5).unwrap();
        let b = floor_expectation_mc(3.2, 1000, 5).unwrap();
        assert_eq!(a.estimate, b.estimate);
    }

    #[test]
    fn noisy_two_point() {
        let noise = NoiseLaw::Atoms { atoms: vec![(-0.5, 0.5), (0.5, 0.5)] };
        let r = floor_expectation_noisy(3.2, &noise, 100_000, 11).unwrap();
        assert!(r.within(5.0), "{r:?}");
    }

    #[test]
    fn converse_examples() {
        let rows = converse_probe(beta22, &[0.25, 0.5]).unwrap();
        assert_abs_diff_eq!(rows[0].lhs, -0.84375, epsilon = 1e-15);
        assert_abs_diff_eq!(rows[0].rhs, -0.75);
        assert_abs_diff_eq!(rows[0].violation(), 0.09375, epsilon = 1e-15);
        assert_abs_diff_eq!(rows[1].lhs, rows[1].rhs, epsilon = 1e-15);
        let uniform = converse_probe(|x| x, &dense_grid()).unwrap();
        assert!(uniform.iter().all(|r| r.violation() < 1e-15));
        assert!(converse_probe(|x| x, &[1.0]).is_err());
    }
}
