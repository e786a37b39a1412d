//! Inter-arrival laws: validation, sampling and analytic descriptors.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rand_distr::{Distribution, Exp, Gamma, LogNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::stream::RandomStream;

/// Probabilities of a [`Law::DiscreteAtoms`] law must sum to one within this.
pub const ATOM_SUM_TOL: f64 = 1e-12;

const ERLANG_MAX_SHAPE: f64 = 3.0;

/// Tail mass dropped when truncating the characteristic-coefficient integral.
const CF_TAIL: f64 = 1e-10;
const CF_TOL: f64 = 1e-9;

/// Parametric description of an inter-arrival law.
///
/// The JSON form is internally tagged, e.g.
/// `{"kind":"discrete_atoms","atoms":[[0,0.5],[20,0.5]]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Law {
    Deterministic { t: f64 },
    Exponential { rate: f64 },
    UniformInterval { a: f64, b: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Gamma { shape: f64, scale: f64 },
    /// `(value, probability)` pairs. Atoms at 0 are allowed; simultaneous
    /// events are then counted with multiplicity.
    DiscreteAtoms { atoms: Vec<(f64, f64)> },
}

#[derive(Clone, Debug)]
enum Sampler {
    Constant(f64),
    Exponential(Exp<f64>),
    Uniform { lo: f64, width: f64 },
    LogNormal(LogNormal<f64>),
    Gamma(Gamma<f64>),
    /// Integer shape: `scale · (E_1 + ... + E_k)` with `E_i ~ Exp(1)`.
    Erlang { k: u32, scale: f64 },
    Atoms { values: Vec<f64>, cumulative: Vec<f64> },
}

/// A validated inter-arrival law together with a ready-to-use sampler.
///
/// Immutable after construction and `Sync`, so one spec can drive every
/// worker thread.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "Law", into = "Law")]
pub struct DistributionSpec {
    law: Law,
    mean: f64,
    sampler: Sampler,
}

impl PartialEq for DistributionSpec {
    fn eq(&self, other: &Self) -> bool {
        self.law == other.law
    }
}

impl TryFrom<Law> for DistributionSpec {
    type Error = Error;
    fn try_from(law: Law) -> Result<Self> {
        Self::new(law)
    }
}

impl From<DistributionSpec> for Law {
    fn from(spec: DistributionSpec) -> Self {
        spec.law
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidDistribution(msg.into()))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        invalid(format!("{name} must be finite and positive, got {v}"))
    }
}

/// `E[exp(iω x)]` for `ω = 2πm`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharCoefficient {
    pub m: i64,
    pub value: Complex64,
    pub modulus: f64,
}

impl CharCoefficient {
    pub fn new(m: i64, value: Complex64) -> Self {
        Self { m, value, modulus: value.norm() }
    }
}

impl DistributionSpec {
    pub fn new(law: Law) -> Result<Self> {
        let (mean, sampler) = match &law {
            Law::Deterministic { t } => {
                positive("t", *t)?;
                (*t, Sampler::Constant(*t))
            }
            Law::Exponential { rate } => {
                positive("rate", *rate)?;
                let exp = Exp::new(*rate).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
                (1.0 / rate, Sampler::Exponential(exp))
            }
            Law::UniformInterval { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a >= 0.0 && a < b) {
                    return invalid(format!("uniform interval needs 0 <= a < b, got a={a}, b={b}"));
                }
                (0.5 * (a + b), Sampler::Uniform { lo: *a, width: b - a })
            }
            Law::LogNormal { mu, sigma } => {
                if !mu.is_finite() {
                    return invalid(format!("mu must be finite, got {mu}"));
                }
                positive("sigma", *sigma)?;
                let mean = (mu + 0.5 * sigma * sigma).exp();
                if !mean.is_finite() {
                    return invalid("log-normal mean overflows");
                }
                let ln = LogNormal::new(*mu, *sigma).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
                (mean, Sampler::LogNormal(ln))
            }
            Law::Gamma { shape, scale } => {
                positive("shape", *shape)?;
                positive("scale", *scale)?;
                let g = Gamma::new(*shape, *scale).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
                let sampler = if *shape == shape.round() && *shape <= ERLANG_MAX_SHAPE {
                    Sampler::Erlang { k: *shape as u32, scale: *scale }
                } else {
                    Sampler::Gamma(g)
                };
                (shape * scale, sampler)
            }
            Law::DiscreteAtoms { atoms } => {
                if atoms.is_empty() {
                    return invalid("discrete law needs at least one atom");
                }
                let mut prev = f64::NEG_INFINITY;
                let mut total = 0.0;
                let mut mean = 0.0;
                let mut values = Vec::with_capacity(atoms.len());
                let mut cumulative = Vec::with_capacity(atoms.len());
                for &(v, p) in atoms {
                    if !(v.is_finite() && v >= 0.0) {
                        return invalid(format!("atom value must be finite and nonnegative, got {v}"));
                    }
                    if v <= prev {
                        return invalid("atom values must be strictly increasing");
                    }
                    if !(p > 0.0 && p <= 1.0) {
                        return invalid(format!("atom probability must lie in (0, 1], got {p}"));
                    }
                    prev = v;
                    total += p;
                    mean += v * p;
                    values.push(v);
                    cumulative.push(total);
                }
                if (total - 1.0).abs() > ATOM_SUM_TOL {
                    return invalid(format!("atom probabilities sum to {total}, expected 1"));
                }
                if mean <= 0.0 {
                    return invalid("mean must be strictly positive");
                }
                (mean, Sampler::Atoms { values, cumulative })
            }
        };
        Ok(Self { law, mean, sampler })
    }

    pub fn deterministic(t: f64) -> Result<Self> {
        Self::new(Law::Deterministic { t })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(Law::Exponential { rate })
    }

    pub fn uniform_interval(a: f64, b: f64) -> Result<Self> {
        Self::new(Law::UniformInterval { a, b })
    }

    pub fn log_normal(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(Law::LogNormal { mu, sigma })
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        Self::new(Law::Gamma { shape, scale })
    }

    pub fn discrete_atoms(atoms: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(Law::DiscreteAtoms { atoms })
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    /// Short label used in CSV output.
    pub fn label(&self) -> String {
        serde_json::to_string(&self.law).expect("law serializes")
    }

    #[inline]
    pub fn sample(&self, stream: &mut RandomStream) -> f64 {
        match &self.sampler {
            Sampler::Constant(t) => *t,
            Sampler::Exponential(d) => d.sample(stream),
            Sampler::Uniform { lo, width } => lo + width * stream.uniform(),
            Sampler::LogNormal(d) => d.sample(stream),
            Sampler::Gamma(d) => d.sample(stream),
            Sampler::Erlang { k, scale } => {
                let mut sum = 0.0;
                for _ in 0..*k {
                    let e: f64 = rand_distr::Exp1.sample(stream);
                    sum += e;
                }
                scale * sum
            }
            Sampler::Atoms { values, cumulative } => {
                let u = stream.uniform();
                let last = values.len() - 1;
                let idx = cumulative[..last].iter().position(|&c| u < c).unwrap_or(last);
                values[idx]
            }
        }
    }

    /// Exact mean inter-arrival time `t`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Point masses `(value, probability)`, for the atom-valued laws.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match &self.law {
            Law::Deterministic { t } => Some(vec![(*t, 1.0)]),
            Law::DiscreteAtoms { atoms } => Some(atoms.clone()),
            _ => None,
        }
    }

    pub fn is_continuous(&self) -> bool {
        self.atoms().is_none()
    }

    /// `P(T > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        match &self.law {
            Law::Deterministic { t } => {
                if x < *t {
                    1.0
                } else {
                    0.0
                }
            }
            Law::Exponential { rate } => (-rate * x).exp(),
            Law::UniformInterval { a, b } => ((b - x) / (b - a)).clamp(0.0, 1.0),
            Law::LogNormal { mu, sigma } => {
                if x == 0.0 {
                    1.0
                } else {
                    0.5 * erfc((x.ln() - mu) / (sigma * SQRT_2))
                }
            }
            Law::Gamma { shape, scale } => {
                if x == 0.0 {
                    1.0
                } else {
                    gamma_ur(*shape, x / scale)
                }
            }
            Law::DiscreteAtoms { atoms } => atoms.iter().filter(|(v, _)| *v > x).map(|(_, p)| p).sum::<f64>().min(1.0),
        }
    }

    /// Lebesgue density, for the continuous laws.
    pub fn density(&self, x: f64) -> Option<f64> {
        let d = match &self.law {
            Law::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            Law::UniformInterval { a, b } => {
                if x >= *a && x <= *b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Law::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let z = (x.ln() - mu) / sigma;
                    (-0.5 * z * z).exp() / (x * sigma * (2.0 * PI).sqrt())
                }
            }
            Law::Gamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let y = x / scale;
                    ((shape - 1.0) * y.ln() - y - ln_gamma(*shape)).exp() / scale
                }
            }
            Law::Deterministic { .. } | Law::DiscreteAtoms { .. } => return None,
        };
        Some(d)
    }

    /// Smallest `x` with `P(T > x) <= tail`, for continuous laws; the largest
    /// atom otherwise.
    pub fn upper_quantile(&self, tail: f64) -> f64 {
        match &self.law {
            Law::Deterministic { t } => *t,
            Law::DiscreteAtoms { atoms } => atoms.last().map(|a| a.0).unwrap_or(0.0),
            Law::UniformInterval { a, b } => b - tail * (b - a),
            Law::Exponential { rate } => -tail.ln() / rate,
            _ => {
                let mut hi = self.mean.max(1e-300);
                while self.survival(hi) > tail {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.survival(mid) > tail {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
        }
    }

    /// `γ_m = E[exp(2πi m T)]`.
    ///
    /// Closed form for the deterministic, exponential, uniform and atom laws;
    /// adaptive quadrature on `[0, Q]` with `Q` the `1 − 1e-10` quantile for
    /// the log-normal and gamma laws.
    pub fn char_coefficient(&self, m: i64) -> Result<CharCoefficient> {
        if m == 0 {
            return Err(Error::InvalidArgument("char_coefficient needs m != 0".into()));
        }
        let w = 2.0 * PI * m as f64;
        let value = match &self.law {
            Law::Deterministic { t } => Complex64::from_polar(1.0, w * t),
            Law::Exponential { rate } => Complex64::new(*rate, 0.0) / Complex64::new(*rate, -w),
            Law::UniformInterval { a, b } => {
                let num = Complex64::from_polar(1.0, w * b) - Complex64::from_polar(1.0, w * a);
                num / Complex64::new(0.0, w * (b - a))
            }
            Law::DiscreteAtoms { atoms } => atoms
                .iter()
                .map(|&(v, p)| Complex64::from_polar(p, w * v))
                .fold(Complex64::new(0.0, 0.0), |acc, z| acc + z),
            Law::LogNormal { .. } | Law::Gamma { .. } => {
                let q = self.upper_quantile(CF_TAIL);
                let pieces = ((m.unsigned_abs() as f64 * q * 4.0).ceil() as usize).max(16);
                quadrature::integrate_with(
                    |x| Complex64::from_polar(self.density(x).unwrap_or(0.0), w * x),
                    0.0,
                    q,
                    CF_TOL,
                    pieces,
                )?
            }
        };
        Ok(CharCoefficient::new(m, value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bimodal() -> DistributionSpec {
        DistributionSpec::discrete_atoms(vec![(0.0, 0.5), (20.0, 0.5)]).unwrap()
    }

    #[test]
    fn deterministic_sample_is_constant() {
        let d = DistributionSpec::deterministic(10.0).unwrap();
        let mut s = RandomStream::new(3);
        assert!((0..100).all(|_| d.sample(&mut s) == 10.0));
    }

    #[test]
    fn bimodal_samples_are_zero_or_twenty() {
        let d = bimodal();
        let mut s = RandomStream::new(5);
        let n = 200_000;
        let mut twenties = 0;
        for _ in 0..n {
            let x = d.sample(&mut s);
            assert!(x == 0.0 || x == 20.0);
            if x == 20.0 {
                twenties += 1;
            }
        }
        let p = twenties as f64 / n as f64;
        // 5 standard errors of a fair coin at n = 2e5
        assert!((p - 0.5).abs() < 5.0 * (0.25f64 / n as f64).sqrt(), "p = {p}");
    }

    #[test]
    fn analytic_means() {
        assert_eq!(bimodal().mean(), 10.0);
        assert_eq!(DistributionSpec::deterministic(7.0).unwrap().mean(), 7.0);
        assert_abs_diff_eq!(DistributionSpec::log_normal(0.0, 1.0).unwrap().mean(), 1.648_721_270_700_128, epsilon = 1e-12);
        assert_abs_diff_eq!(DistributionSpec::gamma(2.0, 0.5).unwrap().mean(), 1.0);
        assert_abs_diff_eq!(DistributionSpec::uniform_interval(0.5, 1.5).unwrap().mean(), 1.0);
    }

    #[test]
    fn survival_examples() {
        let e = DistributionSpec::exponential(1.0).unwrap();
        assert_eq!(e.survival(0.0), 1.0);
        let d = DistributionSpec::deterministic(10.0).unwrap();
        assert_eq!(d.survival(9.99), 1.0);
        assert_eq!(d.survival(10.0), 0.0);
        assert_eq!(bimodal().survival(5.0), 0.5);
        // survival at 0 excludes the mass at 0
        assert_eq!(bimodal().survival(0.0), 0.5);
    }

    #[test]
    fn gamma_and_lognormal_survival_match_closed_forms() {
        // Gamma(2, θ): S(x) = (1 + x/θ) e^{-x/θ}
        let g = DistributionSpec::gamma(2.0, 0.5).unwrap();
        for &x in &[0.1, 0.5, 1.0, 3.0] {
            let y: f64 = x / 0.5;
            assert_abs_diff_eq!(g.survival(x), (1.0 + y) * (-y).exp(), epsilon = 1e-12);
        }
        // log-normal median e^mu has survival 1/2
        let l = DistributionSpec::log_normal(-0.125, 0.5).unwrap();
        assert_abs_diff_eq!(l.survival((-0.125f64).exp()), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn validation_rejects_bad_specs() {
        assert!(DistributionSpec::deterministic(0.0).is_err());
        assert!(DistributionSpec::exponential(-1.0).is_err());
        assert!(DistributionSpec::uniform_interval(2.0, 1.0).is_err());
        assert!(DistributionSpec::uniform_interval(-1.0, 1.0).is_err());
        assert!(DistributionSpec::log_normal(0.0, 0.0).is_err());
        assert!(DistributionSpec::gamma(1.0, f64::NAN).is_err());
        assert!(DistributionSpec::discrete_atoms(vec![]).is_err());
        assert!(DistributionSpec::discrete_atoms(vec![(1.0, 0.5), (1.0, 0.5)]).is_err());
        assert!(DistributionSpec::discrete_atoms(vec![(2.0, 0.5), (1.0, 0.5)]).is_err());
        assert!(DistributionSpec::discrete_atoms(vec![(1.0, 0.5), (2.0, 0.4)]).is_err());
        assert!(DistributionSpec::discrete_atoms(vec![(0.0, 1.0)]).is_err());
        assert!(DistributionSpec::discrete_atoms(vec![(-1.0, 0.5), (1.0, 0.5)]).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let d: DistributionSpec = serde_json::from_str(r#"{"kind":"discrete_atoms","atoms":[[0,0.5],[20,0.5]]}"#).unwrap();
        assert_eq!(d, bimodal());
        assert_eq!(serde_json::to_string(&d).unwrap(), r#"{"kind":"discrete_atoms","atoms":[[0.0,0.5],[20.0,0.5]]}"#);
        let bad: std::result::Result<DistributionSpec, _> = serde_json::from_str(r#"{"kind":"deterministic","t":-1}"#);
        assert!(bad.is_err());
        let g: DistributionSpec = serde_json::from_str(r#"{"kind":"log_normal","mu":0,"sigma":1}"#).unwrap();
        assert_eq!(g.law(), &Law::LogNormal { mu: 0.0, sigma: 1.0 });
    }

    #[test]
    fn char_coefficient_examples() {
        let d = DistributionSpec::deterministic(3.7).unwrap();
        for m in [1, 2, -5, 17] {
            assert_abs_diff_eq!(d.char_coefficient(m).unwrap().modulus, 1.0, epsilon = 1e-12);
        }
        let e = DistributionSpec::exponential(1.0).unwrap();
        let g1 = e.char_coefficient(1).unwrap();
        assert_abs_diff_eq!(g1.modulus, 1.0 / (1.0 + 4.0 * PI * PI).sqrt(), epsilon = 1e-12);

        let shifted = DistributionSpec::discrete_atoms(vec![(0.5, 1.0 / 3.0), (1.5, 1.0 / 3.0), (2.5, 1.0 / 3.0)]).unwrap();
        let g = shifted.char_coefficient(1).unwrap();
        assert_abs_diff_eq!(g.value.re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.value.im, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.modulus, 1.0, epsilon = 1e-12);
        assert!(shifted.char_coefficient(0).is_err());
    }

    #[test]
    fn gamma_quadrature_matches_closed_form() {
        // E e^{iωT} = (1 − iωθ)^{−k} for Gamma(k, θ)
        for &(k, theta) in &[(2.0, 0.5), (0.7, 1.3), (5.0, 0.2)] {
            let g = DistributionSpec::gamma(k, theta).unwrap();
            for m in [1i64, 2, 3, -4, 17, 64] {
                let w = 2.0 * PI * m as f64;
                let exact = Complex64::new(1.0, -w * theta).powf(-k);
                let got = g.char_coefficient(m).unwrap().value;
                assert!((got - exact).norm() < 1e-8, "k={k} θ={theta} m={m}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn uniform_char_coefficient_vanishes_on_unit_interval() {
        let u = DistributionSpec::uniform_interval(0.0, 1.0).unwrap();
        for m in 1..10 {
            assert!(u.char_coefficient(m).unwrap().modulus < 1e-12);
        }
    }

    #[test]
    fn integer_shape_gamma_samples_follow_the_law() {
        for (shape, scale) in [(2.0, 0.5), (3.0, 1.5)] {
            let d = DistributionSpec::gamma(shape, scale).unwrap();
            let mut s = RandomStream::new(9);
            let xs: Vec<f64> = (0..20_000).map(|_| d.sample(&mut s)).collect();
            let r = crate::ks::ks_test(&xs, |x| 1.0 - d.survival(x));
            assert!(r.pass, "{shape} {scale} {r:?}");
        }
    }

    #[test]
    fn upper_quantile_hits_tail() {
        for spec in [DistributionSpec::gamma(2.0, 0.5).unwrap(), DistributionSpec::log_normal(-0.125, 0.5).unwrap()] {
            let q = spec.upper_quantile(1e-10);
            assert!(spec.survival(q) <= 1e-10);
            assert!(spec.survival(q * (1.0 - 1e-9)) > 0.9e-10);
        }
    }
}
