//! Equidistribution of partial sums modulo one, lattice (span) detection and
//! the fractional-part law of a large uniform start.
//!
//! `S_n mod 1` tends to `U[0, 1)` exactly when `|γ_m| < 1` for every nonzero
//! `m`, i.e. when no `m T` is supported on a shifted lattice `Z + θ`.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::distributions::{CharCoefficient, DistributionSpec};
use crate::error::{Error, Result};
use crate::ks::{self, KsReport};
use crate::stream::{derive_seed, RandomStream};
use crate::trials::run_trials;

pub const DEFAULT_M_MAX: u32 = 64;
pub const DEFAULT_SPAN_TOL: f64 = 1e-9;
/// Largest denominator tried when reading atom values as rationals.
pub const DENOMINATOR_CAP: u64 = 1_000_000;
/// `|γ_m| >= 1 - WITNESS_TOL` marks `m` as a lattice witness.
pub const WITNESS_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanReport {
    pub is_arithmetic: bool,
    /// Largest `λ` with every atom in `λ Z`.
    pub span: Option<f64>,
    /// `θ` such that `m* T ∈ Z + θ` for the smallest lattice multiplier `m*`.
    pub shift_theta: Option<f64>,
    /// The `m*` above.
    pub lattice_multiplier: Option<u64>,
    pub witnesses: Vec<CharCoefficient>,
    /// `γ_1 .. γ_{m_max}`.
    pub scan: Vec<CharCoefficient>,
    pub tol: f64,
}

impl SpanReport {
    /// Verdict of the bounded scan: every `|γ_m| < 1 − WITNESS_TOL`.
    pub fn scan_says_equidistributed(&self) -> bool {
        self.scan.iter().all(|g| g.modulus < 1.0 - WITNESS_TOL)
    }
}

/// `γ_1 .. γ_{m_max}`.
pub fn gamma_scan(spec: &DistributionSpec, m_max: u32) -> Result<Vec<CharCoefficient>> {
    (1..=m_max as i64).map(|m| spec.char_coefficient(m)).collect()
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// Best continued-fraction convergent `p / q` with `q <= max_den` that is
/// within `tol * max(1, |x|)` of `x`.
fn rational_approx(x: f64, max_den: u64, tol: f64) -> Option<(i128, i128)> {
    let bound = tol * x.abs().max(1.0);
    let (mut h_prev, mut h) = (0i128, 1i128);
    let (mut k_prev, mut k) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if !a.is_finite() || a.abs() > 1e18 {
            return None;
        }
        let ai = a as i128;
        let h_next = ai.checked_mul(h)?.checked_add(h_prev)?;
        let k_next = ai.checked_mul(k)?.checked_add(k_prev)?;
        if k_next > max_den as i128 {
            return None;
        }
        (h_prev, h) = (h, h_next);
        (k_prev, k) = (k, k_next);
        if (h as f64 / k as f64 - x).abs() <= bound {
            return Some((h, k));
        }
        let frac = r - a;
        if frac <= 0.0 {
            return None;
        }
        r = 1.0 / frac;
    }
    None
}

pub fn detect_span(spec: &DistributionSpec, m_max: u32, tol: f64) -> Result<SpanReport> {
    if m_max == 0 {
        return Err(Error::InvalidArgument("m_max must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let scan = gamma_scan(spec, m_max)?;
    let mut witnesses: Vec<CharCoefficient> = scan.iter().copied().filter(|g| g.modulus >= 1.0 - WITNESS_TOL).collect();

    let Some(atoms) = spec.atoms() else {
        return Ok(SpanReport { is_arithmetic: false, span: None, shift_theta: None, lattice_multiplier: None, witnesses, scan, tol });
    };

    let values: Vec<f64> = atoms.iter().map(|a| a.0).collect();
    let (span, theta, m_star) = if values.len() == 1 {
        // a single atom v: support {v} = v Z ∩ {v}, and T ∈ Z + frac(v)
        let v = values[0];
        (v, v.rem_euclid(1.0), 1u64)
    } else {
        let undetectable = || Error::SpanUndetectable { cap: DENOMINATOR_CAP, tol };
        let fracs: Vec<(i128, i128)> =
            values.iter().map(|&v| rational_approx(v, DENOMINATOR_CAP, tol)).collect::<Option<_>>().ok_or_else(undetectable)?;
        let mut lcm: i128 = 1;
        for &(_, q) in &fracs {
            lcm = (lcm / gcd(lcm, q)).checked_mul(q).ok_or_else(undetectable)?;
        }
        let nums: Vec<i128> = fracs.iter().map(|&(p, q)| p.checked_mul(lcm / q)).collect::<Option<_>>().ok_or_else(undetectable)?;
        let g = nums.iter().fold(0i128, |acc, &n| gcd(acc, n));
        let d = nums.iter().fold(0i128, |acc, &n| gcd(acc, n - nums[0]));
        // smallest m with m d / lcm ∈ Z
        let m_star = lcm / gcd(d, lcm);
        let theta_num = (m_star.checked_mul(nums[0]).ok_or_else(undetectable)?).rem_euclid(lcm);
        (g as f64 / lcm as f64, theta_num as f64 / lcm as f64, m_star as u64)
    };

    for &v in &values {
        let k = (v / span).round();
        if (v - k * span).abs() > tol * v.abs().max(1.0) {
            return Err(Error::SpanUndetectable { cap: DENOMINATOR_CAP, tol });
        }
    }
    if m_star > m_max as u64 {
        let g = spec.char_coefficient(m_star as i64)?;
        if g.modulus >= 1.0 - WITNESS_TOL {
            witnesses.push(g);
        }
    }
    Ok(SpanReport {
        is_arithmetic: !witnesses.is_empty(),
        span: Some(span),
        shift_theta: Some(theta),
        lattice_multiplier: Some(m_star),
        witnesses,
        scan,
        tol,
    })
}

/// `(T_1 + ... + T_n) mod 1`, one sample per trial.
pub fn mod1_samples(spec: &DistributionSpec, n: u64, trials: u64, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("need n >= 1 summands".into()));
    }
    run_trials(trials, seed, |_, stream| {
        let mut s = 0.0;
        for _ in 0..n {
            s += spec.sample(stream);
        }
        Ok(frac(s))
    })
}

/// Fractional part in `[0, 1)`.
fn frac(x: f64) -> f64 {
    let f = x.rem_euclid(1.0);
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// KS of `Y mod 1` against `U[0, 1)` for `Y ~ N(mu, sigma^2)`.
pub fn gaussian_mod1_ks(sigma: f64, mu: f64, n: u64, seed: u64) -> Result<KsReport> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let mut stream = RandomStream::new(seed);
    let xs: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut stream);
            frac(mu + sigma * z)
        })
        .collect();
    Ok(ks::ks_test(&xs, ks::unit_uniform_cdf))
}

/// Exact CDF of `Z_m = ⌈m U⌉ − m U` for non-integer `m > 0`.
pub fn zm_exact_cdf(m: f64, x: f64) -> Result<f64> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidArgument(format!("m must be positive, got {m}")));
    }
    if (m - m.round()).abs() <= 1e-12 {
        return Err(Error::IntegerM { m, cdf: x.clamp(0.0, 1.0) });
    }
    let gap = m.ceil() - m;
    let whole = m.floor();
    Ok(if x <= 0.0 {
        0.0
    } else if x <= gap {
        x * whole / m
    } else if x < 1.0 {
        x * whole / m + (x - gap) / m
    } else {
        1.0
    })
}

/// `n` draws of `Z_m`.
pub fn zm_samples(m: f64, n: u64, seed: u64) -> Vec<f64> {
    let mut stream = RandomStream::new(seed);
    (0..n)
        .map(|_| {
            let y = m * stream.uniform_open_closed();
            y.ceil() - y
        })
        .collect()
}

/// KS of simulated `Z_m` against `U[0, 1)` for each `m`.
pub fn zm_limit_check(m_list: &[f64], n: u64, seed: u64) -> Result<Vec<KsReport>> {
    if m_list.is_empty() {
        return Err(Error::InvalidArgument("m_list must be nonempty".into()));
    }
    if m_list.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::InvalidArgument("every m must be positive".into()));
    }
    Ok(m_list
        .iter()
        .enumerate()
        .map(|(i, &m)| ks::ks_test(&zm_samples(m, n, derive_seed(seed, i as u64)), ks::unit_uniform_cdf))
        .collect())
}
