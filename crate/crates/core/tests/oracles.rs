//! Monte Carlo and quadrature oracles for the analytic descriptors.

use num_complex::Complex64;
use std::f64::consts::PI;

use renewal_core::determinize::{determinize, transform_expectation_check, transform_trials};
use renewal_core::estimator::{estimate_interval_count, estimate_mu};
use renewal_core::floor_lemmas::{floor_expectation_noisy, NoiseLaw};
use renewal_core::ks::{ks_test, KsReport};
use renewal_core::process::{generate, ObservationWindow};
use renewal_core::quadrature::integrate_with;
use renewal_core::residual::{residual_cdf, residual_ks, residual_pdf, sample_residuals};
use renewal_core::trials::moments;
use renewal_core::uniformity::gaussian_mod1_ks;
use renewal_core::{DistributionSpec, RandomStream, WindowStrategy};

fn fixtures() -> Vec<DistributionSpec> {
    vec![
        DistributionSpec::deterministic(3.7).unwrap(),
        DistributionSpec::exponential(1.0).unwrap(),
        DistributionSpec::uniform_interval(0.5, 1.5).unwrap(),
        DistributionSpec::log_normal(-0.125, 0.5).unwrap(),
        DistributionSpec::gamma(2.0, 0.5).unwrap(),
        DistributionSpec::gamma(0.7, 2.0).unwrap(),
        DistributionSpec::discrete_atoms(vec![(0.0, 0.5), (20.0, 0.5)]).unwrap(),
        DistributionSpec::discrete_atoms(vec![(0.5, 0.25), (1.25, 0.5), (3.0, 0.25)]).unwrap(),
    ]
}

fn continuous() -> Vec<DistributionSpec> {
    vec![
        DistributionSpec::exponential(1.0).unwrap(),
        DistributionSpec::uniform_interval(0.5, 1.5).unwrap(),
        DistributionSpec::log_normal(-0.125, 0.5).unwrap(),
        DistributionSpec::gamma(2.0, 0.5).unwrap(),
    ]
}

const N: usize = 1_000_000;

#[test]
fn sample_means_match_analytic_means() {
    for (i, d) in fixtures().iter().enumerate() {
        let mut s = RandomStream::new(100 + i as u64);
        let xs: Vec<f64> = (0..N).map(|_| d.sample(&mut s)).collect();
        let (mean, var) = moments(&xs);
        let se = (var / N as f64).sqrt();
        assert!((mean - d.mean()).abs() <= 4.0 * se + 1e-9 * d.mean(), "{:?}: {mean} vs {}", d.law(), d.mean());
    }
}

#[test]
fn char_coefficients_match_monte_carlo() {
    for (i, d) in fixtures().iter().enumerate() {
        let mut s = RandomStream::new(200 + i as u64);
        let xs: Vec<f64> = (0..N).map(|_| d.sample(&mut s)).collect();
        for m in 1..=3i64 {
            let w = 2.0 * PI * m as f64;
            let re: Vec<f64> = xs.iter().map(|x| (w * x).cos()).collect();
            let im: Vec<f64> = xs.iter().map(|x| (w * x).sin()).collect();
            let (mr, vr) = moments(&re);
            let (mi, vi) = moments(&im);
            let g = d.char_coefficient(m).unwrap().value;
            let tol = |v: f64| 4.0 * (v / N as f64).sqrt() + 1e-9;
            assert!((g.re - mr).abs() <= tol(vr), "{:?} m={m} re {} vs {mr}", d.law(), g.re);
            assert!((g.im - mi).abs() <= tol(vi), "{:?} m={m} im {} vs {mi}", d.law(), g.im);
        }
    }
}

#[test]
fn lognormal_char_coefficient_matches_direct_quadrature() {
    let d = DistributionSpec::log_normal(-0.125, 0.5).unwrap();
    for m in [1i64, 5, 20] {
        let w = 2.0 * PI * m as f64;
        let direct: Complex64 = integrate_with(
            |x| Complex64::new(0.0, w * x).exp() * d.density(x).unwrap(),
            1e-12,
            40.0,
            1e-11,
            4000,
        )
        .unwrap();
        let g = d.char_coefficient(m).unwrap().value;
        assert!((g - direct).norm() < 1e-7, "m={m}: {g} vs {direct}");
    }
}

#[test]
fn poisson_counts_have_mean_rate_times_s() {
    for (rate, s) in [(1.0, 5.0), (2.5, 3.0)] {
        let d = DistributionSpec::exponential(rate).unwrap();
        let e = estimate_mu(&d, s, 100_000, 7).unwrap();
        assert!((e.mean - rate * s).abs() <= 4.0 * e.stderr, "{e:?}");
    }
}

#[test]
fn large_uniform_start_is_uniform() {
    let theta = 1234.5;
    let strat = WindowStrategy::LargeUniform { theta };
    let mut s = RandomStream::new(3);
    let xs: Vec<f64> = (0..100_000).map(|_| strat.place_window(1.0, &mut s).unwrap().u1 / theta).collect();
    assert!(xs.iter().all(|&x| x > 0.0 && x <= 1.0));
    let r = ks_test(&xs, |x| x.clamp(0.0, 1.0));
    assert!(r.pass, "{r:?}");
}

#[test]
fn deterministic_lattice_windows_hit_u_over_t() {
    let d = DistributionSpec::deterministic(10.0).unwrap();
    for u in [10.0, 30.0] {
        let e = estimate_interval_count(&d, &WindowStrategy::LargeUniform { theta: 1000.0 }, u, 10_000, 1).unwrap();
        assert!(e.within(5.0), "{e:?}");
        assert_eq!(e.mean, u / 10.0);
    }
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let d = DistributionSpec::log_normal(-0.125, 0.5).unwrap();
    let strat = WindowStrategy::LargeUniform { theta: 500.0 };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_interval_count(&d, &strat, 2.0, 20_000, 99).unwrap())
    };
    let a = run(1);
    let b = run(8);
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
}

#[test]
fn residual_pdf_integrates_to_one() {
    for d in continuous() {
        let hi = d.upper_quantile(1e-13);
        let total: f64 = integrate_with(|x| residual_pdf(&d, x), 0.0, hi, 1e-10, 64).unwrap();
        assert!((total - 1.0).abs() < 1e-6, "{:?}: {total}", d.law());
        assert!((residual_cdf(&d, hi).unwrap() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn ages_and_residuals_share_a_law() {
    for (i, d) in continuous().iter().enumerate() {
        let strat = WindowStrategy::LargeUniform { theta: 1e4 * d.mean() };
        let samples = sample_residuals(d, &strat, 10_000, 500 + i as u64).unwrap();
        let a: KsReport = residual_ks(d, &samples.ages).unwrap();
        let r = residual_ks(d, &samples.residuals).unwrap();
        assert!(a.pass && r.pass, "{:?}: {a:?} {r:?}", d.law());
    }
}

#[test]
fn gaussian_mod_one() {
    let wide = gaussian_mod1_ks(5.0, 0.3, 10_000, 4).unwrap();
    assert!(wide.pass, "{wide:?}");
    let narrow = gaussian_mod1_ks(0.05, 0.3, 10_000, 4).unwrap();
    assert!(narrow.statistic > 10.0 * narrow.threshold, "{narrow:?}");
}

#[test]
fn transform_bimodal_listing_case() {
    let d = DistributionSpec::discrete_atoms(vec![(0.0, 0.5), (20.0, 0.5)]).unwrap();
    let strat = WindowStrategy::LargeUniform { theta: 2000.0 };
    let c = transform_expectation_check(&d, &strat, 1.0, 100_000, 8).unwrap();
    assert_eq!(c.identity_violations, 0);
    assert!(c.mean_delta.abs() <= 5.0 * c.delta_stderr, "{c:?}");
    assert!(c.original.within(5.0) && c.modified.within(5.0), "{c:?}");
}

#[test]
fn transform_exit_and_entry_balance_for_poisson() {
    let d = DistributionSpec::exponential(1.0).unwrap();
    let c = transform_expectation_check(&d, &WindowStrategy::LargeUniform { theta: 1000.0 }, 3.0, 100_000, 12).unwrap();
    assert!((c.p_exit - c.p_enter).abs() <= 4.0 * c.p_diff_stderr, "{c:?}");
}

#[test]
fn transform_is_identity_on_deterministic_input() {
    let d = DistributionSpec::deterministic(10.0).unwrap();
    let out = transform_trials(&d, &WindowStrategy::LargeUniform { theta: 1000.0 }, 20.0, 5_000, 2).unwrap();
    assert!(out.iter().all(|o| o.delta == 0 && o.original_count == 2));
}

#[test]
fn determinize_matches_generated_realization() {
    let d = DistributionSpec::gamma(0.7, 2.0).unwrap();
    let mut s = RandomStream::new(5);
    let real = generate(&d, 300.0, &mut s).unwrap();
    let w = ObservationWindow::new(120.0, 131.0).unwrap();
    let o = determinize(&real, &w, d.mean()).unwrap();
    assert_eq!(o.original_count, real.count_in(&w).unwrap());
    assert!(o.identity_holds());
}

#[test]
fn floor_noise_laws_agree() {
    let laws = [
        NoiseLaw::Atoms { atoms: vec![(-0.5, 0.5), (0.5, 0.5)] },
        NoiseLaw::Gaussian { mean: 0.0, sd: 2.0 },
        NoiseLaw::Uniform { a: -3.0, b: 3.0 },
        NoiseLaw::Centered { spec: DistributionSpec::exponential(0.5).unwrap() },
    ];
    let rs: Vec<_> = laws.iter().enumerate().map(|(i, l)| floor_expectation_noisy(3.2, l, 100_000, 40 + i as u64).unwrap()).collect();
    for a in &rs {
        assert!(a.within(5.0), "{a:?}");
        for b in &rs {
            let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
            assert!((a.estimate - b.estimate).abs() <= 5.0 * se);
        }
    }
}
