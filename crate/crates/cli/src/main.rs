use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use renewal_core::determinize::{summarize, transform_trials};
use renewal_core::estimator::interval_counts;
use renewal_core::export;
use renewal_core::floor_lemmas::{floor_expectation_mc, floor_expectation_noisy, FloorExpectationResult, NoiseLaw};
use renewal_core::ks::{self, KsReport};
use renewal_core::residual::{
    atom_frequencies, conditional_uniformity_check, length_biased_ks, length_biased_pdf, residual_ks, residual_pdf,
    sample_residuals, Bucketing, ResidualSampleSet,
};
use renewal_core::stream::{derive_seed, RandomStream};
use renewal_core::uniformity::{
    detect_span, gaussian_mod1_ks, mod1_samples, zm_exact_cdf, zm_samples, DEFAULT_M_MAX, DEFAULT_SPAN_TOL,
};
use renewal_core::{process, CountEstimate, DistributionSpec, Error, WindowStrategy};

mod svg;

use svg::Series;

const DEFAULT_K_SIGMA: f64 = 5.0;
const THREADS_ENV: &str = "RENEWAL_LAB_THREADS";
const ZM_SUP_TOL: f64 = 0.005;

#[derive(Parser)]
#[command(name = "renewal-lab", version, about = "Renewal process experiments with CSV and SVG output")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean count in a window of length u placed by a window strategy
    Blackwell(Plain),
    /// Renewal function mu(s) = E[N(s)] for each s in --u / --u-list
    Mu(Plain),
    /// Residual life at a placed point against the survival/mean density
    Residual(Plain),
    /// Covering-interval length against the length-biased law
    Lengthbias(Plain),
    /// Partial sums mod 1 against U[0, 1)
    Mod1(Mod1Args),
    /// Span detection and characteristic-coefficient scan
    Span(SpanArgs),
    /// Exact CDF of ceil(mU) - mU against simulation
    Zm(ZmArgs),
    /// Gaussian mod 1 against U[0, 1)
    #[command(name = "gauss-mod1")]
    GaussMod1(GaussArgs),
    /// Determinization of sampled trajectories
    Transform(Plain),
    /// E floor(c + eta - U) against c - 1
    Floor(FloorArgs),
    /// Bimodal {0, 20} law, LargeUniform{1000}, u = 1, 50000 trials
    Listing1(Plain),
    /// floor(c - U) averaged over n draws
    Listing2(Listing2Args),
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
struct Common {
    /// Inter-arrival law as JSON, e.g. '{"kind":"exponential","rate":1}'
    #[arg(long, value_parser = parse_json)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dist: Option<Value>,
    /// Window strategy as JSON, e.g. '{"kind":"large_uniform","theta":10000}'
    #[arg(long, value_parser = parse_json)]
    #[serde(skip_serializing_if = "Option::is_none")]
    strategy: Option<Value>,
    /// Window length
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    u: Option<f64>,
    /// Comma-separated window lengths
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    u_list: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n_trials: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Worker threads (falls back to RENEWAL_LAB_THREADS, then all cores)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    threads: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out_dir: Option<PathBuf>,
    /// Also write an SVG plot
    #[arg(long, num_args = 0, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    plot: Option<bool>,
    /// Pass/fail band in standard errors
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    k_sigma: Option<f64>,
    /// JSON file with any of the above keys (flags win)
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
struct Plain {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
struct Mod1Args {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Number of summands
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<u64>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
struct SpanArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    m_max: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
struct ZmArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Comma-separated scale factors
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<Vec<f64>>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
struct GaussArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
struct FloorArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Comma-separated values of c
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    c: Option<Vec<f64>>,
    /// Draws per value of c
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<u64>,
    /// Zero-mean noise law as JSON, e.g. '{"kind":"gaussian","mean":0,"sd":2}'
    #[arg(long, value_parser = parse_json)]
    #[serde(skip_serializing_if = "Option::is_none")]
    noise: Option<Value>,
}

#[derive(Args, Serialize, Deserialize, Default, Clone, Debug)]
#[serde(default)]
struct Listing2Args {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<u64>,
}

fn parse_json(s: &str) -> Result<Value, String> {
    serde_json::from_str(s).map_err(|e| format!("not valid JSON: {e}"))
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::QuadratureFailure { .. }
            | Error::HorizonOverflow { .. }
            | Error::WindowBeyondHorizon { .. }
            | Error::BeyondLastEvent { .. }
            | Error::SpanUndetectable { .. } => Failure::Runtime(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn io(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

/// Overlays the flags given on the command line onto the config file.
fn merge<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&Path>) -> Outcome<T> {
    let Some(path) = config else {
        return Ok(flags.clone_via_json());
    };
    let text = fs::read_to_string(path).map_err(|e| usage(format!("--config {}: {e}", path.display())))?;
    let mut base: Value = serde_json::from_str(&text).map_err(|e| usage(format!("--config: {e}")))?;
    let Value::Object(base_map) = &mut base else {
        return Err(usage("--config: expected a JSON object"));
    };
    if let Value::Object(over) = serde_json::to_value(flags).map_err(|e| usage(e.to_string()))? {
        for (k, v) in over {
            base_map.insert(k, v);
        }
    }
    serde_json::from_value(base).map_err(|e| usage(format!("--config: {e}")))
}

trait CloneViaJson: Sized {
    fn clone_via_json(&self) -> Self;
}

impl<T: Serialize + DeserializeOwned> CloneViaJson for T {
    fn clone_via_json(&self) -> Self {
        serde_json::from_value(serde_json::to_value(self).expect("serializes")).expect("round trips")
    }
}

/// Resolved run settings shared by every subcommand.
struct Run {
    common: Common,
    seed: u64,
    out_dir: PathBuf,
    plot: bool,
    k: f64,
    name: &'static str,
}

impl Run {
    fn new(name: &'static str, common: Common) -> Outcome<Self> {
        let seed = common.seed.ok_or_else(|| usage("--seed is required"))?;
        let k = common.k_sigma.unwrap_or(DEFAULT_K_SIGMA);
        if !(k > 0.0 && k.is_finite()) {
            return Err(usage(format!("--k-sigma must be positive, got {k}")));
        }
        let out_dir = common.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
        let plot = common.plot.unwrap_or(false);
        Ok(Run { common, seed, out_dir, plot, k, name })
    }

    fn dist(&self) -> Outcome<DistributionSpec> {
        let v = self.common.dist.clone().ok_or_else(|| usage("--dist is required"))?;
        serde_json::from_value(v).map_err(|e| usage(format!("--dist: {e}")))
    }

    fn strategy(&self, default: impl FnOnce() -> WindowStrategy) -> Outcome<WindowStrategy> {
        match self.common.strategy.clone() {
            Some(v) => serde_json::from_value(v).map_err(|e| usage(format!("--strategy: {e}"))),
            None => Ok(default()),
        }
    }

    fn us(&self) -> Outcome<Vec<f64>> {
        let us = match (&self.common.u_list, self.common.u) {
            (Some(l), _) => l.clone(),
            (None, Some(u)) => vec![u],
            (None, None) => return Err(usage("--u or --u-list is required")),
        };
        if us.is_empty() || us.iter().any(|u| !(*u > 0.0 && u.is_finite())) {
            return Err(usage("--u / --u-list values must be positive"));
        }
        Ok(us)
    }

    fn u(&self) -> Outcome<f64> {
        if self.common.u_list.is_some() {
            return Err(usage(format!("--u-list is not accepted by {}; use --u", self.name)));
        }
        let u = self.common.u.ok_or_else(|| usage("--u is required"))?;
        if !(u > 0.0 && u.is_finite()) {
            return Err(usage(format!("--u must be positive, got {u}")));
        }
        Ok(u)
    }

    fn n_trials(&self, default: u64) -> Outcome<u64> {
        let n = self.common.n_trials.unwrap_or(default);
        if n < 2 {
            return Err(usage(format!("--n-trials must be at least 2, got {n}")));
        }
        Ok(n)
    }

    fn path(&self, file: &str) -> PathBuf {
        self.out_dir.join(file)
    }

    fn write(&self, file: &str, f: impl FnOnce(&mut Vec<u8>) -> renewal_core::Result<()>) -> Outcome<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        let p = self.path(file);
        fs::write(&p, buf).map_err(|e| io(&p, e))
    }

    fn svg(&self, file: &str, content: impl FnOnce() -> String) -> Outcome<()> {
        if !self.plot {
            return Ok(());
        }
        let p = self.path(file);
        fs::write(&p, content()).map_err(|e| io(&p, e))
    }
}

fn banner(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn large_uniform_default(spec: &DistributionSpec) -> impl FnOnce() -> WindowStrategy {
    let theta = 1e4 * spec.mean();
    move || WindowStrategy::LargeUniform { theta }
}

fn cells(run: &Run, spec: &DistributionSpec, strat: &WindowStrategy, us: &[f64], n: u64) -> Outcome<Vec<(f64, CountEstimate, Vec<u64>)>> {
    us.iter()
        .enumerate()
        .map(|(i, &u)| {
            let counts = interval_counts(spec, strat, u, n, derive_seed(run.seed, i as u64))?;
            Ok((u, CountEstimate::from_counts(&counts, u / spec.mean()), counts))
        })
        .collect()
}

fn count_summary(run: &Run, cells: &[(f64, CountEstimate, Vec<u64>)]) -> String {
    let pass = cells.iter().all(|c| c.1.within(run.k));
    if let [(u, e, _)] = cells {
        format!(
            "{} {}: u {u} mean {} target {} stderr {} (band {} stderr)",
            banner(pass),
            run.name,
            e.mean,
            e.target,
            e.stderr,
            run.k
        )
    } else {
        let worst = cells.iter().map(|c| c.1.sigmas_off()).fold(0.0, f64::max);
        format!("{} {}: {} cells, worst |mean - target| = {worst:.3} stderr (band {})", banner(pass), run.name, cells.len(), run.k)
    }
}

fn count_outputs(run: &Run, spec: &DistributionSpec, strat: &WindowStrategy, cells: &[(f64, CountEstimate, Vec<u64>)]) -> Outcome<()> {
    let rows: Vec<(f64, CountEstimate)> = cells.iter().map(|c| (c.0, c.1)).collect();
    run.write(&format!("{}.csv", run.name), |b| export::write_blackwell(b, spec, strat, &rows))?;
    run.svg(&format!("{}.svg", run.name), || {
        if let [(u, _, counts)] = cells {
            let xs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
            let bins = (counts.iter().max().copied().unwrap_or(0) + 1).min(200) as usize;
            svg::histogram(&format!("window counts, u = {u}"), "count", &xs, bins, None)
        } else {
            let mean = Series { label: "mean".into(), points: cells.iter().map(|c| (c.0, c.1.mean)).collect() };
            let target = Series { label: "u / t".into(), points: cells.iter().map(|c| (c.0, c.1.target)).collect() };
            svg::line_chart("mean window count", "u", "count", &[mean, target])
        }
    })
}

fn cmd_blackwell(run: &Run) -> Outcome<String> {
    let spec = run.dist()?;
    let strat = run.strategy(large_uniform_default(&spec))?;
    let us = run.us()?;
    let cs = cells(run, &spec, &strat, &us, run.n_trials(10_000)?)?;
    count_outputs(run, &spec, &strat, &cs)?;
    Ok(count_summary(run, &cs))
}

fn cmd_mu(run: &Run) -> Outcome<String> {
    let spec = run.dist()?;
    if run.common.strategy.is_some() {
        return Err(usage("--strategy is not accepted by mu (windows start at 0)"));
    }
    let strat = WindowStrategy::FixedStart { m: 0.0 };
    let ss = run.us()?;
    let cs = cells(run, &spec, &strat, &ss, run.n_trials(10_000)?)?;
    count_outputs(run, &spec, &strat, &cs)?;
    let horizon = ss.iter().copied().fold(0.0, f64::max);
    let real = process::generate(&spec, horizon, &mut RandomStream::substream(run.seed, u64::MAX))?;
    run.write("realization.csv", |b| export::write_realization(b, &real))?;
    Ok(count_summary(run, &cs))
}

fn residual_samples(run: &Run, spec: &DistributionSpec) -> Outcome<ResidualSampleSet> {
    let strat = run.strategy(large_uniform_default(spec))?;
    Ok(sample_residuals(spec, &strat, run.n_trials(100_000)?, run.seed)?)
}

fn density_series(label: &str, lo: f64, hi: f64, f: impl Fn(f64) -> Option<f64>) -> Series {
    let points = (0..=200)
        .filter_map(|i| {
            let x = lo + (hi - lo) * i as f64 / 200.0;
            f(x).map(|y| (x, y))
        })
        .collect();
    Series { label: label.into(), points }
}

fn cmd_residual(run: &Run) -> Outcome<String> {
    let spec = run.dist()?;
    let s = residual_samples(run, &spec)?;
    let r = residual_ks(&spec, &s.residuals)?;
    let a = residual_ks(&spec, &s.ages)?;
    let buckets = conditional_uniformity_check(&s, Bucketing::default_for(&spec))?;
    let tested: Vec<&KsReport> = buckets.iter().filter_map(|b| b.ks.as_ref()).collect();
    let buckets_pass = tested.iter().all(|k| k.pass);
    run.write("residuals.csv", |b| export::write_residuals(b, &s))?;
    run.write("residual_ks.json", |b| {
        export::write_json(b, &serde_json::json!({ "residual": r, "age": a, "conditional_uniformity": buckets }))
    })?;
    run.svg("residual.svg", || {
        let hi = s.residuals.iter().copied().fold(0.0, f64::max);
        let curve = density_series("survival / mean", 0.0, hi, |x| Some(residual_pdf(&spec, x)));
        svg::histogram("residual life", "residual", &s.residuals, 50, Some(&curve))
    })?;
    let pass = r.pass && a.pass && buckets_pass;
    Ok(format!(
        "{} residual: KS {:.5} (age {:.5}) threshold {:.5}, {}/{} uniformity buckets pass",
        banner(pass),
        r.statistic,
        a.statistic,
        r.threshold,
        tested.iter().filter(|k| k.pass).count(),
        tested.len()
    ))
}

fn cmd_lengthbias(run: &Run) -> Outcome<String> {
    let spec = run.dist()?;
    let s = residual_samples(run, &spec)?;
    run.write("residuals.csv", |b| export::write_residuals(b, &s))?;
    if let Some(freqs) = atom_frequencies(&spec, &s.containing_intervals) {
        let band = run.k.min(4.0);
        let pass = freqs.iter().all(|f| (f.observed - f.predicted).abs() <= band * f.stderr);
        run.write("lengthbias.json", |b| export::write_json(b, &freqs))?;
        run.svg("lengthbias.svg", || {
            let obs = Series { label: "observed".into(), points: freqs.iter().map(|f| (f.value, f.observed)).collect() };
            let pred = Series { label: "v p / t".into(), points: freqs.iter().map(|f| (f.value, f.predicted)).collect() };
            svg::line_chart("covering-interval frequencies", "interval length", "frequency", &[obs, pred])
        })?;
        let worst = freqs
            .iter()
            .map(|f| if f.stderr > 0.0 { (f.observed - f.predicted).abs() / f.stderr } else { 0.0 })
            .fold(0.0, f64::max);
        return Ok(format!("{} lengthbias: {} atoms, worst deviation {worst:.3} stderr (band {band})", banner(pass), freqs.len()));
    }
    let r = length_biased_ks(&spec, &s.containing_intervals)?;
    run.write("lengthbias.json", |b| export::write_json(b, &r))?;
    run.svg("lengthbias.svg", || {
        let (lo, hi) = s.containing_intervals.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        let curve = density_series("v f(v) / t", lo, hi, |v| length_biased_pdf(&spec, v).ok());
        svg::histogram("covering interval", "interval length", &s.containing_intervals, 50, Some(&curve))
    })?;
    Ok(format!("{} lengthbias: KS {:.5} threshold {:.5}", banner(r.pass), r.statistic, r.threshold))
}

fn values_csv(run: &Run, file: &str, xs: &[f64]) -> Outcome<()> {
    let rows: Vec<Vec<f64>> = xs.iter().enumerate().map(|(i, &x)| vec![i as f64, x]).collect();
    run.write(file, |b| export::write_columns(b, &["trial", "value"], &rows))
}

fn uniform_reference() -> Series {
    Series { label: "U[0, 1)".into(), points: vec![(0.0, 1.0), (1.0, 1.0)] }
}

fn cmd_mod1(run: &Run, n: Option<u64>) -> Outcome<String> {
    let spec = run.dist()?;
    let n = n.unwrap_or(200);
    let xs = mod1_samples(&spec, n, run.n_trials(10_000)?, run.seed)?;
    let r = ks::ks_test(&xs, ks::unit_uniform_cdf);
    values_csv(run, "mod1.csv", &xs)?;
    run.write("mod1_ks.json", |b| export::write_json(b, &r))?;
    run.svg("mod1.svg", || svg::histogram(&format!("S_{n} mod 1"), "fractional part", &xs, 50, Some(&uniform_reference())))?;
    Ok(format!("{} mod1: n {n} KS {:.5} threshold {:.5}", banner(r.pass), r.statistic, r.threshold))
}

fn cmd_span(run: &Run, m_max: Option<u32>, tol: Option<f64>) -> Outcome<String> {
    let spec = run.dist()?;
    let m_max = m_max.unwrap_or(DEFAULT_M_MAX);
    let report = detect_span(&spec, m_max, tol.unwrap_or(DEFAULT_SPAN_TOL))?;
    let xs = mod1_samples(&spec, 200, run.n_trials(10_000)?, run.seed)?;
    let r = ks::ks_test(&xs, ks::unit_uniform_cdf);
    let agree = report.scan_says_equidistributed() == r.pass;
    run.write("span.json", |b| export::write_json(b, &report))?;
    run.write("gamma_scan.csv", |b| export::write_gamma_scan(b, &report.scan))?;
    run.svg("span.svg", || {
        let pts = Series { label: "|gamma_m|".into(), points: report.scan.iter().map(|g| (g.m as f64, g.modulus)).collect() };
        svg::line_chart("characteristic coefficients", "m", "modulus", &[pts])
    })?;
    let span = report.span.map_or("none".to_string(), |s| s.to_string());
    let theta = report.shift_theta.map_or("none".to_string(), |s| s.to_string());
    Ok(format!(
        "{} span: arithmetic {} span {span} theta {theta}, scan (m <= {m_max}) equidistributed {} vs mod-1 KS {}",
        banner(agree),
        report.is_arithmetic,
        report.scan_says_equidistributed(),
        r.pass
    ))
}

fn zm_cdf(m: f64, x: f64) -> f64 {
    match zm_exact_cdf(m, x) {
        Ok(v) | Err(Error::IntegerM { cdf: v, .. }) => v,
        Err(_) => f64::NAN,
    }
}

fn cmd_zm(run: &Run, ms: Option<Vec<f64>>) -> Outcome<String> {
    let ms = ms.unwrap_or_else(|| vec![1.5, 2.5, 7.25]);
    if ms.is_empty() || ms.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
        return Err(usage("--m values must be positive"));
    }
    let n = run.n_trials(1_000_000)?;
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut sups = Vec::new();
    let mut series = Vec::new();
    for (i, &m) in ms.iter().enumerate() {
        let mut xs = zm_samples(m, n, derive_seed(run.seed, i as u64));
        xs.sort_by(f64::total_cmp);
        let sup = ks::ks_statistic_sorted(&xs, |x| zm_cdf(m, x));
        let limit = ks::ks_test(&xs, ks::unit_uniform_cdf);
        sups.push(sup);
        reports.push(serde_json::json!({ "m": m, "sup_exact": sup, "vs_uniform": limit }));
        let mut pts = Vec::new();
        for &x in &grid {
            let emp = xs.partition_point(|&z| z <= x) as f64 / xs.len() as f64;
            let exact = zm_cdf(m, x);
            rows.push(vec![m, x, exact, emp]);
            pts.push((x, exact));
        }
        series.push(Series { label: format!("m = {m}"), points: pts });
    }
    run.write("zm.csv", |b| export::write_columns(b, &["m", "x", "exact", "empirical"], &rows))?;
    run.write("zm_ks.json", |b| export::write_json(b, &reports))?;
    run.svg("zm.svg", || svg::line_chart("exact CDF of Z_m", "x", "F(x)", &series))?;
    let worst = sups.iter().copied().fold(0.0, f64::max);
    Ok(format!("{} zm: {} values of m, worst sup |F_n - F| {worst:.5} (tolerance {ZM_SUP_TOL})", banner(worst <= ZM_SUP_TOL), ms.len()))
}

fn cmd_gauss(run: &Run, sigma: Option<f64>, mu: Option<f64>) -> Outcome<String> {
    let sigma = sigma.ok_or_else(|| usage("--sigma is required"))?;
    let mu = mu.unwrap_or(0.0);
    let n = run.n_trials(10_000)?;
    let r = gaussian_mod1_ks(sigma, mu, n, run.seed)?;
    run.write("gauss_mod1_ks.json", |b| export::write_json(b, &r))?;
    run.write("gauss_mod1.csv", |b| {
        export::write_columns(b, &["sigma", "mu", "n", "statistic", "threshold"], &[vec![sigma, mu, n as f64, r.statistic, r.threshold]])
    })?;
    Ok(format!("{} gauss-mod1: sigma {sigma} KS {:.5} threshold {:.5}", banner(r.pass), r.statistic, r.threshold))
}

fn cmd_transform(run: &Run) -> Outcome<String> {
    let spec = run.dist()?;
    let strat = run.strategy(large_uniform_default(&spec))?;
    let u = run.u()?;
    let outcomes = transform_trials(&spec, &strat, u, run.n_trials(10_000)?, run.seed)?;
    let check = summarize(&outcomes, u, spec.mean())?;
    run.write("transform.csv", |b| export::write_transform(b, &outcomes))?;
    run.write("transform_summary.json", |b| export::write_json(b, &check))?;
    run.svg("transform.svg", || {
        let xs: Vec<f64> = outcomes.iter().map(|o| o.delta as f64).collect();
        svg::histogram("modified minus original count", "delta", &xs, 20, None)
    })?;
    let pass = check.identity_violations == 0
        && check.mean_delta.abs() <= run.k * check.delta_stderr
        && check.original.within(run.k)
        && check.modified.within(run.k);
    Ok(format!(
        "{} transform: original {} modified {} target {} mean delta {} stderr {} identity violations {}",
        banner(pass),
        check.original.mean,
        check.modified.mean,
        check.original.target,
        check.mean_delta,
        check.delta_stderr,
        check.identity_violations
    ))
}

fn floor_outputs(run: &Run, rows: &[FloorExpectationResult]) -> Outcome<String> {
    run.write(&format!("{}.csv", run.name), |b| export::write_floor(b, rows))?;
    run.svg(&format!("{}.svg", run.name), || {
        let est = Series { label: "estimate".into(), points: rows.iter().map(|r| (r.c, r.estimate)).collect() };
        let exact = Series { label: "c - 1".into(), points: rows.iter().map(|r| (r.c, r.exact)).collect() };
        svg::line_chart("floor expectation", "c", "E floor", &[est, exact])
    })?;
    let pass = rows.iter().all(|r| r.within(run.k));
    if let [r] = rows {
        Ok(format!("{} {}: c {} estimate {} exact {} stderr {}", banner(pass), run.name, r.c, r.estimate, r.exact, r.stderr))
    } else {
        Ok(format!("{} {}: {} values of c within {} stderr of c - 1", banner(pass), run.name, rows.len(), run.k))
    }
}

fn cmd_floor(run: &Run, cs: Option<Vec<f64>>, n: Option<u64>, noise: Option<Value>) -> Outcome<String> {
    let cs = cs.unwrap_or_else(|| vec![3.2]);
    if cs.is_empty() {
        return Err(usage("--c needs at least one value"));
    }
    let n = n.or(run.common.n_trials).unwrap_or(100_000);
    let noise: Option<NoiseLaw> = noise.map(serde_json::from_value).transpose().map_err(|e| usage(format!("--noise: {e}")))?;
    let rows = cs
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let seed = derive_seed(run.seed, i as u64);
            match &noise {
                Some(law) => floor_expectation_noisy(c, law, n, seed),
                None => floor_expectation_mc(c, n, seed),
            }
        })
        .collect::<renewal_core::Result<Vec<_>>>()?;
    floor_outputs(run, &rows)
}

fn cmd_listing1(run: &Run) -> Outcome<String> {
    let c = &run.common;
    if c.dist.is_some() || c.strategy.is_some() || c.u.is_some() || c.u_list.is_some() || c.n_trials.is_some() {
        return Err(usage("listing1 has fixed parameters; only --seed, --threads, --out-dir, --plot, --k-sigma apply"));
    }
    let spec = DistributionSpec::discrete_atoms(vec![(0.0, 0.5), (20.0, 0.5)])?;
    let strat = WindowStrategy::LargeUniform { theta: 1000.0 };
    let cs = cells(run, &spec, &strat, &[1.0], 50_000)?;
    count_outputs(run, &spec, &strat, &cs)?;
    Ok(count_summary(run, &cs))
}

fn cmd_listing2(run: &Run, c: Option<f64>, n: Option<u64>) -> Outcome<String> {
    let c = c.unwrap_or(3.2);
    let n = n.or(run.common.n_trials).unwrap_or(10_000);
    let r = floor_expectation_mc(c, n, run.seed)?;
    floor_outputs(run, &[r])
}

fn threads(common: &Common) -> Outcome<usize> {
    let n = match common.threads {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?,
            Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        },
    };
    if n == 0 {
        return Err(usage("--threads must be at least 1"));
    }
    Ok(n)
}

fn resolve<T: Serialize + DeserializeOwned>(args: &T, common: &Common) -> Outcome<T> {
    merge(args, common.config.as_deref())
}

fn dispatch(cmd: Command) -> Outcome<String> {
    macro_rules! prepare {
        ($args:expr, $name:literal) => {{
            let merged = resolve(&$args, &$args.common)?;
            let run = Run::new($name, merged.common.clone())?;
            (merged, run)
        }};
    }
    let (common, job): (Common, Box<dyn FnOnce() -> Outcome<String> + Send>) = match cmd {
        Command::Blackwell(a) => {
            let (m, run) = prepare!(a, "blackwell");
            (m.common, Box::new(move || cmd_blackwell(&run)))
        }
        Command::Mu(a) => {
            let (m, run) = prepare!(a, "mu");
            (m.common, Box::new(move || cmd_mu(&run)))
        }
        Command::Residual(a) => {
            let (m, run) = prepare!(a, "residual");
            (m.common, Box::new(move || cmd_residual(&run)))
        }
        Command::Lengthbias(a) => {
            let (m, run) = prepare!(a, "lengthbias");
            (m.common, Box::new(move || cmd_lengthbias(&run)))
        }
        Command::Mod1(a) => {
            let (m, run) = prepare!(a, "mod1");
            (m.common, Box::new(move || cmd_mod1(&run, m.n)))
        }
        Command::Span(a) => {
            let (m, run) = prepare!(a, "span");
            (m.common, Box::new(move || cmd_span(&run, m.m_max, m.tol)))
        }
        Command::Zm(a) => {
            let (m, run) = prepare!(a, "zm");
            let ms = m.m.clone();
            (m.common, Box::new(move || cmd_zm(&run, ms)))
        }
        Command::GaussMod1(a) => {
            let (m, run) = prepare!(a, "gauss-mod1");
            (m.common, Box::new(move || cmd_gauss(&run, m.sigma, m.mu)))
        }
        Command::Transform(a) => {
            let (m, run) = prepare!(a, "transform");
            (m.common, Box::new(move || cmd_transform(&run)))
        }
        Command::Floor(a) => {
            let (m, run) = prepare!(a, "floor");
            let (c, n, noise) = (m.c.clone(), m.n, m.noise.clone());
            (m.common, Box::new(move || cmd_floor(&run, c, n, noise)))
        }
        Command::Listing1(a) => {
            let (m, run) = prepare!(a, "listing1");
            (m.common, Box::new(move || cmd_listing1(&run)))
        }
        Command::Listing2(a) => {
            let (m, run) = prepare!(a, "listing2");
            (m.common, Box::new(move || cmd_listing2(&run, m.c, m.n)))
        }
    };
    let n = threads(&common)?;
    let dir = common.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Failure::Runtime(format!("thread pool: {e}")))?;
    pool.install(job)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("renewal-lab: error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("renewal-lab: runtime error: {msg}");
            ExitCode::from(3)
        }
    }
}
