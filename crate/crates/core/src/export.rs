//! CSV and JSON writers. Every CSV starts with a header row; floats use the
//! shortest round-trip representation so output is byte-stable.

use std::io::Write;

use serde::Serialize;

use crate::determinize::TransformOutcome;
use crate::distributions::{CharCoefficient, DistributionSpec};
use crate::error::{Error, Result};
use crate::estimator::CountEstimate;
use crate::floor_lemmas::FloorExpectationResult;
use crate::process::Realization;
use crate::residual::ResidualSampleSet;
use crate::window::WindowStrategy;

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(format!("write failed: {e}"))
}

fn write_rows<W: Write, R: Serialize>(out: W, rows: impl IntoIterator<Item = R>, header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header).map_err(io_err)?;
    for r in rows {
        w.serialize(r).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

#[derive(Serialize)]
struct BlackwellRow<'a> {
    dist: &'a str,
    strategy: &'a str,
    u: f64,
    n_trials: u64,
    mean: f64,
    stderr: f64,
    ci_lo: f64,
    ci_hi: f64,
    target: f64,
}

pub const BLACKWELL_HEADER: [&str; 9] = ["dist", "strategy", "u", "n_trials", "mean", "stderr", "ci_lo", "ci_hi", "target"];

/// One row per `(u, estimate)` cell.
pub fn write_blackwell<W: Write>(
    out: W,
    spec: &DistributionSpec,
    strat: &WindowStrategy,
    cells: &[(f64, CountEstimate)],
) -> Result<()> {
    let dist = spec.label();
    let strategy = strat.label();
    let rows = cells.iter().map(|(u, e)| BlackwellRow {
        dist: &dist,
        strategy: &strategy,
        u: *u,
        n_trials: e.n_trials,
        mean: e.mean,
        stderr: e.stderr,
        ci_lo: e.ci95_lo,
        ci_hi: e.ci95_hi,
        target: e.target,
    });
    write_rows(out, rows, &BLACKWELL_HEADER)
}

pub fn write_realization<W: Write>(out: W, real: &Realization) -> Result<()> {
    let rows = real
        .event_times()
        .iter()
        .zip(real.inter_arrivals())
        .enumerate()
        .map(|(i, (s, t))| (i + 1, *s, *t));
    write_rows(out, rows, &["index", "event_time", "inter_arrival"])
}

pub fn write_residuals<W: Write>(out: W, samples: &ResidualSampleSet) -> Result<()> {
    let rows = (0..samples.len()).map(|i| (i, samples.ages[i], samples.residuals[i], samples.containing_intervals[i]));
    write_rows(out, rows, &["trial", "age", "residual", "containing_interval"])
}

pub fn write_gamma_scan<W: Write>(out: W, scan: &[CharCoefficient]) -> Result<()> {
    let rows = scan.iter().map(|g| (g.m, g.value.re, g.value.im, g.modulus));
    write_rows(out, rows, &["m", "re", "im", "modulus"])
}

pub fn write_transform<W: Write>(out: W, outcomes: &[TransformOutcome]) -> Result<()> {
    let rows = outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| (i, o.original_count, o.modified_count, o.delta, o.age_start, o.age_end, o.m, o.n));
    write_rows(out, rows, &["trial", "orig_count", "mod_count", "delta", "X", "Y", "M", "N"])
}

pub fn write_floor<W: Write>(out: W, results: &[FloorExpectationResult]) -> Result<()> {
    let rows = results.iter().map(|r| (r.c, r.estimate, r.exact, r.stderr, r.n));
    write_rows(out, rows, &["c", "estimate", "exact", "stderr", "n"])
}

/// Arbitrary numeric columns under the given header.
pub fn write_columns<W: Write>(out: W, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    if let Some(bad) = rows.iter().find(|r| r.len() != header.len()) {
        return Err(Error::InvalidArgument(format!("row has {} fields, header has {}", bad.len(), header.len())));
    }
    write_rows(out, rows, header)
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value).map_err(io_err)?;
    out.write_all(b"\n").map_err(io_err)
}
