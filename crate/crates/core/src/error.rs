use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid window strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature on [{lo}, {hi}] did not converge (error estimate {error_estimate:e})")]
    QuadratureFailure { lo: f64, hi: f64, error_estimate: f64 },

    #[error("event cap of {cap} reached before time {horizon:e}")]
    HorizonOverflow { cap: u64, horizon: f64 },

    #[error("window end {u2} is beyond the last generated event {last_event}")]
    WindowBeyondHorizon { u2: f64, last_event: f64 },

    #[error("no generated event follows time {s}")]
    BeyondLastEvent { s: f64 },

    #[error("{v} is neither in the continuous support nor an atom")]
    UnsupportedPoint { v: f64 },

    #[error("atom values admit no rational structure with denominator <= {cap} at tolerance {tol:e}")]
    SpanUndetectable { cap: u64, tol: f64 },

    /// `m` is an integer; the fractional-part CDF is then exactly `x`, carried in `cdf`.
    #[error("m = {m} is an integer; the fractional part is exactly uniform")]
    IntegerM { m: f64, cdf: f64 },

    /// `c` is an integer; `floor(c - U) = c - 1` identically, carried in `value`.
    #[error("c = {c} is an integer boundary case")]
    IntegerC { c: f64, value: f64 },

    #[error("noise law has mean {mean}, expected 0")]
    NonZeroMeanNoise { mean: f64 },

    #[error("mean inter-arrival time must be positive, got {0}")]
    InvalidMean(f64),
}
