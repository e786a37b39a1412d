//! Rules for placing an observation window on a trajectory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::ObservationWindow;
use crate::stream::RandomStream;

/// Margin used when the mean inter-arrival time is small.
pub const MIN_MARGIN: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowStrategy {
    /// Window starts at the fixed time `m`.
    FixedStart { m: f64 },
    /// Window starts at `theta * U`, `U ~ U(0, 1]`.
    LargeUniform { theta: f64 },
    /// Window starts at `theta * U + c`.
    DeferredUniform { theta: f64, c: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawStrategy {
    FixedStart { m: f64 },
    LargeUniform { theta: f64 },
    DeferredUniform { theta: f64, c: f64 },
}

impl<'de> Deserialize<'de> for WindowStrategy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = match RawStrategy::deserialize(d)? {
            RawStrategy::FixedStart { m } => WindowStrategy::FixedStart { m },
            RawStrategy::LargeUniform { theta } => WindowStrategy::LargeUniform { theta },
            RawStrategy::DeferredUniform { theta, c } => WindowStrategy::DeferredUniform { theta, c },
        };
        s.validate().map_err(serde::de::Error::custom)?;
        Ok(s)
    }
}

/// `max(100, 10 * mean)`.
pub fn default_margin(mean: f64) -> f64 {
    MIN_MARGIN.max(10.0 * mean)
}

impl WindowStrategy {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidStrategy(msg));
        match *self {
            WindowStrategy::FixedStart { m } if !(m.is_finite() && m >= 0.0) => bad(format!("m must be nonnegative, got {m}")),
            WindowStrategy::LargeUniform { theta } | WindowStrategy::DeferredUniform { theta, .. }
                if !(theta.is_finite() && theta > 0.0) =>
            {
                bad(format!("theta must be positive, got {theta}"))
            }
            WindowStrategy::DeferredUniform { c, .. } if !(c.is_finite() && c >= 0.0) => bad(format!("c must be nonnegative, got {c}")),
            _ => Ok(()),
        }
    }

    /// Latest possible window start.
    pub fn latest_start(&self) -> f64 {
        match *self {
            WindowStrategy::FixedStart { m } => m,
            WindowStrategy::LargeUniform { theta } => theta,
            WindowStrategy::DeferredUniform { theta, c } => theta + c,
        }
    }

    pub fn place_window(&self, u: f64, stream: &mut RandomStream) -> Result<ObservationWindow> {
        if !(u.is_finite() && u > 0.0) {
            return Err(Error::InvalidArgument(format!("window length must be positive, got {u}")));
        }
        let u1 = match *self {
            WindowStrategy::FixedStart { m } => m,
            WindowStrategy::LargeUniform { theta } => theta * stream.uniform_open_closed(),
            WindowStrategy::DeferredUniform { theta, c } => theta * stream.uniform_open_closed() + c,
        };
        Ok(ObservationWindow { u1, u2: u1 + u })
    }

    /// Time up to which a trajectory must be generated so that every window
    /// this strategy can place, plus `margin`, is covered.
    pub fn required_horizon(&self, u: f64, margin: f64) -> f64 {
        self.latest_start() + u + margin
    }

    pub fn label(&self) -> String {
        serde_json::to_string(self).expect("strategy serializes")
    }
}
