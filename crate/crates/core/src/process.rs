//! Renewal-process realizations and the counting quantities evaluated on them.
//!
//! Conventions: windows are half-open `(u1, u2]`, and an event exactly at a
//! query time `s` belongs to the past (age 0 there).

use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::stream::RandomStream;

/// Hard cap on the number of events drawn for a single trajectory.
pub const EVENT_CAP: u64 = 1_000_000_000;

/// The interval `(u1, u2]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationWindow {
    pub u1: f64,
    pub u2: f64,
}

impl ObservationWindow {
    pub fn new(u1: f64, u2: f64) -> Result<Self> {
        if !(u1.is_finite() && u2.is_finite() && u1 >= 0.0 && u2 >= u1) {
            return Err(Error::InvalidArgument(format!("window needs 0 <= u1 <= u2, got ({u1}, {u2}]")));
        }
        Ok(Self { u1, u2 })
    }

    pub fn len(&self) -> f64 {
        self.u2 - self.u1
    }

    pub fn is_empty(&self) -> bool {
        self.u2 == self.u1
    }
}

/// Age, residual life and the containing inter-arrival interval at a time `s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgeResidual {
    pub age: f64,
    pub residual: f64,
    pub containing_interval: f64,
    /// `M = N(s)`, the index of the last event at or before `s`.
    pub index_m: u64,
}

/// Incremental walk along one trajectory, drawing inter-arrival times from
/// `stream` on demand. [`generate`] and the streaming estimators share it, so
/// the same stream state always yields the same event times.
pub struct Arrivals<'a> {
    spec: &'a DistributionSpec,
    stream: &'a mut RandomStream,
    time: f64,
    count: u64,
}

impl<'a> Arrivals<'a> {
    pub fn new(spec: &'a DistributionSpec, stream: &'a mut RandomStream) -> Self {
        Self { spec, stream, time: 0.0, count: 0 }
    }

    /// Draws the next inter-arrival time and returns `(T, S)`. `target` is the
    /// time the caller is walking towards and is only used for error reports.
    #[inline]
    pub fn step(&mut self, target: f64) -> Result<(f64, f64)> {
        if self.count >= EVENT_CAP {
            return Err(Error::HorizonOverflow { cap: EVENT_CAP, horizon: target });
        }
        let dt = self.spec.sample(self.stream);
        self.time += dt;
        self.count += 1;
        Ok((dt, self.time))
    }
}

/// One sampled trajectory `S_1 <= S_2 <= ...` and its inter-arrival times.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    inter_arrivals: Vec<f64>,
    event_times: Vec<f64>,
    horizon: f64,
}

/// Draws events until the first one strictly beyond `horizon`.
pub fn generate(spec: &DistributionSpec, horizon: f64, stream: &mut RandomStream) -> Result<Realization> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    let expected = (horizon / spec.mean()).ceil() as usize + 8;
    let mut inter_arrivals = Vec::with_capacity(expected);
    let mut event_times = Vec::with_capacity(expected);
    let mut walk = Arrivals::new(spec, stream);
    loop {
        let (dt, s) = walk.step(horizon)?;
        inter_arrivals.push(dt);
        event_times.push(s);
        if s > horizon {
            break;
        }
    }
    Ok(Realization { inter_arrivals, event_times, horizon })
}

impl Realization {
    /// Builds a realization from explicit inter-arrival times. The partial
    /// sums must pass `horizon`.
    pub fn from_inter_arrivals(inter_arrivals: Vec<f64>, horizon: f64) -> Result<Self> {
        if inter_arrivals.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::InvalidArgument("inter-arrival times must be finite and nonnegative".into()));
        }
        let mut s = 0.0;
        let event_times: Vec<f64> = inter_arrivals
            .iter()
            .map(|t| {
                s += t;
                s
            })
            .collect();
        if !(horizon > 0.0 && s > horizon) {
            return Err(Error::InvalidArgument(format!("events end at {s}, which does not pass horizon {horizon}")));
        }
        Ok(Self { inter_arrivals, event_times, horizon })
    }

    pub fn inter_arrivals(&self) -> &[f64] {
        &self.inter_arrivals
    }

    pub fn event_times(&self) -> &[f64] {
        &self.event_times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.event_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.event_times.is_empty()
    }

    pub fn last_event(&self) -> f64 {
        self.event_times.last().copied().unwrap_or(0.0)
    }

    /// `N(s)`: events in `(0, s]`, for `s` before the last generated event.
    pub fn count_upto(&self, s: f64) -> Result<u64> {
        if s >= self.last_event() {
            return Err(Error::WindowBeyondHorizon { u2: s, last_event: self.last_event() });
        }
        Ok(self.event_times.partition_point(|&e| e <= s) as u64)
    }

    /// Events in `(u1, u2]`, with multiplicity.
    pub fn count_in(&self, w: &ObservationWindow) -> Result<u64> {
        if w.u2 >= self.last_event() {
            return Err(Error::WindowBeyondHorizon { u2: w.u2, last_event: self.last_event() });
        }
        let lo = self.event_times.partition_point(|&e| e <= w.u1);
        let hi = self.event_times.partition_point(|&e| e <= w.u2);
        Ok((hi - lo) as u64)
    }

    pub fn age_and_residual(&self, s: f64) -> Result<AgeResidual> {
        let m = self.event_times.partition_point(|&e| e <= s);
        if m == self.event_times.len() || s < 0.0 {
            return Err(Error::BeyondLastEvent { s });
        }
        let prev = if m == 0 { 0.0 } else { self.event_times[m - 1] };
        Ok(AgeResidual {
            age: s - prev,
            residual: self.event_times[m] - s,
            containing_interval: self.inter_arrivals[m],
            index_m: m as u64,
        })
    }
}

/// Window count on a fresh trajectory without storing it. Draw-for-draw
/// identical to `generate(spec, h, stream)?.count_in(w)` for any `h >= w.u2`.
pub fn count_window(spec: &DistributionSpec, w: &ObservationWindow, stream: &mut RandomStream) -> Result<u64> {
    let mut walk = Arrivals::new(spec, stream);
    let mut n = 0;
    loop {
        let (_, s) = walk.step(w.u2)?;
        if s > w.u2 {
            return Ok(n);
        }
        if s > w.u1 {
            n += 1;
        }
    }
}

/// Age and residual at `s` on a fresh trajectory without storing it.
pub fn age_and_residual_at(spec: &DistributionSpec, s: f64, stream: &mut RandomStream) -> Result<AgeResidual> {
    let mut walk = Arrivals::new(spec, stream);
    let mut prev = 0.0;
    let mut m = 0u64;
    loop {
        let (dt, next) = walk.step(s)?;
        if next > s {
            return Ok(AgeResidual { age: s - prev, residual: next - s, containing_interval: dt, index_m: m });
        }
        prev = next;
        m += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det10() -> DistributionSpec {
        DistributionSpec::deterministic(10.0).unwrap()
    }

    #[test]
    fn deterministic_generation() {
        let r = generate(&det10(), 35.0, &mut RandomStream::new(0)).unwrap();
        assert_eq!(r.event_times(), &[10.0, 20.0, 30.0, 40.0]);
        assert_eq!(r.inter_arrivals(), &[10.0; 4]);
        // horizon on an event: generation continues past it
        let r = generate(&det10(), 40.0, &mut RandomStream::new(0)).unwrap();
        assert_eq!(r.last_event(), 50.0);
    }

    #[test]
    fn bus_stop_counts() {
        let r = generate(&det10(), 100.0, &mut RandomStream::new(0)).unwrap();
        assert_eq!(r.count_in(&ObservationWindow::new(0.0, 30.0).unwrap()).unwrap(), 3);
        assert_eq!(r.count_in(&ObservationWindow::new(0.0, 9.0).unwrap()).unwrap(), 0);
        assert_eq!(r.count_in(&ObservationWindow::new(17.0, 17.0).unwrap()).unwrap(), 0);
        // half-open: event at u1 excluded, at u2 included
        assert_eq!(r.count_in(&ObservationWindow::new(10.0, 20.0).unwrap()).unwrap(), 1);
    }

    #[test]
    fn window_beyond_horizon() {
        let r = generate(&det10(), 35.0, &mut RandomStream::new(0)).unwrap();
        let err = r.count_in(&ObservationWindow::new(0.0, 45.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::WindowBeyondHorizon { .. }));
    }

    #[test]
    fn age_residual_examples() {
        let r = generate(&det10(), 100.0, &mut RandomStream::new(0)).unwrap();
        let a = r.age_and_residual(25.0).unwrap();
        assert_eq!((a.age, a.residual, a.containing_interval, a.index_m), (5.0, 5.0, 10.0, 2));
        let a = r.age_and_residual(30.0).unwrap();
        assert_eq!((a.age, a.residual, a.containing_interval, a.index_m), (0.0, 10.0, 10.0, 3));

        let dup = Realization::from_inter_arrivals(vec![20.0, 0.0, 20.0], 30.0).unwrap();
        let a = dup.age_and_residual(25.0).unwrap();
        assert_eq!((a.age, a.residual, a.containing_interval, a.index_m), (5.0, 15.0, 20.0, 2));
        // on a duplicated event both copies are in the past
        let a = dup.age_and_residual(20.0).unwrap();
        assert_eq!((a.age, a.residual, a.index_m), (0.0, 20.0, 2));
        assert!(matches!(dup.age_and_residual(40.0), Err(Error::BeyondLastEvent { .. })));
    }

    #[test]
    fn invalid_inputs() {
        assert!(ObservationWindow::new(5.0, 4.0).is_err());
        assert!(ObservationWindow::new(-1.0, 4.0).is_err());
        assert!(generate(&det10(), 0.0, &mut RandomStream::new(0)).is_err());
        assert!(Realization::from_inter_arrivals(vec![1.0, 2.0], 5.0).is_err());
        assert!(Realization::from_inter_arrivals(vec![1.0, -2.0, 9.0], 5.0).is_err());
    }

    #[test]
    fn streaming_matches_materialized() {
        let specs = [
            DistributionSpec::exponential(1.0).unwrap(),
            DistributionSpec::discrete_atoms(vec![(0.0, 0.5), (20.0, 0.5)]).unwrap(),
            DistributionSpec::gamma(2.0, 0.5).unwrap(),
        ];
        for spec in &specs {
            for i in 0..50 {
                let w = ObservationWindow::new(37.5, 61.0).unwrap();
                let streamed = count_window(spec, &w, &mut RandomStream::substream(9, i)).unwrap();
                let r = generate(spec, 80.0, &mut RandomStream::substream(9, i)).unwrap();
                assert_eq!(streamed, r.count_in(&w).unwrap());
                let a = age_and_residual_at(spec, 37.5, &mut RandomStream::substream(9, i)).unwrap();
                assert_eq!(a, r.age_and_residual(37.5).unwrap());
            }
        }
    }

    #[test]
    fn zero_gaps_count_with_multiplicity() {
        let r = Realization::from_inter_arrivals(vec![5.0, 0.0, 0.0, 5.0], 12.0 - 3.0).unwrap();
        assert_eq!(r.count_in(&ObservationWindow::new(0.0, 5.0).unwrap()).unwrap(), 3);
        assert_eq!(r.count_upto(5.0).unwrap(), 3);
    }
}
