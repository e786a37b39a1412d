//! Simulation and analytic checks for renewal processes: interval counts,
//! residual life and length bias, equidistribution mod 1, the
//! determinization transform and floor-expectation identities.

pub mod determinize;
pub mod distributions;
pub mod error;
pub mod estimator;
pub mod export;
pub mod floor_lemmas;
pub mod ks;
pub mod process;
pub mod quadrature;
pub mod residual;
pub mod stream;
pub mod trials;
pub mod uniformity;
pub mod window;

pub use distributions::{CharCoefficient, DistributionSpec, Law};
pub use error::{Error, Result};
pub use estimator::CountEstimate;
pub use process::{ObservationWindow, Realization};
pub use stream::RandomStream;
pub use window::WindowStrategy;
