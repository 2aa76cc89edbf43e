//! k-sample tests for equality of monotone (decreasing) functions.
//!
//! The group functions are estimated by Grenander-type estimators: left-hand
//! slopes of the least concave majorant of a cumulative step process. Two
//! statistics compare the estimates in L1 and are calibrated by a
//! model-specific bootstrap from a boundary-corrected kernel estimate of the
//! common function.
//!
//! Three observation models are supported: decreasing densities, decreasing
//! regression curves on a fixed uniform design, and decreasing hazard rates
//! under random right censoring.

pub mod error;
pub mod limit_theory;
pub mod models;
mod quadrature;
pub mod rng;
pub mod sim;
pub mod smoothing;
pub mod step_core;
pub mod test_engine;

pub use error::{Error, Result};
pub use models::{CensoredSample, DensitySample, GroupWeights, RegressionSample};
pub use step_core::{ConcaveMajorant, CumulativeProcess, Interval, MonotoneStepEstimate};
