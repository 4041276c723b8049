//! Numerical laboratory for the special ergodic theorem: finite-time
//! Birkhoff averages, large-deviation rate fits against Lebesgue measure,
//! and the explicit cover that bounds the Hausdorff dimension of the set of
//! points with non-typical time averages.

pub mod cli;
pub mod config;
pub mod deviation;
pub mod dimension;
pub mod error;
pub mod flows;
pub mod observables;
pub mod pipeline;
pub mod regression;
pub mod report;
pub mod rng;
pub mod systems;

pub use error::{Error, Result};
pub use observables::{deviation, modulus_delta, time_average, DeviationParams, Observable, ObservableSpec};
pub use systems::{Point, System, SystemSpec};
