//! Closed-form first-passage, resolvent, stationary and escape computations
//! for one-dimensional diffusions with piecewise-constant drift and
//! volatility, plus a Monte Carlo simulator to check them against.
//!
//! ```
//! use threshold_diffusion::{ThresholdModel, passage};
//!
//! let m = ThresholdModel::new(vec![0.0, 1.0], vec![1.0, -0.5, -1.0], vec![1.0, 2.0, 1.0]).unwrap();
//! let v = passage::laplace_hit(&m, 1.0, -0.5, 0.75).unwrap();
//! assert!(v > 0.0 && v < 1.0);
//! ```

pub mod cli;
pub mod error;
pub mod escape;
pub mod fundamentals;
pub mod model;
pub mod montecarlo;
pub mod passage;
pub mod potential;
pub mod reference;
pub mod stationary;
pub mod verify;

pub use error::{Error, Result};
pub use escape::EscapeCoefficients;
pub use fundamentals::{FundamentalSolution, Side, SpectralParams};
pub use model::ThresholdModel;
pub use montecarlo::{EstimateWithError, SimConfig};
pub use potential::PiecewiseExpDensity;
pub use stationary::{LimitSequences, StationaryLaw};
