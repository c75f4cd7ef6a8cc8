//! Quantum-state transfer by frequency down-conversion in a triply resonant
//! nondegenerate optical parametric amplifier.
//!
//! The pipeline is: [`steady_state`] solves the three-mode stationary point,
//! [`fluctuations`] computes the linearized signal output noise, [`metrics`] combines
//! both into the conversion efficiency and quadrature noise figures, and [`sweeps`]
//! drives the pipeline over parameter grids. [`cli`] is the command-line front end.

pub mod cli;
pub mod error;
pub mod fluctuations;
pub mod metrics;
pub mod model;
pub mod steady_state;
pub mod sweeps;

pub use error::{Error, Result};
pub use fluctuations::{CoefficientMode, OutputVariances, Quadrature, QuadratureTransfer};
pub use metrics::{evaluate_point, PointEvaluation, TransferMetrics};
pub use model::{AnalyzingFrequency, CavityParams, DriveParams, ThresholdConvention};
pub use steady_state::{solve_steady_state, OutputAmplitudes, SteadyState};
