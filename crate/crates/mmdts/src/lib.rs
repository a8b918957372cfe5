//! Simulation-based minimum-MMD estimation for stationary time series.
//!
//! The crate estimates parameters of a time-series model by minimizing the
//! maximum mean discrepancy between the lag-embedded observed sample and
//! synthetic samples simulated from the model, with adaptive-gradient
//! descent on numerically differentiated criteria. It also ships the
//! classical baseline estimators the method is usually compared against
//! (QML, particle-filter MLE, synthetic likelihood, moment estimator), a
//! data-driven lag-order selection rule, and Monte Carlo diagnostics for
//! the dependence and error-rate behavior of the statistic.
//!
//! See the `examples/` directory for one runnable program per capability,
//! and the `mmdts` binary for the command-line interface.

pub mod baselines;
pub mod bench;
pub mod diagnostics;
pub mod embedding;
pub mod error;
pub mod estimators;
mod expsum;
pub mod innovations;
pub mod io;
pub mod kernel;
pub mod lag_selection;
pub mod models;

pub use error::{MmdError, Result};
