//! Stochastic-tail normal tempered stable (StoT-NTS) model.
//!
//! The crate is organised bottom-up:
//!
//! * [`nts`] – tempered stable subordinator and NTS characteristic functions,
//!   moments, the standard (zero-mean, unit-variance) parameterization and
//!   its moment generating function.
//! * [`inversion`] – CDF/quantile tables built by characteristic-function
//!   inversion.
//! * [`garch`] – ARMA(1,1)-GARCH(1,1) filtering, Gaussian QMLE and rolling
//!   residual extraction.
//! * [`tails`] – the skewness/kurtosis curve, the `(alpha, theta)` fit, the
//!   per-window `B` fit and the ARIMA(1,1,0) dynamics of `B`.
//! * [`pricer`] – risk-neutral scenario simulation and European option prices.
//! * [`calib`] – calibration to option chains, error estimators and the
//!   paired model-comparison test.

// `!(x > 0.0)` is used throughout on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod calib;
pub mod error;
pub mod garch;
pub mod interp;
pub mod inversion;
pub mod nts;
pub mod optim;
pub mod pricer;
pub mod quad;
pub mod stats;
pub mod tails;

pub use error::{Error, Result};

/// Library version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
