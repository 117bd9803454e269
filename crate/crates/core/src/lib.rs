//! Risk-controlled index calculation and diagnostics.
//!
//! The crate is organized around five concerns:
//!
//! - [`series`]: dated level/return series, day counts, CSV ingestion;
//! - [`moments`]: variance, semivariance, covariance, correlation, the
//!   exponentially-weighted variance recursion, annualization, and a
//!   stationarity diagnostic;
//! - [`engines`]: the index engines — two two-asset volatility-target
//!   constructions, a three-asset semivariance-targeted allocator, and a
//!   constant-volatility futures simulator;
//! - [`diagnostics`]: leverage sensitivity grids, noise and bias measures,
//!   compounded-return dispersion tables, the volatility-leakage experiment,
//!   variance-decomposition accounting and Sharpe ratios;
//! - [`scenario`]: seedable synthetic paths for experiments and tests.
//!
//! Everything is pure and immutable after construction; engine runs and
//! experiments may execute concurrently, and Monte Carlo paths derive
//! per-path seeds so results never depend on scheduling.

pub mod diagnostics;
pub mod engines;
pub mod error;
pub mod moments;
pub mod scenario;
pub mod series;

pub use error::{Error, ErrorClass, Result};
pub use moments::{EwmaParams, MomentSet, VolEstimate, VolMethod};
pub use series::{ColumnSpec, DayCount, LevelSeries, RateSeries, ReturnKind, ReturnSeries};
