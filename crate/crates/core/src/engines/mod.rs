//! Risk-control index engines.
//!
//! Two two-asset volatility-target indices (cap+floor with /365 accrual, and
//! cap-only with /360 accrual measured from the last rebalance), a three-asset
//! semivariance-targeted allocator, and a constant-volatility futures
//! portfolio simulator with a minimum-trade threshold.

mod djrri;
mod hsrai;
mod portfolio;
mod sprci;
mod stablerisk;

pub use djrri::{
    run_djrri, CmacAllocation, CmacInputs, DjrriConfig, DjrriResult, RiskMeasure, WEIGHT_FLOOR,
};
pub use hsrai::{leverage_hsrai, run_hsrai, HsraiConfig};
pub use portfolio::{portfolio_volatility, CovarianceMatrix};
pub use sprci::{leverage_sprci, run_sprci, AccrualMode, SprciConfig};
pub use stablerisk::{
    monte_carlo_band_exits, simulate_stablerisk, PathSummary, StableRiskParams, StableRiskRun,
    StableRiskStep,
};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Leverage-factor parameters shared by the two-asset engines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeverageParams {
    /// Target volatility, annualized.
    pub target_vol: f64,
    /// Maximum leverage factor.
    pub cap: f64,
    /// Minimum leverage factor (ignored by the cap-only engine).
    pub floor: f64,
    /// Volatility lag: rebalance periods for the cap+floor engine,
    /// observations (trading days) for the cap-only engine.
    pub vol_lag: usize,
}

impl LeverageParams {
    pub fn new(target_vol: f64, cap: f64, floor: f64, vol_lag: usize) -> Result<Self> {
        let p = Self {
            target_vol,
            cap,
            floor,
            vol_lag,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_vol <= 0.0 {
            return Err(Error::BadParameter("target_vol must be positive".into()));
        }
        if self.floor < 0.0 || self.cap < self.floor {
            return Err(Error::BadParameter(
                "leverage bounds need cap >= floor >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Leverage factors fixed at each rebalance date, with the volatility figure
/// each one was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeverageSchedule {
    pub dates: Vec<NaiveDate>,
    pub leverage: Vec<f64>,
    pub realized_vol: Vec<f64>,
}

/// One step's return decomposition into risky-leg and cash-leg contributions.
///
/// `risky + cash` equals the step's gross return minus one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDecomposition {
    pub risky: f64,
    pub cash: f64,
}

/// A computed risk-control index path with per-step accrual breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskControlSeries {
    pub dates: Vec<NaiveDate>,
    pub levels: Vec<f64>,
    /// One entry per step (dates.len() - 1 entries).
    pub steps: Vec<StepDecomposition>,
    pub schedule: LeverageSchedule,
    pub params: LeverageParams,
    pub base_level: f64,
}

impl RiskControlSeries {
    /// View the computed path as a plain level series.
    pub fn to_level_series(&self, label: impl Into<String>) -> Result<crate::series::LevelSeries> {
        crate::series::LevelSeries::new(self.dates.clone(), self.levels.clone(), label)
    }
}
