//! Three-asset relative-risk allocator: each month the stock/bond/cash mix is
//! re-weighted to maximize the allocation to the asset with the greatest
//! expected return, subject to the portfolio's trailing downside risk staying
//! at or below a fraction of the all-stock portfolio's risk, with a 5% floor
//! on every weight.
//!
//! The optimizer is an exact enumeration of the floor-constrained simplex at
//! 0.1% granularity, so results are deterministic and independently checkable
//! against a coarser grid.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{LevelSeries, ReturnKind};

/// Minimum weight per asset.
pub const WEIGHT_FLOOR: f64 = 0.05;
const FLOOR_MILLI: u32 = 50;
const TOTAL_MILLI: u32 = 1000;

/// Downside-risk measure used for targeting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskMeasure {
    /// Mean of squared below-mean deviations.
    Semivariance,
    /// Square root of the semivariance.
    Semideviation,
}

impl RiskMeasure {
    fn apply(self, semivariance: f64) -> f64 {
        match self {
            RiskMeasure::Semivariance => semivariance,
            RiskMeasure::Semideviation => semivariance.sqrt(),
        }
    }
}

/// Monthly stock/bond/cash composite series plus expected-return estimates.
#[derive(Debug, Clone)]
pub struct CmacInputs {
    pub stocks: LevelSeries,
    pub bonds: LevelSeries,
    pub cash: LevelSeries,
    /// Expected returns in (stocks, bonds, cash) order.
    pub expected_returns: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DjrriConfig {
    /// Fraction of all-stock risk the index may carry (0.2 .. 1.0).
    pub risk_fraction: f64,
    /// Trailing window of monthly returns for the risk estimate.
    pub window: usize,
    pub risk_measure: RiskMeasure,
    pub base_level: f64,
}

impl Default for DjrriConfig {
    fn default() -> Self {
        Self {
            risk_fraction: 1.0,
            window: 36,
            risk_measure: RiskMeasure::Semivariance,
            base_level: 100.0,
        }
    }
}

impl DjrriConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.risk_fraction > 0.0 && self.risk_fraction <= 1.0) {
            return Err(Error::BadParameter(
                "risk_fraction must be in (0, 1]".into(),
            ));
        }
        if self.window < 2 {
            return Err(Error::BadParameter("window must be >= 2".into()));
        }
        if self.base_level <= 0.0 {
            return Err(Error::BadParameter("base_level must be positive".into()));
        }
        Ok(())
    }
}

/// One month's allocation decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmacAllocation {
    pub as_of: NaiveDate,
    /// Weights in (stocks, bonds, cash) order; each >= 0.05, summing to one.
    pub weights: [f64; 3],
    /// The same weights in integer tenths of a percent (sum exactly 1000).
    pub milli_weights: [u32; 3],
    pub risk_fraction: f64,
    pub all_stock_risk: f64,
    pub target_risk: f64,
    pub achieved_risk: f64,
    pub expected_returns: [f64; 3],
    /// Set when even the minimum-risk corner exceeds the target; the weights
    /// are then the risk-minimizing grid point.
    pub target_unattainable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DjrriResult {
    pub allocations: Vec<CmacAllocation>,
    pub composite: LevelSeries,
}

/// Downside deviations of a candidate mix, computed from per-asset deviation
/// vectors folded down to the two free weights.
struct WindowProblem {
    /// stock deviation minus cash deviation, per month
    u: Vec<f64>,
    /// bond deviation minus cash deviation, per month
    v: Vec<f64>,
    /// cash deviation, per month
    base: Vec<f64>,
}

impl WindowProblem {
    fn new(rs: &[f64], rb: &[f64], rc: &[f64]) -> Self {
        let n = rs.len() as f64;
        let (ms, mb, mc) = (
            rs.iter().sum::<f64>() / n,
            rb.iter().sum::<f64>() / n,
            rc.iter().sum::<f64>() / n,
        );
        let u = rs.iter().zip(rc).map(|(s, c)| (s - ms) - (c - mc)).collect();
        let v = rb.iter().zip(rc).map(|(b, c)| (b - mb) - (c - mc)).collect();
        let base = rc.iter().map(|c| c - mc).collect();
        Self { u, v, base }
    }

    /// Portfolio semivariance at weights (ws, wb, 1 - ws - wb).
    fn semivariance(&self, ws: f64, wb: f64) -> f64 {
        let mut acc = 0.0;
        for ((u, v), base) in self.u.iter().zip(&self.v).zip(&self.base) {
            let dev = ws * u + wb * v + base;
            if dev < 0.0 {
                acc += dev * dev;
            }
        }
        acc / self.u.len() as f64
    }
}

fn milli_to_weight(m: u32) -> f64 {
    m as f64 / TOTAL_MILLI as f64
}

/// Enumerate the floor-constrained simplex at 0.1% steps, scanning the asset
/// with the greatest expected return from its maximum weight downward; the
/// first feasible point is the optimum of the lexicographic objective.
/// Returns `(milli weights in scan order, achieved risk, attainable)`.
fn optimize(
    problem: &WindowProblem,
    order: [usize; 3],
    target_risk: f64,
    measure: RiskMeasure,
) -> ([u32; 3], f64, bool) {
    let max_first = TOTAL_MILLI - 2 * FLOOR_MILLI;
    let mut best_infeasible: Option<([u32; 3], f64)> = None;

    for a in (FLOOR_MILLI..=max_first).rev() {
        let max_b = TOTAL_MILLI - a - FLOOR_MILLI;
        for b in (FLOOR_MILLI..=max_b).rev() {
            let c = TOTAL_MILLI - a - b;
            let mut milli = [0u32; 3];
            milli[order[0]] = a;
            milli[order[1]] = b;
            milli[order[2]] = c;
            let sv = problem.semivariance(
                milli_to_weight(milli[0]),
                milli_to_weight(milli[1]),
            );
            let risk = measure.apply(sv);
            if risk <= target_risk * (1.0 + 1e-12) + 1e-18 {
                return (milli, risk, true);
            }
            match &best_infeasible {
                Some((_, r)) if *r <= risk => {}
                _ => best_infeasible = Some((milli, risk)),
            }
        }
    }
    let (milli, risk) = best_infeasible.expect("grid is never empty");
    (milli, risk, false)
}

/// Run the allocator over aligned monthly series.
///
/// Allocations are produced for every month with a full trailing window; the
/// composite chains each month's return under the weights fixed the month
/// before.
pub fn run_djrri(inputs: &CmacInputs, config: &DjrriConfig) -> Result<DjrriResult> {
    config.validate()?;
    let n = inputs.stocks.len();
    for other in [&inputs.bonds, &inputs.cash] {
        if other.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: other.len(),
            });
        }
        if let Some(position) = inputs
            .stocks
            .dates()
            .iter()
            .zip(other.dates())
            .position(|(a, b)| a != b)
        {
            return Err(Error::DateMisalignment { position });
        }
    }
    let window = config.window;
    if n < window + 1 {
        return Err(Error::InsufficientData {
            what: "monthly observations for the trailing risk window".into(),
            have: n,
            need: window + 1,
        });
    }

    let rs = inputs.stocks.to_returns(ReturnKind::Simple, 1)?;
    let rb = inputs.bonds.to_returns(ReturnKind::Simple, 1)?;
    let rc = inputs.cash.to_returns(ReturnKind::Simple, 1)?;
    let (rs, rb, rc) = (rs.values(), rb.values(), rc.values());

    // scan order: descending expected return, ties by asset position
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| {
        inputs.expected_returns[j]
            .partial_cmp(&inputs.expected_returns[i])
            .expect("expected returns must not be NaN")
            .then(i.cmp(&j))
    });

    let dates = inputs.stocks.dates();
    let mut allocations: Vec<CmacAllocation> = Vec::new();
    let mut composite_levels = vec![config.base_level];
    let mut composite_dates = vec![dates[window]];

    for m in window..=rs.len() {
        // trailing window of returns ending at return index m - 1
        let lo = m - window;
        let problem = WindowProblem::new(&rs[lo..m], &rb[lo..m], &rc[lo..m]);
        let all_stock_sv = crate::moments::semivariance(&rs[lo..m])?;
        let all_stock_risk = config.risk_measure.apply(all_stock_sv);
        let target_risk = config.risk_fraction * all_stock_risk;
        let (milli, achieved, attainable) =
            optimize(&problem, order, target_risk, config.risk_measure);
        let ws = milli_to_weight(milli[0]);
        let wb = milli_to_weight(milli[1]);
        let weights = [ws, wb, 1.0 - ws - wb];
        allocations.push(CmacAllocation {
            as_of: dates[m],
            weights,
            milli_weights: milli,
            risk_fraction: config.risk_fraction,
            all_stock_risk,
            target_risk,
            achieved_risk: achieved,
            expected_returns: inputs.expected_returns,
            target_unattainable: !attainable,
        });

        if m < rs.len() {
            let next = weights[0] * rs[m] + weights[1] * rb[m] + weights[2] * rc[m];
            let prev = *composite_levels.last().expect("seeded");
            composite_levels.push(prev * (1.0 + next));
            composite_dates.push(dates[m + 1]);
        }
    }

    Ok(DjrriResult {
        allocations,
        composite: LevelSeries::new(composite_dates, composite_levels, "relative-risk composite")?,
    })
}
