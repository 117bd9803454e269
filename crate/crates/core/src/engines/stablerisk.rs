//! Constant-volatility futures portfolio simulator.
//!
//! Risk is allocated equally across contracts (inverse-volatility weights),
//! scaled so the estimated portfolio volatility sits at target. Proposed
//! position changes smaller than the rebalance threshold are suppressed,
//! transaction costs are deducted from value, and cash earns the money-market
//! rate on 80% of portfolio value.

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::portfolio::{portfolio_volatility, CovarianceMatrix};
use crate::error::{Error, Result};
use crate::moments::{correlation, sample_variance, vol_track, VolMethod, TRADING_DAYS};
use crate::scenario::{path_seed, RegimeSwitchGbm};
use crate::series::{LevelSeries, ReturnKind};

/// Fraction of portfolio value that earns the money-market rate.
const CASH_EARNING_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableRiskParams {
    /// Annualized portfolio volatility target.
    pub target_vol: f64,
    /// Minimum relative position change that triggers a trade (0.25).
    pub rebalance_threshold: f64,
    /// Transaction cost per unit of traded notional (5 bps).
    pub cost_rate: f64,
    /// Flat annual money-market rate, accrued ACT/360.
    pub cash_rate: f64,
    /// Per-contract volatility estimator.
    pub vol_method: VolMethod,
    /// Trailing window of log returns behind the correlation estimates.
    pub cov_window: usize,
    /// Window of the rolling realized-volatility track.
    pub realized_window: usize,
    pub initial_value: f64,
}

impl Default for StableRiskParams {
    fn default() -> Self {
        Self {
            target_vol: 0.10,
            rebalance_threshold: 0.25,
            cost_rate: 5e-4,
            cash_rate: 0.02,
            vol_method: VolMethod::EwmaShort(crate::moments::EwmaParams {
                lambda: 0.94,
                horizon: 1,
                init_window: 21,
                periods_per_year: TRADING_DAYS,
            }),
            cov_window: 42,
            realized_window: 21,
            initial_value: 100.0,
        }
    }
}

impl StableRiskParams {
    pub fn validate(&self) -> Result<()> {
        if self.target_vol <= 0.0 {
            return Err(Error::BadParameter("target_vol must be positive".into()));
        }
        if self.rebalance_threshold < 0.0 {
            return Err(Error::BadParameter(
                "rebalance_threshold must be >= 0".into(),
            ));
        }
        if self.cost_rate < 0.0 {
            return Err(Error::BadParameter("cost_rate must be >= 0".into()));
        }
        if self.cov_window < 2 {
            return Err(Error::BadParameter("cov_window must be >= 2".into()));
        }
        if self.realized_window < 2 {
            return Err(Error::BadParameter("realized_window must be >= 2".into()));
        }
        if self.initial_value <= 0.0 {
            return Err(Error::BadParameter("initial_value must be positive".into()));
        }
        Ok(())
    }
}

/// Portfolio state after one observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableRiskStep {
    pub date: NaiveDate,
    pub value: f64,
    /// Mark-to-market futures P&L over the step, in value units.
    pub pnl: f64,
    /// Cash accrual over the step, in value units.
    pub accrual: f64,
    /// Transaction costs paid at this observation, in value units.
    pub costs: f64,
    /// Notional weights per contract after any rebalance.
    pub positions: Vec<f64>,
    pub rebalanced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableRiskRun {
    pub steps: Vec<StableRiskStep>,
    /// Rolling annualized realized volatility of the portfolio, per date.
    pub vol_track: Vec<(NaiveDate, f64)>,
    pub params: StableRiskParams,
}

impl StableRiskRun {
    pub fn final_value(&self) -> f64 {
        self.steps.last().map(|s| s.value).unwrap_or(f64::NAN)
    }
}

/// Suppress proposed per-contract changes smaller than `threshold` relative
/// to the current position. A zero current position always trades.
pub fn apply_threshold(current: &[f64], proposed: &[f64], threshold: f64) -> Vec<f64> {
    current
        .iter()
        .zip(proposed)
        .map(|(old, new)| {
            let trade = if *old == 0.0 {
                *new != 0.0
            } else {
                ((new - old) / old).abs() >= threshold
            };
            if trade {
                *new
            } else {
                *old
            }
        })
        .collect()
}

/// Intersect contract calendars and return the aligned level matrix.
fn align(contracts: &[LevelSeries]) -> Result<(Vec<NaiveDate>, Vec<Vec<f64>>)> {
    let mut common: Vec<NaiveDate> = contracts[0].dates().to_vec();
    for c in &contracts[1..] {
        let set: std::collections::BTreeSet<NaiveDate> = c.dates().iter().copied().collect();
        common.retain(|d| set.contains(d));
    }
    let mut levels = Vec::with_capacity(contracts.len());
    for c in contracts {
        let mut row = Vec::with_capacity(common.len());
        let mut cursor = 0;
        for d in &common {
            while c.dates()[cursor] != *d {
                cursor += 1;
            }
            row.push(c.levels()[cursor]);
        }
        levels.push(row);
    }
    Ok((common, levels))
}

/// Run the simulator over fully-historical contract series.
pub fn simulate_stablerisk(
    contracts: &[LevelSeries],
    params: &StableRiskParams,
) -> Result<StableRiskRun> {
    params.validate()?;
    if contracts.len() < 2 {
        return Err(Error::BadParameter(
            "need at least two contracts".into(),
        ));
    }
    let (dates, level_rows) = align(contracts)?;
    let n = contracts.len();
    let horizon = params.vol_method.horizon();
    if horizon != 1 {
        return Err(Error::BadParameter(
            "the simulator uses one-day returns; set horizon = 1".into(),
        ));
    }

    let aligned: Vec<LevelSeries> = level_rows
        .iter()
        .enumerate()
        .map(|(i, row)| LevelSeries::new(dates.clone(), row.clone(), format!("contract-{i}")))
        .collect::<Result<_>>()?;
    let tracks: Vec<_> = aligned
        .iter()
        .map(|s| vol_track(s, &params.vol_method))
        .collect::<Result<_>>()?;
    let log_returns: Vec<Vec<f64>> = aligned
        .iter()
        .map(|s| Ok(s.to_returns(ReturnKind::Log, 1)?.values().to_vec()))
        .collect::<Result<_>>()?;

    let first_vol = tracks.iter().map(|t| t.first_index).max().unwrap();
    let start = first_vol.max(params.cov_window);
    if start + 1 >= dates.len() {
        return Err(Error::InsufficientData {
            what: "aligned observations after estimator seeding".into(),
            have: dates.len(),
            need: start + 2,
        });
    }

    // target weights from inverse-vol allocation scaled to the vol target
    let target_weights = |t: usize| -> Result<Vec<f64>> {
        let mut sigmas = Vec::with_capacity(n);
        for (i, track) in tracks.iter().enumerate() {
            let sigma = track.vol_at(t).expect("t >= first_vol");
            if sigma <= 0.0 {
                return Err(Error::DegenerateCovariance(i));
            }
            sigmas.push(sigma);
        }
        let mut correlations = vec![0.0; n * n];
        for i in 0..n {
            correlations[i * n + i] = 1.0;
            let wi = &log_returns[i][t - params.cov_window..t];
            if sample_variance(wi)? == 0.0 {
                return Err(Error::DegenerateCovariance(i));
            }
            for j in (i + 1)..n {
                let wj = &log_returns[j][t - params.cov_window..t];
                let rho = correlation(wi, wj).map_err(|_| Error::DegenerateCovariance(j))?;
                correlations[i * n + j] = rho;
                correlations[j * n + i] = rho;
            }
        }
        let cov = CovarianceMatrix::from_vols_and_correlations(&sigmas, &correlations)?;
        let inv_total: f64 = sigmas.iter().map(|s| 1.0 / s).sum();
        let unit: Vec<f64> = sigmas.iter().map(|s| (1.0 / s) / inv_total).collect();
        let unit_vol = portfolio_volatility(&unit, &cov)?;
        if unit_vol <= 0.0 {
            return Err(Error::DegenerateCovariance(0));
        }
        let scale = params.target_vol / unit_vol;
        Ok(unit.iter().map(|u| u * scale).collect())
    };

    let mut positions = target_weights(start)?;
    let mut value = params.initial_value;
    let mut steps = vec![StableRiskStep {
        date: dates[start],
        value,
        pnl: 0.0,
        accrual: 0.0,
        costs: 0.0,
        positions: positions.clone(),
        rebalanced: true,
    }];

    for t in start + 1..dates.len() {
        let mut step_return = 0.0;
        for (i, row) in level_rows.iter().enumerate() {
            step_return += positions[i] * (row[t] / row[t - 1] - 1.0);
        }
        let day_gap = (dates[t] - dates[t - 1]).num_days() as f64;
        let accrual_frac = params.cash_rate * day_gap / 360.0 * CASH_EARNING_FRACTION;
        let pnl = value * step_return;
        let accrual = value * accrual_frac;
        let pre_cost = value + pnl + accrual;

        let proposed = target_weights(t)?;
        let next = apply_threshold(&positions, &proposed, params.rebalance_threshold);
        let turnover: f64 = next
            .iter()
            .zip(&positions)
            .map(|(a, b)| (a - b).abs())
            .sum();
        let costs = params.cost_rate * turnover * pre_cost;
        let rebalanced = turnover > 0.0;
        positions = next;
        value = pre_cost - costs;

        steps.push(StableRiskStep {
            date: dates[t],
            value,
            pnl,
            accrual,
            costs,
            positions: positions.clone(),
            rebalanced,
        });
    }

    // rolling realized vol of the portfolio value path
    let values: Vec<f64> = steps.iter().map(|s| s.value).collect();
    let rets: Vec<f64> = values.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let mut vol_points = Vec::new();
    for (k, w) in rets.windows(params.realized_window).enumerate() {
        let variance = sample_variance(w)?;
        let vol = (TRADING_DAYS * variance).sqrt();
        vol_points.push((steps[k + params.realized_window].date, vol));
    }

    Ok(StableRiskRun {
        steps,
        vol_track: vol_points,
        params: params.clone(),
    })
}

/// Per-path Monte Carlo summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub path_index: usize,
    pub seed_base: u64,
    /// Rolling-vol windows outside `target * (1 +/- band)`.
    pub band_exits: usize,
    pub windows: usize,
    pub min_vol: f64,
    pub max_vol: f64,
    pub final_value: f64,
}

/// Simulate `n_paths` independent scenarios of `n_contracts` contracts each
/// and count rolling-vol band exits per path. Per-path seeds derive from the
/// master seed, so results are reproducible regardless of scheduling.
pub fn monte_carlo_band_exits(
    scenario: &RegimeSwitchGbm,
    n_contracts: usize,
    n_paths: usize,
    master_seed: u64,
    params: &StableRiskParams,
    band: f64,
) -> Result<Vec<PathSummary>> {
    if n_contracts < 2 {
        return Err(Error::BadParameter("need at least two contracts".into()));
    }
    (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let contracts: Vec<LevelSeries> = (0..n_contracts)
                .map(|c| {
                    let seed = path_seed(master_seed, (p * n_contracts + c) as u64);
                    scenario.generate(seed, format!("path-{p}-contract-{c}"))
                })
                .collect::<Result<_>>()?;
            let run = simulate_stablerisk(&contracts, params)?;
            let lo = params.target_vol * (1.0 - band);
            let hi = params.target_vol * (1.0 + band);
            let exits = run
                .vol_track
                .iter()
                .filter(|(_, v)| *v < lo || *v > hi)
                .count();
            let min_vol = run.vol_track.iter().map(|(_, v)| *v).fold(f64::MAX, f64::min);
            let max_vol = run.vol_track.iter().map(|(_, v)| *v).fold(f64::MIN, f64::max);
            Ok(PathSummary {
                path_index: p,
                seed_base: master_seed,
                band_exits: exits,
                windows: run.vol_track.len(),
                min_vol,
                max_vol,
                final_value: run.final_value(),
            })
        })
        .collect()
}
