//! Cap-only volatility-target index: leverage `Min[Cap, TV/RV]`, risky leg
//! measured against the level at the last rebalance, cash leg compounding
//! money-market accruals (ACT/360) between rebalances.

use serde::{Deserialize, Serialize};

use super::{LeverageParams, LeverageSchedule, RiskControlSeries, StepDecomposition};
use crate::error::{Error, Result};
use crate::moments::{vol_track, VolMethod};
use crate::series::{LevelSeries, RateSeries};

/// Leverage factor `Min[Cap, TV / RV]` (no floor).
pub fn leverage_sprci(target_vol: f64, cap: f64, realized_vol: f64) -> Result<f64> {
    if target_vol <= 0.0 {
        return Err(Error::BadParameter("target_vol must be positive".into()));
    }
    if cap <= 0.0 {
        return Err(Error::BadParameter("cap must be positive".into()));
    }
    if realized_vol <= 0.0 {
        return Err(Error::BadParameter(format!(
            "realized volatility must be positive, got {realized_vol}"
        )));
    }
    Ok((target_vol / realized_vol).min(cap))
}

/// One day of money-market accrual: `1 + rate * day_gap / 360`.
pub fn money_market_factor(rate: f64, day_gap: f64) -> f64 {
    1.0 + rate * day_gap / 360.0
}

/// How the cash leg accrues between rebalances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AccrualMode {
    /// Daily compounding of a stated rate, ACT/360.
    SimpleRate { rates: RateSeries },
    /// Rolling investment in a 3-month deposit: the applicable rate slides
    /// from the 3-month to the 2-month rate over a 30-day roll cycle,
    /// accrued ACT/360.
    Roll3m { ir3m: RateSeries, ir2m: RateSeries },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SprciConfig {
    pub leverage: LeverageParams,
    pub vol_method: VolMethod,
    /// Observations between rebalances.
    pub rebalance_every: usize,
    pub base_level: f64,
}

impl SprciConfig {
    pub fn validate(&self) -> Result<()> {
        self.leverage.validate()?;
        if self.leverage.floor != 0.0 {
            return Err(Error::BadParameter(
                "the cap-only engine takes no leverage floor".into(),
            ));
        }
        if self.rebalance_every < 1 {
            return Err(Error::BadParameter("rebalance_every must be >= 1".into()));
        }
        if self.base_level <= 0.0 {
            return Err(Error::BadParameter("base_level must be positive".into()));
        }
        Ok(())
    }
}

/// Run the cap-only index over `underlying`.
///
/// Within a rebalance period the level is anchored at the rebalance:
/// `level_t = level_rb * (1 + LF * (B_t/B_rb - 1) + (1 - LF) * A_t)` where
/// `A_t` is the compounded cash accrual since the rebalance. The leverage
/// factor fixed at a rebalance uses the volatility estimate from `vol_lag`
/// observations (trading days) earlier.
pub fn run_sprci(
    underlying: &LevelSeries,
    config: &SprciConfig,
    accrual: &AccrualMode,
) -> Result<RiskControlSeries> {
    config.validate()?;
    let track = vol_track(underlying, &config.vol_method)?;
    let k = config.rebalance_every;
    let lag = config.leverage.vol_lag;
    let start = track.first_index + lag;
    if start + 1 >= underlying.len() {
        return Err(Error::InsufficientData {
            what: "observations after volatility seeding".into(),
            have: underlying.len(),
            need: start + 2,
        });
    }

    let dates = underlying.dates();
    let levels = underlying.levels();
    let roll_anchor = dates[start];

    let daily_rate = |t_prev: usize| -> Result<f64> {
        match accrual {
            AccrualMode::SimpleRate { rates } => rates.rate_on(dates[t_prev]),
            AccrualMode::Roll3m { ir3m, ir2m } => {
                let r3 = ir3m.rate_on(dates[t_prev])?;
                let r2 = ir2m.rate_on(dates[t_prev])?;
                let into_roll = (dates[t_prev] - roll_anchor).num_days().rem_euclid(30) as f64;
                let w = into_roll / 30.0;
                Ok(r3 * (1.0 - w) + r2 * w)
            }
        }
    };

    let mut out_levels = vec![config.base_level];
    let mut steps = Vec::new();
    let mut schedule = LeverageSchedule {
        dates: Vec::new(),
        leverage: Vec::new(),
        realized_vol: Vec::new(),
    };

    let mut lf = 0.0;
    let mut anchor_level = config.base_level;
    let mut anchor_b = levels[start];
    let mut accrual_product = 1.0;
    let mut prev_bracket = 1.0;

    let rebalance = |t: usize,
                         level_t: f64,
                         lf: &mut f64,
                         anchor_level: &mut f64,
                         anchor_b: &mut f64,
                         schedule: &mut LeverageSchedule|
     -> Result<()> {
        let rv = track
            .vol_at(t - lag)
            .expect("start guarantees the lagged estimate exists");
        *lf = if rv > 0.0 {
            leverage_sprci(config.leverage.target_vol, config.leverage.cap, rv)?
        } else {
            config.leverage.cap
        };
        *anchor_level = level_t;
        *anchor_b = levels[t];
        schedule.dates.push(dates[t]);
        schedule.leverage.push(*lf);
        schedule.realized_vol.push(rv);
        Ok(())
    };

    rebalance(
        start,
        config.base_level,
        &mut lf,
        &mut anchor_level,
        &mut anchor_b,
        &mut schedule,
    )?;

    for t in start + 1..underlying.len() {
        let day_gap = (dates[t] - dates[t - 1]).num_days() as f64;
        let prev_accrual = accrual_product - 1.0;
        accrual_product *= money_market_factor(daily_rate(t - 1)?, day_gap);
        let accrued = accrual_product - 1.0;

        let bracket = 1.0 + lf * (levels[t] / anchor_b - 1.0) + (1.0 - lf) * accrued;
        let level_t = anchor_level * bracket;
        let risky = lf * ((levels[t] - levels[t - 1]) / anchor_b) / prev_bracket;
        let cash = (1.0 - lf) * (accrued - prev_accrual) / prev_bracket;
        out_levels.push(level_t);
        steps.push(StepDecomposition { risky, cash });

        if (t - start).is_multiple_of(k) {
            rebalance(t, level_t, &mut lf, &mut anchor_level, &mut anchor_b, &mut schedule)?;
            accrual_product = 1.0;
            prev_bracket = 1.0;
        } else {
            prev_bracket = bracket;
        }
    }

    Ok(RiskControlSeries {
        dates: dates[start..].to_vec(),
        levels: out_levels,
        steps,
        schedule,
        params: config.leverage,
        base_level: config.base_level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{EwmaParams, TRADING_DAYS};
    use crate::scenario::{weekday_calendar, RegimeSwitchGbm};

    #[test]
    fn leverage_examples() {
        // grid row: RV 40% at TV 20% -> 50%
        assert!((leverage_sprci(0.20, 1.5, 0.40).unwrap() - 0.50).abs() < 1e-12);
        // ratio of one
        assert_eq!(leverage_sprci(0.25, 2.0, 0.25).unwrap(), 1.0);
        // cap binds
        assert_eq!(leverage_sprci(0.20, 1.5, 0.05).unwrap(), 1.5);
        assert!(leverage_sprci(0.20, 1.5, 0.0).is_err());
        assert!(leverage_sprci(0.20, 1.5, -1.0).is_err());
    }

    #[test]
    fn thirty_day_money_market_accrual() {
        // 3.6% ACT/360 over a 30-day gap compounds to 1.003
        assert!((money_market_factor(0.036, 30.0) - 1.003).abs() < 1e-15);
    }

    #[test]
    fn single_period_bracket() {
        // LF 0.5, anchor 100 -> 110, zero rates: multiplier 1.05
        let bracket: f64 = 1.0 + 0.5 * (110.0 / 100.0 - 1.0) + 0.5 * 0.0;
        assert!((bracket - 1.05).abs() < 1e-15);
    }

    fn config(tv: f64, cap: f64, rebalance_every: usize) -> SprciConfig {
        SprciConfig {
            leverage: LeverageParams::new(tv, cap, 0.0, 2).unwrap(),
            vol_method: VolMethod::EwmaLong(EwmaParams::new(0.94, 1, 10).unwrap()),
            rebalance_every,
            base_level: 100.0,
        }
    }

    /// Constant-growth underlying: EWMA variance is pinned at the squared log
    /// return, so target_vol == annualized vol forces LF == 1 at every rebalance.
    fn constant_growth(step_return: f64, len: usize) -> (LevelSeries, f64) {
        let dates = weekday_calendar(len);
        let levels: Vec<f64> = (0..len)
            .map(|i| 100.0 * (1.0 + step_return).powi(i as i32))
            .collect();
        let series = LevelSeries::new(dates, levels, "geo").unwrap();
        let rv = (TRADING_DAYS.sqrt()) * (1.0 + step_return).ln();
        (series, rv)
    }

    #[test]
    fn unit_leverage_replicates_underlying() {
        let (underlying, rv) = constant_growth(0.002, 80);
        let cfg = config(rv, 5.0, 5);
        let rates = AccrualMode::SimpleRate {
            rates: RateSeries::flat(&underlying, 0.03),
        };
        let run = run_sprci(&underlying, &cfg, &rates).unwrap();
        for lf in &run.schedule.leverage {
            assert!((lf - 1.0).abs() < 1e-9);
        }
        let start = underlying.len() - run.levels.len();
        for t in 1..run.levels.len() {
            let index_ratio = run.levels[t] / run.levels[t - 1];
            let under_ratio =
                underlying.levels()[start + t] / underlying.levels()[start + t - 1];
            assert!((index_ratio - under_ratio).abs() < 1e-9);
        }
    }

    #[test]
    fn risky_leg_is_linear_in_underlying_within_period() {
        let gbm = RegimeSwitchGbm::flat_vol(100.0, 0.1, 0.3, 90);
        let underlying = gbm.generate(21, "u").unwrap();
        let cfg = config(0.15, 1.5, 20);
        let accrual = AccrualMode::SimpleRate {
            rates: RateSeries::flat(&underlying, 0.05),
        };
        let run = run_sprci(&underlying, &cfg, &accrual).unwrap();
        let start = underlying.len() - run.levels.len();

        // cumulative dollar risky P&L over the first rebalance period
        let period = 1..=cfg.rebalance_every.min(run.steps.len());
        let mut cumulative = 0.0;
        let mut points = Vec::new();
        for t in period {
            cumulative += run.levels[t - 1] * run.steps[t - 1].risky;
            points.push((underlying.levels()[start + t], cumulative));
        }
        assert!(points.len() >= 3);
        let (x1, y1) = points[0];
        for w in points.windows(2).skip(1) {
            let (x2, y2) = w[0];
            let (x3, y3) = w[1];
            let cross = (y2 - y1) * (x3 - x1) - (y3 - y1) * (x2 - x1);
            assert!(cross.abs() < 1e-9, "collinearity violated: {cross}");
        }
    }

    #[test]
    fn decomposition_sums_per_step() {
        let gbm = RegimeSwitchGbm::flat_vol(100.0, 0.02, 0.25, 150);
        let underlying = gbm.generate(9, "u").unwrap();
        let cfg = config(0.10, 1.5, 5);
        let accrual = AccrualMode::SimpleRate {
            rates: RateSeries::flat(&underlying, 0.04),
        };
        let run = run_sprci(&underlying, &cfg, &accrual).unwrap();
        for t in 1..run.levels.len() {
            let gross = run.levels[t] / run.levels[t - 1] - 1.0;
            let s = run.steps[t - 1];
            assert!((gross - (s.risky + s.cash)).abs() < 1e-12);
        }
        for lf in &run.schedule.leverage {
            assert!(*lf > 0.0 && *lf <= 1.5);
        }
    }

    #[test]
    fn roll_variant_interpolates_between_tenors() {
        let (underlying, rv) = constant_growth(0.001, 80);
        let cfg = SprciConfig {
            leverage: LeverageParams::new(rv, 5.0, 0.0, 2).unwrap(),
            vol_method: VolMethod::EwmaLong(EwmaParams::new(0.94, 1, 10).unwrap()),
            rebalance_every: 5,
            base_level: 100.0,
        };
        let ir3m = RateSeries::flat(&underlying, 0.04);
        let ir2m = RateSeries::flat(&underlying, 0.02);
        let run = run_sprci(&underlying, &cfg, &AccrualMode::Roll3m { ir3m, ir2m }).unwrap();
        assert!(run.levels.iter().all(|l| *l > 0.0));

        // both tenors flat and equal reduces to the simple-rate variant
        let ir = RateSeries::flat(&underlying, 0.03);
        let roll = run_sprci(
            &underlying,
            &cfg,
            &AccrualMode::Roll3m {
                ir3m: ir.clone(),
                ir2m: ir.clone(),
            },
        )
        .unwrap();
        let simple = run_sprci(&underlying, &cfg, &AccrualMode::SimpleRate { rates: ir }).unwrap();
        for (a, b) in roll.levels.iter().zip(&simple.levels) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_tenor_is_reported() {
        let (underlying, rv) = constant_growth(0.001, 60);
        let cfg = config(rv, 5.0, 5);
        let cut = underlying.len() - 5;
        let ir3m = RateSeries::new(underlying.dates()[..cut].to_vec(), vec![0.04; cut]).unwrap();
        let ir2m = RateSeries::flat(&underlying, 0.02);
        assert!(matches!(
            run_sprci(&underlying, &cfg, &AccrualMode::Roll3m { ir3m, ir2m }),
            Err(Error::MissingRate(_))
        ));
    }

    #[test]
    fn floor_is_rejected() {
        let cfg = SprciConfig {
            leverage: LeverageParams::new(0.2, 1.5, 0.5, 2).unwrap(),
            vol_method: VolMethod::EwmaLong(EwmaParams::default()),
            rebalance_every: 1,
            base_level: 100.0,
        };
        assert!(cfg.validate().is_err());
    }
}
