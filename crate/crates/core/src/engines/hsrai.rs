//! Cap-and-floor volatility-target index: leverage `Max{Min[Cap, TV/RV], Floor}`,
//! risky leg measured step-over-step, cash leg accruing `(r/365) * day gap`.

use serde::{Deserialize, Serialize};

use super::{LeverageParams, LeverageSchedule, RiskControlSeries, StepDecomposition};
use crate::error::{Error, Result};
use crate::moments::{vol_track, VolMethod};
use crate::series::{LevelSeries, RateSeries};

/// Leverage factor `Max{Min[Cap, TV / RV], Floor}`.
pub fn leverage_hsrai(params: &LeverageParams, realized_vol: f64) -> Result<f64> {
    params.validate()?;
    if realized_vol <= 0.0 {
        return Err(Error::BadParameter(format!(
            "realized volatility must be positive, got {realized_vol}"
        )));
    }
    Ok((params.target_vol / realized_vol)
        .min(params.cap)
        .max(params.floor))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HsraiConfig {
    pub leverage: LeverageParams,
    pub vol_method: VolMethod,
    /// Observations between rebalances.
    pub rebalance_every: usize,
    pub base_level: f64,
}

impl HsraiConfig {
    pub fn validate(&self) -> Result<()> {
        self.leverage.validate()?;
        if self.rebalance_every < 1 {
            return Err(Error::BadParameter("rebalance_every must be >= 1".into()));
        }
        if self.base_level <= 0.0 {
            return Err(Error::BadParameter("base_level must be positive".into()));
        }
        Ok(())
    }
}

/// Run the cap-and-floor index over `underlying`.
///
/// The output starts at the first observation where the lagged volatility
/// estimate exists: the leverage factor fixed at rebalance `j` uses the
/// estimate from `vol_lag` rebalance periods earlier, and is held constant
/// until the next rebalance. Each step multiplies the previous level by
/// `1 + LF * (B_t / B_{t-1} - 1) + (1 - LF) * (r_{t-1} / 365) * D_{t,t-1}`.
pub fn run_hsrai(
    underlying: &LevelSeries,
    rates: &RateSeries,
    config: &HsraiConfig,
) -> Result<RiskControlSeries> {
    config.validate()?;
    let track = vol_track(underlying, &config.vol_method)?;
    let k = config.rebalance_every;
    let lag = config.leverage.vol_lag;
    let start = track.first_index + lag * k;
    if start + 1 >= underlying.len() {
        return Err(Error::InsufficientData {
            what: "observations after volatility seeding".into(),
            have: underlying.len(),
            need: start + 2,
        });
    }

    let dates = underlying.dates();
    let levels = underlying.levels();
    let mut out_levels = vec![config.base_level];
    let mut steps = Vec::new();
    let mut schedule = LeverageSchedule {
        dates: Vec::new(),
        leverage: Vec::new(),
        realized_vol: Vec::new(),
    };

    let mut lf = 0.0;
    for t in start..underlying.len() {
        let since_start = t - start;
        if since_start.is_multiple_of(k) {
            let rv_index = t - lag * k;
            let rv = track
                .vol_at(rv_index)
                .expect("start guarantees the lagged estimate exists");
            lf = if rv > 0.0 {
                leverage_hsrai(&config.leverage, rv)?
            } else {
                // flat underlying: TV / RV -> +inf, cap binds
                config.leverage.cap
            };
            schedule.dates.push(dates[t]);
            schedule.leverage.push(lf);
            schedule.realized_vol.push(rv);
        }
        if t == start {
            continue;
        }
        let rate = rates.rate_on(dates[t - 1])?;
        let day_gap = (dates[t] - dates[t - 1]).num_days() as f64;
        let risky = lf * (levels[t] / levels[t - 1] - 1.0);
        let cash = (1.0 - lf) * (rate / 365.0) * day_gap;
        let prev = *out_levels.last().expect("seeded with base level");
        out_levels.push(prev * (1.0 + risky + cash));
        steps.push(StepDecomposition { risky, cash });
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
    use crate::moments::EwmaParams;
    use crate::scenario::{weekday_calendar, RegimeSwitchGbm};

    fn params(tv: f64, cap: f64, floor: f64) -> LeverageParams {
        LeverageParams::new(tv, cap, floor, 2).unwrap()
    }

    #[test]
    fn leverage_examples() {
        // worked example: TV 20%, RV 25% -> 80%
        let lf = leverage_hsrai(&params(0.20, 3.0, 0.0), 0.25).unwrap();
        assert!((lf - 0.80).abs() < 1e-12);
        // grid row: RV 8% -> 250%
        let lf = leverage_hsrai(&params(0.20, 10.0, 0.0), 0.08).unwrap();
        assert!((lf - 2.50).abs() < 1e-12);
        // cap binds
        let lf = leverage_hsrai(&params(0.20, 1.0, 0.5), 0.10).unwrap();
        assert_eq!(lf, 1.0);
        // floor binds
        let lf = leverage_hsrai(&params(0.20, 3.0, 0.5), 0.80).unwrap();
        assert_eq!(lf, 0.5);
        assert!(leverage_hsrai(&params(0.2, 1.0, 0.0), 0.0).is_err());
        assert!(leverage_hsrai(&params(0.2, 1.0, 0.0), -0.3).is_err());
    }

    fn ewma_config(tv: f64, cap: f64, floor: f64) -> HsraiConfig {
        HsraiConfig {
            leverage: LeverageParams::new(tv, cap, floor, 2).unwrap(),
            vol_method: VolMethod::EwmaLong(EwmaParams::new(0.94, 1, 10).unwrap()),
            rebalance_every: 5,
            base_level: 100.0,
        }
    }

    #[test]
    fn pinned_leverage_replicates_underlying() {
        let gbm = RegimeSwitchGbm::flat_vol(100.0, 0.05, 0.25, 120);
        let underlying = gbm.generate(11, "u").unwrap();
        let rates = RateSeries::flat(&underlying, 0.04);
        let run = run_hsrai(&underlying, &rates, &ewma_config(0.2, 1.0, 1.0)).unwrap();
        let start = underlying.len() - run.levels.len();
        for t in 1..run.levels.len() {
            let index_ratio = run.levels[t] / run.levels[t - 1];
            let under_ratio =
                underlying.levels()[start + t] / underlying.levels()[start + t - 1];
            assert!((index_ratio - under_ratio).abs() < 1e-12);
            assert_eq!(run.steps[t - 1].cash, 0.0);
        }
    }

    #[test]
    fn zero_leverage_accrues_cash_only() {
        // ten calendar days at 3.65%: 100 -> 100.1
        let dates = [
            chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            chrono::NaiveDate::from_ymd_opt(2020, 1, 11).unwrap(),
        ];
        let rate: f64 = 0.0365;
        let gap = 10.0;
        let accrual: f64 = (rate / 365.0) * gap;
        assert!((100.0 * (1.0 + accrual) - 100.1).abs() < 1e-12);
        assert_eq!((dates[1] - dates[0]).num_days(), 10);
    }

    #[test]
    fn printed_recursion_single_step() {
        // LF 0.8, price ratio 1.05, r 3.65%, one-day gap, previous level 100
        let lf: f64 = 0.8;
        let step: f64 = 1.0 + lf * (1.05 - 1.0) + (1.0 - lf) * (0.0365 / 365.0) * 1.0;
        assert!((100.0 * step - 104.002).abs() < 1e-12);
    }

    #[test]
    fn engine_zero_floor_cap_accrual_path() {
        // cap == floor == 0 pins LF to zero; path is pure accrual
        let dates = weekday_calendar(40);
        let levels: Vec<f64> = (0..40).map(|i| 100.0 + (i % 7) as f64).collect();
        let underlying = LevelSeries::new(dates, levels, "u").unwrap();
        let rates = RateSeries::flat(&underlying, 0.0365);
        let run = run_hsrai(&underlying, &rates, &ewma_config(0.2, 0.0, 0.0)).unwrap();
        for (t, step) in run.steps.iter().enumerate() {
            assert_eq!(step.risky, 0.0);
            let gap = (run.dates[t + 1] - run.dates[t]).num_days() as f64;
            assert!((step.cash - (0.0365 / 365.0) * gap).abs() < 1e-15);
        }
    }

    #[test]
    fn missing_rate_names_date() {
        let gbm = RegimeSwitchGbm::flat_vol(100.0, 0.0, 0.2, 60);
        let underlying = gbm.generate(3, "u").unwrap();
        // rates stop short of the index window
        let cut = underlying.len() - 10;
        let rates = RateSeries::new(
            underlying.dates()[..cut].to_vec(),
            vec![0.01; cut],
        )
        .unwrap();
        let err = run_hsrai(&underlying, &rates, &ewma_config(0.2, 1.5, 0.0)).unwrap_err();
        match err {
            Error::MissingRate(d) => assert!(underlying.dates().contains(&d)),
            other => panic!("expected MissingRate, got {other:?}"),
        }
    }

    #[test]
    fn step_decomposition_sums_to_gross_return() {
        let gbm = RegimeSwitchGbm::flat_vol(100.0, 0.03, 0.3, 200);
        let underlying = gbm.generate(5, "u").unwrap();
        let rates = RateSeries::flat(&underlying, 0.02);
        let run = run_hsrai(&underlying, &rates, &ewma_config(0.15, 2.0, 0.2)).unwrap();
        for t in 1..run.levels.len() {
            let gross = run.levels[t] / run.levels[t - 1] - 1.0;
            let s = run.steps[t - 1];
            assert!((gross - (s.risky + s.cash)).abs() < 1e-12);
        }
        // leverage stays inside [floor, cap]
        for lf in &run.schedule.leverage {
            assert!(*lf >= 0.2 - 1e-15 && *lf <= 2.0 + 1e-15);
        }
    }

    #[test]
    fn too_short_series_is_rejected() {
        let gbm = RegimeSwitchGbm::flat_vol(100.0, 0.0, 0.2, 12);
        let underlying = gbm.generate(1, "u").unwrap();
        let rates = RateSeries::flat(&underlying, 0.0);
        assert!(matches!(
            run_hsrai(&underlying, &rates, &ewma_config(0.2, 1.0, 0.0)),
            Err(Error::InsufficientData { .. })
        ));
    }
}
