//! Moment estimators: population variance/semivariance/covariance/correlation,
//! the exponentially-weighted variance recursion used by risk-control indices
//! (initialization and update), annualized realized volatility, and a
//! finite-difference stationarity diagnostic.
//!
//! All dispersion estimators divide by the observation count `n`, not `n - 1`.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{LevelSeries, ReturnKind};

/// Trading days per year used to annualize variances.
pub const TRADING_DAYS: f64 = 252.0;

/// Default relative-change threshold of the stationarity diagnostic.
pub const DEFAULT_STATIONARITY_TOLERANCE: f64 = 0.10;

/// Mean of a non-empty slice.
pub fn mean(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Population variance: `sum((x - mean)^2) / n`.
pub fn sample_variance(xs: &[f64]) -> Result<f64> {
    let mu = mean(xs)?;
    Ok(xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / xs.len() as f64)
}

/// Population semivariance: `sum(min(x - mean, 0)^2) / n`.
pub fn semivariance(xs: &[f64]) -> Result<f64> {
    let mu = mean(xs)?;
    Ok(xs
        .iter()
        .map(|x| {
            let d = (x - mu).min(0.0);
            d * d
        })
        .sum::<f64>()
        / xs.len() as f64)
}

/// Population covariance of two equal-length series.
pub fn covariance(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    let mx = mean(xs)?;
    let my = mean(ys)?;
    Ok(xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / xs.len() as f64)
}

/// Correlation `cov(x, y) / (sigma_x * sigma_y)`; both sigmas must be nonzero.
pub fn correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let cov = covariance(xs, ys)?;
    let sx = sample_variance(xs)?.sqrt();
    let sy = sample_variance(ys)?.sqrt();
    if sx == 0.0 || sy == 0.0 {
        return Err(Error::ZeroSigma);
    }
    Ok(cov / (sy * sx))
}

/// First four moments plus semivariance, all population-divisor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub mean: f64,
    pub variance: f64,
    pub semivariance: f64,
    pub std_dev: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub count: usize,
}

impl MomentSet {
    pub fn from_observations(xs: &[f64]) -> Result<Self> {
        let mu = mean(xs)?;
        let n = xs.len() as f64;
        let variance = sample_variance(xs)?;
        let semivariance = semivariance(xs)?;
        let std_dev = variance.sqrt();
        let (skewness, kurtosis) = if variance > 0.0 {
            let m3 = xs.iter().map(|x| (x - mu).powi(3)).sum::<f64>() / n;
            let m4 = xs.iter().map(|x| (x - mu).powi(4)).sum::<f64>() / n;
            (m3 / std_dev.powi(3), m4 / (variance * variance))
        } else {
            (0.0, 0.0)
        };
        Ok(Self {
            mean: mu,
            variance,
            semivariance,
            std_dev,
            skewness,
            kurtosis,
            count: xs.len(),
        })
    }
}

/// Parameters of the exponentially-weighted variance recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EwmaParams {
    /// Decay factor in (0, 1); weight of history in each update.
    pub lambda: f64,
    /// Return horizon in observations (n-day log returns).
    pub horizon: usize,
    /// Number of returns averaged for the initial variance.
    pub init_window: usize,
    /// Periods per year for annualization (trading-day convention).
    pub periods_per_year: f64,
}

impl EwmaParams {
    pub fn new(lambda: f64, horizon: usize, init_window: usize) -> Result<Self> {
        let p = Self {
            lambda,
            horizon,
            init_window,
            periods_per_year: TRADING_DAYS,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::BadDecay(self.lambda));
        }
        if self.horizon < 1 {
            return Err(Error::BadParameter("horizon must be >= 1".into()));
        }
        if self.init_window < 2 {
            return Err(Error::BadParameter("init_window must be >= 2".into()));
        }
        if self.periods_per_year <= 0.0 {
            return Err(Error::BadParameter(
                "periods_per_year must be positive".into(),
            ));
        }
        Ok(())
    }
}

impl Default for EwmaParams {
    fn default() -> Self {
        Self {
            lambda: 0.94,
            horizon: 1,
            init_window: 63,
            periods_per_year: TRADING_DAYS,
        }
    }
}

/// Initial exponentially-weighted variance over the last `init_window` log
/// returns of `log_returns`.
///
/// Weight of the return `k` observations before the as-of date is
/// `(1 - lambda) * lambda^k`, normalized so the weights sum to one. The most
/// recent observation carries the largest weight.
pub fn ewma_variance_init(log_returns: &[f64], params: &EwmaParams) -> Result<f64> {
    params.validate()?;
    let n = params.init_window;
    if log_returns.len() < n {
        return Err(Error::InsufficientData {
            what: "log returns for ewma initialization".into(),
            have: log_returns.len(),
            need: n,
        });
    }
    let window = &log_returns[log_returns.len() - n..];
    let mut weighted = 0.0;
    let mut weight_sum = 0.0;
    for (j, r) in window.iter().enumerate() {
        // distance from the as-of date; j = n-1 is the most recent return
        let k = (n - 1 - j) as i32;
        let w = (1.0 - params.lambda) * params.lambda.powi(k);
        weighted += w * r * r;
        weight_sum += w;
    }
    Ok(weighted / weight_sum)
}

/// One step of the variance recursion:
/// `lambda * prev + (1 - lambda) * r^2`, written so that `r^2 == prev` is an
/// exact fixed point.
pub fn ewma_variance_update(prev: f64, new_log_return: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::BadDecay(lambda));
    }
    if prev < 0.0 {
        return Err(Error::NegativeVariance(prev));
    }
    let r2 = new_log_return * new_log_return;
    Ok(prev + (1.0 - lambda) * (r2 - prev))
}

/// Annualized volatility from an n-day return variance: `sqrt((252 / n) * variance)`.
pub fn annualize(variance: f64, horizon: usize) -> Result<f64> {
    if variance < 0.0 {
        return Err(Error::NegativeVariance(variance));
    }
    if horizon < 1 {
        return Err(Error::BadParameter("horizon must be >= 1".into()));
    }
    Ok(((TRADING_DAYS / horizon as f64) * variance).sqrt())
}

/// Recipe for turning a level series into realized-volatility estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum VolMethod {
    /// Rolling population variance of log returns over a fixed window.
    Sample { window: usize, horizon: usize },
    /// Exponentially-weighted variance, long-term decay.
    EwmaLong(EwmaParams),
    /// Exponentially-weighted variance, short-term decay.
    EwmaShort(EwmaParams),
}

impl VolMethod {
    pub fn horizon(&self) -> usize {
        match self {
            VolMethod::Sample { horizon, .. } => *horizon,
            VolMethod::EwmaLong(p) | VolMethod::EwmaShort(p) => p.horizon,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            VolMethod::Sample { window, horizon } => {
                if *window < 2 {
                    return Err(Error::BadParameter("sample window must be >= 2".into()));
                }
                if *horizon < 1 {
                    return Err(Error::BadParameter("horizon must be >= 1".into()));
                }
                Ok(())
            }
            VolMethod::EwmaLong(p) | VolMethod::EwmaShort(p) => p.validate(),
        }
    }
}

/// A realized-volatility figure with full estimator provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolEstimate {
    /// Annualized volatility, per sqrt(year).
    pub value: f64,
    /// Un-annualized n-day return variance behind it.
    pub variance: f64,
    pub method: VolMethod,
    pub as_of: NaiveDate,
}

/// Per-date variance estimates for a level series under one [`VolMethod`].
///
/// `first_index` is the first observation index of the source series that has
/// an estimate; `variances[k]` belongs to observation `first_index + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolTrack {
    pub first_index: usize,
    pub variances: Vec<f64>,
    pub horizon: usize,
}

impl VolTrack {
    /// Un-annualized variance at observation index `i`, if estimated.
    pub fn variance_at(&self, i: usize) -> Option<f64> {
        i.checked_sub(self.first_index)
            .and_then(|k| self.variances.get(k))
            .copied()
    }

    /// Annualized volatility at observation index `i`, if estimated.
    pub fn vol_at(&self, i: usize) -> Option<f64> {
        self.variance_at(i)
            .map(|v| ((TRADING_DAYS / self.horizon as f64) * v).sqrt())
    }
}

/// Run a [`VolMethod`] over a whole series.
pub fn vol_track(series: &LevelSeries, method: &VolMethod) -> Result<VolTrack> {
    method.validate()?;
    let horizon = method.horizon();
    let returns = series.to_returns(ReturnKind::Log, horizon)?;
    let rs = returns.values();
    match method {
        VolMethod::Sample { window, .. } => {
            if rs.len() < *window {
                return Err(Error::InsufficientData {
                    what: "log returns for sample variance window".into(),
                    have: rs.len(),
                    need: *window,
                });
            }
            let variances = rs
                .windows(*window)
                .map(|w| sample_variance(w).expect("window is non-empty"))
                .collect();
            // return k corresponds to observation k + horizon
            Ok(VolTrack {
                first_index: horizon + window - 1,
                variances,
                horizon,
            })
        }
        VolMethod::EwmaLong(p) | VolMethod::EwmaShort(p) => {
            let n = p.init_window;
            if rs.len() < n {
                return Err(Error::InsufficientData {
                    what: "log returns for ewma initialization".into(),
                    have: rs.len(),
                    need: n,
                });
            }
            let mut variances = Vec::with_capacity(rs.len() - n + 1);
            let mut var = ewma_variance_init(&rs[..n], p)?;
            variances.push(var);
            for r in &rs[n..] {
                var = ewma_variance_update(var, *r, p.lambda)?;
                variances.push(var);
            }
            Ok(VolTrack {
                first_index: horizon + n - 1,
                variances,
                horizon,
            })
        }
    }
}

/// Volatility estimate as of the last observation of `series`.
pub fn estimate_vol(series: &LevelSeries, method: &VolMethod) -> Result<VolEstimate> {
    let track = vol_track(series, method)?;
    let variance = *track.variances.last().ok_or(Error::EmptyInput)?;
    Ok(VolEstimate {
        value: annualize(variance, track.horizon)?,
        variance,
        method: method.clone(),
        as_of: series.last_date().ok_or(Error::EmptyInput)?,
    })
}

/// One window-to-window step of the stationarity diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarityStep {
    pub delta_mean: f64,
    pub delta_variance: f64,
    pub delta_std_dev: f64,
    pub rel_mean: f64,
    pub rel_variance: f64,
    pub rel_std_dev: f64,
}

/// Finite-difference stationarity report over rolling windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub window: usize,
    pub tolerance: f64,
    pub steps: Vec<StationarityStep>,
    pub max_rel_mean: f64,
    pub max_rel_variance: f64,
    pub max_rel_std_dev: f64,
    pub mean_violated: bool,
    pub variance_violated: bool,
    pub std_dev_violated: bool,
}

impl StationarityReport {
    pub fn all_pass(&self) -> bool {
        !(self.mean_violated || self.variance_violated || self.std_dev_violated)
    }
}

fn rel_change(prev: f64, next: f64) -> f64 {
    let d = next - prev;
    if d == 0.0 {
        return 0.0;
    }
    d / prev.abs().max(next.abs()).max(1e-12)
}

/// Slide a window of `window` observations one step at a time and record how
/// the window mean, variance and standard deviation move per step. A quantity
/// is flagged violated when any step's relative change exceeds `tolerance`.
pub fn stationarity_diagnostic(
    xs: &[f64],
    window: usize,
    tolerance: f64,
) -> Result<StationarityReport> {
    if window < 2 {
        return Err(Error::BadParameter("window must be >= 2".into()));
    }
    if xs.len() < 2 * window {
        return Err(Error::InsufficientData {
            what: "observations for stationarity windows".into(),
            have: xs.len(),
            need: 2 * window,
        });
    }
    if tolerance <= 0.0 {
        return Err(Error::BadParameter("tolerance must be positive".into()));
    }
    let stats: Vec<(f64, f64, f64)> = xs
        .windows(window)
        .map(|w| {
            let v = sample_variance(w).expect("window is non-empty");
            (mean(w).expect("window is non-empty"), v, v.sqrt())
        })
        .collect();
    let steps: Vec<StationarityStep> = stats
        .windows(2)
        .map(|pair| {
            let (m0, v0, s0) = pair[0];
            let (m1, v1, s1) = pair[1];
            StationarityStep {
                delta_mean: m1 - m0,
                delta_variance: v1 - v0,
                delta_std_dev: s1 - s0,
                rel_mean: rel_change(m0, m1),
                rel_variance: rel_change(v0, v1),
                rel_std_dev: rel_change(s0, s1),
            }
        })
        .collect();
    let max_abs = |f: fn(&StationarityStep) -> f64| {
        steps.iter().map(|s| f(s).abs()).fold(0.0, f64::max)
    };
    let max_rel_mean = max_abs(|s| s.rel_mean);
    let max_rel_variance = max_abs(|s| s.rel_variance);
    let max_rel_std_dev = max_abs(|s| s.rel_std_dev);
    Ok(StationarityReport {
        window,
        tolerance,
        steps,
        max_rel_mean,
        max_rel_variance,
        max_rel_std_dev,
        mean_violated: max_rel_mean > tolerance,
        variance_violated: max_rel_variance > tolerance,
        std_dev_violated: max_rel_std_dev > tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variance_examples() {
        assert_eq!(sample_variance(&[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert!((sample_variance(&[1.0, 2.0, 3.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(sample_variance(&[5.0]).unwrap(), 0.0);
        assert!(sample_variance(&[]).is_err());
    }

    #[test]
    fn semivariance_examples() {
        // only the -1 deviation contributes
        assert!((semivariance(&[1.0, 2.0, 3.0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(semivariance(&[7.0, 7.0]).unwrap(), 0.0);
        // symmetric about the mean: SV = V / 2
        let xs = [-3.0, -1.0, 1.0, 3.0];
        let v = sample_variance(&xs).unwrap();
        let sv = semivariance(&xs).unwrap();
        assert!((sv - v / 2.0).abs() < 1e-15);
    }

    #[test]
    fn covariance_and_correlation_examples() {
        let xs = [1.0, 2.0, 3.0];
        let ys = [6.0, 4.0, 2.0];
        assert!((covariance(&xs, &ys).unwrap() + 4.0 / 3.0).abs() < 1e-15);
        assert!((covariance(&xs, &xs).unwrap() - sample_variance(&xs).unwrap()).abs() < 1e-15);
        assert!((correlation(&xs, &xs).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((correlation(&xs, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert!(covariance(&xs, &[1.0]).is_err());
        assert!(matches!(
            correlation(&xs, &[5.0, 5.0, 5.0]),
            Err(Error::ZeroSigma)
        ));
    }

    #[test]
    fn moment_set_counts_and_orders() {
        let m = MomentSet::from_observations(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.count, 4);
        assert!((m.mean - 2.5).abs() < 1e-15);
        assert!((m.std_dev - m.variance.sqrt()).abs() < 1e-15);
        assert!(m.semivariance <= m.variance);
        assert_eq!(m.skewness, 0.0);
    }

    #[test]
    fn ewma_init_constant_returns() {
        let p = EwmaParams::new(0.94, 1, 10).unwrap();
        let rs = vec![0.02; 10];
        let v = ewma_variance_init(&rs, &p).unwrap();
        assert!((v - 0.0004).abs() < 1e-18);
    }

    #[test]
    fn ewma_init_two_point_window() {
        // lambda = 0.5, older return 0.02, recent 0.01:
        // unnormalized weights 0.25 / 0.5, normalized 1/3 and 2/3
        let p = EwmaParams::new(0.5, 1, 2).unwrap();
        let v = ewma_variance_init(&[0.02, 0.01], &p).unwrap();
        let expected = (1.0 / 3.0) * 0.0004 + (2.0 / 3.0) * 0.0001;
        assert!((v - expected).abs() < 1e-18);
        assert!((v - 0.0002).abs() < 1e-18);
    }

    #[test]
    fn ewma_init_convexity() {
        let p = EwmaParams::new(0.7, 1, 8).unwrap();
        let mut rs = vec![0.0; 8];
        rs[3] = 0.05;
        let v = ewma_variance_init(&rs, &p).unwrap();
        assert!(v > 0.0 && v < 0.05 * 0.05);
    }

    #[test]
    fn ewma_init_weights_favor_recent_observations() {
        // a single spike contributes more the closer it sits to the as-of date
        let p = EwmaParams::new(0.8, 1, 12).unwrap();
        let mut last = -1.0;
        for position in 0..12 {
            let mut rs = vec![0.0; 12];
            rs[position] = 0.05;
            let v = ewma_variance_init(&rs, &p).unwrap();
            assert!(v > last, "weight must grow toward the as-of date");
            last = v;
        }
    }

    #[test]
    fn ewma_init_needs_full_window() {
        let p = EwmaParams::new(0.94, 1, 5).unwrap();
        assert!(matches!(
            ewma_variance_init(&[0.01; 4], &p),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn ewma_update_examples() {
        // fixed point is exact
        let c2 = 0.03_f64 * 0.03;
        assert_eq!(ewma_variance_update(c2, 0.03, 0.94).unwrap(), c2);
        // direct substitution
        let v = ewma_variance_update(0.0001, 0.02, 0.94).unwrap();
        assert!((v - 0.000118).abs() < 1e-15);
        // zero returns decay the variance geometrically
        let mut var = 0.01;
        for _ in 0..3 {
            var = ewma_variance_update(var, 0.0, 0.94).unwrap();
        }
        assert!((var - 0.01 * 0.94_f64.powi(3)).abs() < 1e-15);
        assert!(ewma_variance_update(0.1, 0.0, 1.0).is_err());
        assert!(ewma_variance_update(0.1, 0.0, 0.0).is_err());
        assert!(ewma_variance_update(-0.1, 0.0, 0.5).is_err());
    }

    #[test]
    fn annualize_examples() {
        assert_eq!(annualize(0.0, 1).unwrap(), 0.0);
        assert!((annualize(1.0 / 252.0, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!((annualize(0.0004, 1).unwrap() - 0.3174901573).abs() < 1e-9);
        assert!(annualize(-0.1, 1).is_err());
    }

    #[test]
    fn vol_track_sample_and_ewma_align() {
        use chrono::Days;
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let n = 40;
        let levels: Vec<f64> = (0..n).map(|i| 100.0 * 1.01_f64.powi(i as i32)).collect();
        let dates = (0..n).map(|i| start + Days::new(i)).collect();
        let s = LevelSeries::new(dates, levels, "geo").unwrap();

        let ewma = vol_track(&s, &VolMethod::EwmaLong(EwmaParams::new(0.94, 1, 10).unwrap()))
            .unwrap();
        // constant log return => variance pinned at r^2 everywhere
        let r2 = 1.01_f64.ln().powi(2);
        assert_eq!(ewma.first_index, 10);
        for v in &ewma.variances {
            assert!((v - r2).abs() < 1e-15);
        }
        assert_eq!(ewma.variance_at(9), None);
        assert!(ewma.vol_at(10).is_some());

        let sample = vol_track(
            &s,
            &VolMethod::Sample {
                window: 10,
                horizon: 1,
            },
        )
        .unwrap();
        assert_eq!(sample.first_index, 10);
        for v in &sample.variances {
            assert!(v.abs() < 1e-18);
        }
    }

    #[test]
    fn estimate_vol_constant_series_is_zero() {
        use chrono::Days;
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let dates = (0..30).map(|i| start + Days::new(i)).collect();
        let s = LevelSeries::new(dates, vec![100.0; 30], "flat").unwrap();
        let est = estimate_vol(
            &s,
            &VolMethod::EwmaLong(EwmaParams::new(0.94, 1, 10).unwrap()),
        )
        .unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.as_of, s.last_date().unwrap());
    }

    #[test]
    fn stationarity_constant_series_passes() {
        let report = stationarity_diagnostic(&[3.0; 40], 10, 0.1).unwrap();
        assert!(report.all_pass());
        assert!(report.steps.iter().all(|s| s.delta_mean == 0.0));
    }

    #[test]
    fn stationarity_linear_trend_fails_mean() {
        let xs: Vec<f64> = (1..=40).map(|i| i as f64).collect();
        let report = stationarity_diagnostic(&xs, 10, 0.1).unwrap();
        assert!(report.mean_violated);
    }

    #[test]
    fn stationarity_regime_switch_fails_variance() {
        // amplitude doubles mid-sample: window variance quadruples across the seam
        let mut xs = Vec::new();
        for i in 0..20 {
            xs.push(if i % 2 == 0 { 1.0 } else { -1.0 });
        }
        for i in 0..20 {
            xs.push(if i % 2 == 0 { 2.0 } else { -2.0 });
        }
        // brute-force the window stats to confirm the construction moves variance
        let early = sample_variance(&xs[0..10]).unwrap();
        let late = sample_variance(&xs[30..40]).unwrap();
        assert!((late / early - 4.0).abs() < 1e-12);

        let report = stationarity_diagnostic(&xs, 10, 0.1).unwrap();
        assert!(report.variance_violated);
        assert!(report.std_dev_violated);
    }

    #[test]
    fn stationarity_needs_two_windows() {
        assert!(matches!(
            stationarity_diagnostic(&[1.0; 19], 10, 0.1),
            Err(Error::InsufficientData { .. })
        ));
    }
}
