//! Seedable synthetic price scenarios.
//!
//! Paths are geometric Brownian motion with an optional one-time volatility
//! regime switch, sampled on consecutive weekdays so that calendar-day gaps
//! (1 within a week, 3 over weekends) flow into accrual terms.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::moments::TRADING_DAYS;
use crate::series::LevelSeries;

/// Anchor for generated calendars (a Monday).
pub const CALENDAR_START: &str = "2020-01-06";

/// Consecutive weekdays starting at [`CALENDAR_START`].
pub fn weekday_calendar(len: usize) -> Vec<NaiveDate> {
    let start = NaiveDate::parse_from_str(CALENDAR_START, "%Y-%m-%d").unwrap();
    let mut dates = Vec::with_capacity(len);
    let mut d = start;
    while dates.len() < len {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            dates.push(d);
        }
        d = d + Days::new(1);
    }
    dates
}

/// Geometric Brownian motion with a volatility switch at `switch_at` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeSwitchGbm {
    pub initial_level: f64,
    /// Annualized drift.
    pub drift: f64,
    /// Annualized volatility before the switch.
    pub sigma_first: f64,
    /// Annualized volatility from `switch_at` onward.
    pub sigma_second: f64,
    /// Step index at which the second regime begins.
    pub switch_at: usize,
    /// Number of observations generated (steps + 1 initial level).
    pub observations: usize,
}

impl RegimeSwitchGbm {
    /// Single-regime path.
    pub fn flat_vol(initial_level: f64, drift: f64, sigma: f64, observations: usize) -> Self {
        Self {
            initial_level,
            drift,
            sigma_first: sigma,
            sigma_second: sigma,
            switch_at: observations,
            observations,
        }
    }

    /// Generate a path from a seed. The same seed always yields the same path.
    pub fn generate(&self, seed: u64, label: impl Into<String>) -> Result<LevelSeries> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let dt = 1.0 / TRADING_DAYS;
        let mut levels = Vec::with_capacity(self.observations);
        let mut level = self.initial_level;
        levels.push(level);
        for step in 1..self.observations {
            let sigma = if step <= self.switch_at {
                self.sigma_first
            } else {
                self.sigma_second
            };
            let z: f64 = StandardNormal.sample(&mut rng);
            level *= ((self.drift - 0.5 * sigma * sigma) * dt + sigma * dt.sqrt() * z).exp();
            levels.push(level);
        }
        LevelSeries::new(weekday_calendar(self.observations), levels, label)
    }
}

/// Derive an independent per-path seed from a master seed.
///
/// Used by Monte Carlo runners so results do not depend on scheduling.
pub fn path_seed(master_seed: u64, path_index: u64) -> u64 {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed ^ path_index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.gen()
}
