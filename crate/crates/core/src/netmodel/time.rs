use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Representative-period time grid of the single representative year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeIndex {
    /// Step length Δτ (s).
    pub step_seconds: f64,
    pub steps: usize,
    /// Multiplier from the representative weeks to a full year.
    pub year_scale: f64,
    pub discount_rate: f64,
    pub life_years: f64,
}

/// Inputs to [`build_time_index`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeConfig {
    pub step_hours: f64,
    /// Number of representative weeks; fractional values express whole days (e.g. 4/7).
    pub weeks: f64,
    pub discount_rate: f64,
    pub life_years: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            step_hours: 0.5,
            weeks: 4.0,
            discount_rate: 0.06,
            life_years: 20.0,
        }
    }
}

impl TimeConfig {
    pub fn with_steps(step_hours: f64, weeks: f64) -> Self {
        Self {
            step_hours,
            weeks,
            ..Self::default()
        }
    }
}

/// Builds the time grid: `(24/Δt)·7·weeks` steps, year scale `365.25/(7·weeks)`.
pub fn build_time_index(config: &TimeConfig) -> Result<TimeIndex> {
    if !(config.weeks > 0.0) {
        return Err(Error::InvalidInput(format!(
            "week count must be positive, got {}",
            config.weeks
        )));
    }
    if !(config.step_hours > 0.0) {
        return Err(Error::InvalidInput(format!(
            "step length must be positive, got {} h",
            config.step_hours
        )));
    }
    let per_day = 24.0 / config.step_hours;
    if (per_day - per_day.round()).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "step length {} h does not divide a day",
            config.step_hours
        )));
    }
    let days = 7.0 * config.weeks;
    if (days - days.round()).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "{} weeks is not a whole number of days",
            config.weeks
        )));
    }
    if !(config.discount_rate > 0.0 && config.discount_rate < 1.0) {
        return Err(Error::InvalidInput(format!(
            "discount rate must lie in (0, 1), got {}",
            config.discount_rate
        )));
    }
    let steps = (per_day.round() * days.round()) as usize;
    Ok(TimeIndex {
        step_seconds: config.step_hours * 3600.0,
        steps,
        year_scale: 365.25 / days,
        discount_rate: config.discount_rate,
        life_years: config.life_years,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_half_hourly_weeks() {
        let t = build_time_index(&TimeConfig::with_steps(0.5, 4.0)).unwrap();
        assert_eq!(t.steps, 1344);
        assert!((t.year_scale - 365.25 / 28.0).abs() < 1e-12);
        assert!((t.year_scale - 13.04).abs() < 5e-3);
        assert_eq!(t.step_seconds, 1800.0);
    }

    #[test]
    fn one_week_two_hour_steps() {
        let t = build_time_index(&TimeConfig::with_steps(2.0, 1.0)).unwrap();
        assert_eq!(t.steps, 84);
        assert!((t.year_scale - 52.18).abs() < 5e-3);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(build_time_index(&TimeConfig::with_steps(0.5, 0.0)).is_err());
        assert!(build_time_index(&TimeConfig::with_steps(0.5, -1.0)).is_err());
        assert!(build_time_index(&TimeConfig::with_steps(5.0, 1.0)).is_err());
    }

    #[test]
    fn fractional_weeks_as_days() {
        let t = build_time_index(&TimeConfig::with_steps(2.0, 4.0 / 7.0)).unwrap();
        assert_eq!(t.steps, 48);
    }
}
