//! Time and rate units.
//!
//! Internally time is measured in years (`t = 1970 + days_since_epoch / 365.25`)
//! and every rate is per year. Conversions happen once, when parameters are
//! bound to a model.

use chrono::NaiveDate;

use crate::error::{Error, Result};

pub const DAYS_PER_YEAR: f64 = 365.25;
/// One week in years.
pub const WEEK: f64 = 7.0 / DAYS_PER_YEAR;
/// One day in years.
pub const DAY: f64 = 1.0 / DAYS_PER_YEAR;
/// Default Euler step: one day.
pub const DEFAULT_EULER_STEP: f64 = 1.0 / 365.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateUnit {
    PerDay,
    PerWeek,
    PerYear,
}

impl RateUnit {
    fn years(self) -> f64 {
        match self {
            RateUnit::PerDay => DAY,
            RateUnit::PerWeek => WEEK,
            RateUnit::PerYear => 1.0,
        }
    }

    pub fn to_per_year(self, rate: f64) -> f64 {
        rate / self.years()
    }

    pub fn from_per_year(self, rate: f64) -> f64 {
        rate * self.years()
    }
}

/// Gamma-noise intensity given in `wk^{1/2}` expressed in `yr^{1/2}`.
pub fn sigma_week_to_year(sigma_wk: f64) -> f64 {
    sigma_wk * WEEK.sqrt()
}

pub fn date_to_time(date: NaiveDate) -> f64 {
    let epoch = NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid epoch");
    1970.0 + (date - epoch).num_days() as f64 / DAYS_PER_YEAR
}

/// Nearest calendar date to time `t`.
pub fn time_to_date(t: f64) -> NaiveDate {
    let epoch = NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid epoch");
    let days = ((t - 1970.0) * DAYS_PER_YEAR).round() as i64;
    epoch + chrono::Duration::days(days)
}

pub fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|e| Error::Data(format!("bad date `{s}`: {e}")))
}

pub fn ymd(y: i32, m: u32, d: u32) -> f64 {
    date_to_time(NaiveDate::from_ymd_opt(y, m, d).expect("valid date"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_round_trip() {
        for unit in [RateUnit::PerDay, RateUnit::PerWeek, RateUnit::PerYear] {
            for v in [0.0, 1e-7, 0.5, 3.0, 1e4] {
                let back = unit.from_per_year(unit.to_per_year(v));
                assert!((back - v).abs() <= 1e-12 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn conversion_table() {
        // two-day infectious period
        assert!((RateUnit::PerDay.to_per_year(1.0 / 2.0) - 182.625).abs() < 1e-9);
        assert!((RateUnit::PerWeek.to_per_year(1.0) - 365.25 / 7.0).abs() < 1e-9);
        assert_eq!(RateUnit::PerYear.to_per_year(0.125), 0.125);
    }

    #[test]
    fn weekly_dates_are_evenly_spaced() {
        let a = parse_date("2016-02-27").unwrap();
        let b = parse_date("2016-03-05").unwrap();
        assert!((date_to_time(b) - date_to_time(a) - WEEK).abs() < 1e-12);
        assert_eq!(time_to_date(date_to_time(b)), b);
    }
}
