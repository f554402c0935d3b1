//! Canonical units: hours, dollars, kilometres.
//!
//! A year is 366 days and a month 30.5 days, so that "2 months" is 61 days
//! and "2 years" is 732 days.

pub const HOURS_PER_DAY: f64 = 24.0;
pub const DAYS_PER_YEAR: f64 = 366.0;
pub const DAYS_PER_MONTH: f64 = 30.5;
pub const HOURS_PER_YEAR: f64 = DAYS_PER_YEAR * HOURS_PER_DAY;
pub const HOURS_PER_MONTH: f64 = DAYS_PER_MONTH * HOURS_PER_DAY;

pub fn years(v: f64) -> f64 {
    v * HOURS_PER_YEAR
}

pub fn months(v: f64) -> f64 {
    v * HOURS_PER_MONTH
}

pub fn days(v: f64) -> f64 {
    v * HOURS_PER_DAY
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions() {
        assert_eq!(months(2.0), days(61.0));
        assert_eq!(years(2.0), days(732.0));
        assert_eq!(years(1.0), 8784.0);
    }
}
