//! Weibull failure model, expected downtime within an inter-operation
//! interval, and site availability.

use core::fmt;

use crate::numeric::{adaptive_simpson, regularized_gamma_p};
use crate::units::HOURS_PER_YEAR;

/// Interval failure probabilities below this are treated as zero mass.
pub const DEGENERATE_FAILURE_PROB: f64 = 1e-12;

/// Absolute tolerance on the conditional failure instant, in scale-normalized
/// time. The quadrature of `t f(t)` runs at this tolerance times the interval
/// failure probability.
pub const QUADRATURE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReliabilityError {
    InvalidScale(f64),
    /// Shapes below 1 put a singularity in the density at zero.
    InvalidShape(f64),
    NegativeTime(f64),
    EmptyInterval {
        prev: f64,
        next: f64,
    },
    InvalidHorizon(f64),
}

impl fmt::Display for ReliabilityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReliabilityError::InvalidScale(v) => write!(f, "Weibull scale must be > 0, got {v}"),
            ReliabilityError::InvalidShape(v) => write!(f, "Weibull shape must be >= 1, got {v}"),
            ReliabilityError::NegativeTime(t) => write!(f, "time must be >= 0, got {t}"),
            ReliabilityError::EmptyInterval { prev, next } => {
                write!(f, "interval requires 0 <= prev < next, got [{prev}, {next}]")
            }
            ReliabilityError::InvalidHorizon(h) => write!(f, "horizon must be > 0, got {h}"),
        }
    }
}

impl core::error::Error for ReliabilityError {}

/// Two-parameter Weibull time-to-failure law. `eta` is stored in hours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FailureModel {
    eta: f64,
    beta: f64,
}

impl FailureModel {
    pub fn new(eta_hours: f64, beta: f64) -> Result<Self, ReliabilityError> {
        if !(eta_hours.is_finite() && eta_hours > 0.0) {
            return Err(ReliabilityError::InvalidScale(eta_hours));
        }
        if !(beta.is_finite() && beta >= 1.0) {
            return Err(ReliabilityError::InvalidShape(beta));
        }
        Ok(Self { eta: eta_hours, beta })
    }

    pub fn from_years(eta_years: f64, beta: f64) -> Result<Self, ReliabilityError> {
        Self::new(eta_years * HOURS_PER_YEAR, beta)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn check_time(t: f64) -> Result<(), ReliabilityError> {
        if t >= 0.0 {
            Ok(())
        } else {
            Err(ReliabilityError::NegativeTime(t))
        }
    }

    /// `(t / eta)^beta`
    fn hazard_integral(&self, t: f64) -> f64 {
        libm::pow(t / self.eta, self.beta)
    }

    pub fn cdf(&self, t: f64) -> Result<f64, ReliabilityError> {
        Self::check_time(t)?;
        Ok(-libm::expm1(-self.hazard_integral(t)))
    }

    pub fn survival(&self, t: f64) -> Result<f64, ReliabilityError> {
        Self::check_time(t)?;
        Ok(libm::exp(-self.hazard_integral(t)))
    }

    pub fn pdf(&self, t: f64) -> Result<f64, ReliabilityError> {
        Self::check_time(t)?;
        Ok(self.pdf_unchecked(t))
    }

    fn pdf_unchecked(&self, t: f64) -> f64 {
        let u = t / self.eta;
        self.beta / self.eta * libm::pow(u, self.beta - 1.0) * libm::exp(-libm::pow(u, self.beta))
    }

    /// `P(a < T <= b)`, computed as `S(a) (1 - exp(-(H(b) - H(a))))` to avoid
    /// cancellation when both CDF values are close to one.
    pub fn interval_probability(&self, a: f64, b: f64) -> Result<f64, ReliabilityError> {
        Self::check_time(a)?;
        Self::check_time(b)?;
        if b <= a {
            return Ok(0.0);
        }
        Ok(self.interval_probability_at(a, b))
    }

    /// `E[T; a < T <= b]` through the incomplete gamma function.
    pub fn partial_expectation(&self, a: f64, b: f64) -> Result<f64, ReliabilityError> {
        Self::check_time(a)?;
        Self::check_time(b)?;
        if b <= a {
            return Ok(0.0);
        }
        let s = 1.0 + 1.0 / self.beta;
        let scale = self.eta * libm::tgamma(s);
        Ok(scale * (regularized_gamma_p(s, self.hazard_integral(b)) - regularized_gamma_p(s, self.hazard_integral(a))))
    }
}

/// A time-to-failure law on `t >= 0`. [`FailureModel`] is the production
/// implementation; tests fabricate others.
pub trait Lifetime {
    fn cdf_at(&self, t: f64) -> f64;
    fn pdf_at(&self, t: f64) -> f64;

    fn interval_probability_at(&self, a: f64, b: f64) -> f64 {
        self.cdf_at(b) - self.cdf_at(a)
    }

    /// Characteristic time used to normalize quadrature (hours).
    fn time_scale(&self) -> f64 {
        1.0
    }
}

impl Lifetime for FailureModel {
    fn cdf_at(&self, t: f64) -> f64 {
        -libm::expm1(-self.hazard_integral(t))
    }

    fn pdf_at(&self, t: f64) -> f64 {
        self.pdf_unchecked(t)
    }

    fn interval_probability_at(&self, a: f64, b: f64) -> f64 {
        let ha = self.hazard_integral(a);
        let hb = self.hazard_integral(b);
        libm::exp(-ha) * -libm::expm1(-(hb - ha))
    }

    fn time_scale(&self) -> f64 {
        self.eta
    }
}

/// Expected downtime within one inter-operation interval.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DowntimeEstimate {
    /// Expected time the site sits failed before the closing operation, hours.
    pub ttd: f64,
    /// Probability that the equipment fails inside the interval.
    pub failure_prob: f64,
}

impl DowntimeEstimate {
    pub const ZERO: DowntimeEstimate = DowntimeEstimate {
        ttd: 0.0,
        failure_prob: 0.0,
    };

    /// `failure_prob * ttd`, the unconditional expected downtime.
    pub fn weighted(&self) -> f64 {
        self.failure_prob * self.ttd
    }
}

fn check_interval(prev_start: f64, next_start: f64) -> Result<(), ReliabilityError> {
    if prev_start >= 0.0 && next_start > prev_start && next_start.is_finite() {
        Ok(())
    } else {
        Err(ReliabilityError::EmptyInterval {
            prev: prev_start,
            next: next_start,
        })
    }
}

/// Expected downtime when the equipment may fail in `(prev_start, next_start]`
/// and stays down until the operation at `next_start`.
///
/// `ttd = next_start - E[T | prev_start < T <= next_start]`; the conditional
/// mean comes from adaptive Simpson quadrature of `t f(t)` on the
/// scale-normalized time axis.
pub fn expected_downtime<L: Lifetime + ?Sized>(
    prev_start: f64,
    next_start: f64,
    model: &L,
) -> Result<DowntimeEstimate, ReliabilityError> {
    check_interval(prev_start, next_start)?;
    let failure_prob = model.interval_probability_at(prev_start, next_start);
    if !(failure_prob >= DEGENERATE_FAILURE_PROB) {
        return Ok(DowntimeEstimate::ZERO);
    }
    // t = scale * u; the normalized density scale * f(scale * u) is O(1).
    let scale = model.time_scale();
    let integrand = |u: f64| u * scale * model.pdf_at(scale * u);
    let tol = QUADRATURE_TOL * failure_prob;
    let q = adaptive_simpson(integrand, prev_start / scale, next_start / scale, tol);
    let conditional_mean = scale * q.value / failure_prob;
    Ok(finish(prev_start, next_start, conditional_mean, failure_prob))
}

/// Same quantity as [`expected_downtime`], through the closed-form partial
/// expectation of the Weibull law.
pub fn expected_downtime_closed_form(
    prev_start: f64,
    next_start: f64,
    model: &FailureModel,
) -> Result<DowntimeEstimate, ReliabilityError> {
    check_interval(prev_start, next_start)?;
    let failure_prob = model.interval_probability(prev_start, next_start)?;
    if failure_prob < DEGENERATE_FAILURE_PROB {
        return Ok(DowntimeEstimate::ZERO);
    }
    let conditional_mean = model.partial_expectation(prev_start, next_start)? / failure_prob;
    Ok(finish(prev_start, next_start, conditional_mean, failure_prob))
}

fn finish(prev: f64, next: f64, conditional_mean: f64, failure_prob: f64) -> DowntimeEstimate {
    let ttd = (next - conditional_mean).clamp(0.0, next - prev);
    DowntimeEstimate {
        ttd,
        failure_prob: failure_prob.clamp(0.0, 1.0),
    }
}

/// Fraction of the horizon the site is expected to be operating:
/// `(horizon - sum(ttd * prob)) / horizon`, clamped to `[0, 1]`.
pub fn site_availability(ttds: &[f64], probs: &[f64], horizon: f64) -> Result<f64, ReliabilityError> {
    if !(horizon > 0.0) {
        return Err(ReliabilityError::InvalidHorizon(horizon));
    }
    let lost: f64 = ttds.iter().zip(probs).map(|(t, p)| t * p).sum();
    Ok(((horizon - lost) / horizon).clamp(0.0, 1.0))
}

/// [`site_availability`] over a slice of estimates.
pub fn availability_of(estimates: &[DowntimeEstimate], horizon: f64) -> Result<f64, ReliabilityError> {
    if !(horizon > 0.0) {
        return Err(ReliabilityError::InvalidHorizon(horizon));
    }
    let lost: f64 = estimates.iter().map(DowntimeEstimate::weighted).sum();
    Ok(((horizon - lost) / horizon).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::years;

    fn model(eta_years: f64, beta: f64) -> FailureModel {
        FailureModel::from_years(eta_years, beta).unwrap()
    }

    #[test]
    fn construction_guards() {
        assert!(matches!(
            FailureModel::new(0.0, 2.0),
            Err(ReliabilityError::InvalidScale(_))
        ));
        assert!(matches!(
            FailureModel::new(-1.0, 2.0),
            Err(ReliabilityError::InvalidScale(_))
        ));
        assert!(matches!(
            FailureModel::new(1.0, 0.5),
            Err(ReliabilityError::InvalidShape(_))
        ));
        assert!(matches!(
            FailureModel::new(1.0, f64::NAN),
            Err(ReliabilityError::InvalidShape(_))
        ));
        assert!(FailureModel::new(1.0, 1.0).is_ok());
    }

    #[test]
    fn cdf_values() {
        let m = model(1.0, 2.0);
        assert_eq!(m.cdf(0.0).unwrap(), 0.0);
        let e1 = 1.0 - (-1.0f64).exp();
        for beta in [1.0, 2.0, 3.0, 4.5] {
            let m = model(1.0, beta);
            assert!((m.cdf(m.eta()).unwrap() - e1).abs() < 1e-15);
            assert!((m.cdf(m.eta()).unwrap() - 0.63212).abs() < 1e-5);
        }
        let t = 2.0 * m.eta();
        assert!((m.cdf(t).unwrap() - (1.0 - (-4.0f64).exp())).abs() < 1e-15);
        assert!((m.cdf(t).unwrap() - 0.98168).abs() < 1e-5);
        assert!(matches!(m.cdf(-1.0), Err(ReliabilityError::NegativeTime(_))));
    }

    #[test]
    fn pdf_values() {
        let m = model(1.0, 2.0);
        assert_eq!(m.pdf(0.0).unwrap(), 0.0);
        let e = FailureModel::new(10.0, 1.0).unwrap();
        assert!((e.pdf(10.0).unwrap() - (-1.0f64).exp() / 10.0).abs() < 1e-16);
        assert!(m.pdf(-0.5).is_err());
    }

    #[test]
    fn interval_probability_matches_cdf_difference() {
        let m = model(1.0, 3.0);
        let (a, b) = (years(0.2), years(0.9));
        let want = m.cdf(b).unwrap() - m.cdf(a).unwrap();
        assert!((m.interval_probability(a, b).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn degenerate_interval_is_zero() {
        let m = model(1.0, 3.0);
        let d = expected_downtime(0.0, 1e-3, &m).unwrap();
        assert_eq!(d, DowntimeEstimate::ZERO);
        // Far tail: no mass left.
        let d = expected_downtime(years(20.0), years(20.0) + 5.0, &m).unwrap();
        assert_eq!(d, DowntimeEstimate::ZERO);
    }

    #[test]
    fn downtime_routes_agree() {
        for beta in [1.0, 2.0, 2.7, 3.0] {
            let m = model(1.0, beta);
            for (a, b) in [(0.0, 0.1), (0.0, 0.5), (0.3, 1.1), (0.0, 2.0), (1.5, 2.0)] {
                let q = expected_downtime(years(a), years(b), &m).unwrap();
                let c = expected_downtime_closed_form(years(a), years(b), &m).unwrap();
                assert!((q.failure_prob - c.failure_prob).abs() < 1e-15);
                assert!((q.ttd - c.ttd).abs() < 1e-4, "beta={beta} [{a},{b}] {q:?} {c:?}");
            }
        }
    }

    #[test]
    fn interval_errors() {
        let m = model(1.0, 2.0);
        assert!(expected_downtime(5.0, 5.0, &m).is_err());
        assert!(expected_downtime(-1.0, 5.0, &m).is_err());
        assert!(expected_downtime(6.0, 5.0, &m).is_err());
    }

    #[test]
    fn availability_examples() {
        assert_eq!(site_availability(&[0.0, 0.0], &[0.3, 0.9], 100.0).unwrap(), 1.0);
        assert_eq!(site_availability(&[1000.0], &[1.0], 1000.0).unwrap(), 0.0);
        let a = site_availability(&[100.0], &[0.5], 1000.0).unwrap();
        assert!((a - 0.95).abs() < 1e-15);
        assert!(site_availability(&[1.0], &[1.0], 0.0).is_err());
    }
}
