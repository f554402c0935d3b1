use omcr_core::numeric::adaptive_simpson;
use omcr_core::reliability::{
    availability_of, expected_downtime, expected_downtime_closed_form, site_availability, DowntimeEstimate,
    FailureModel, Lifetime,
};
use omcr_core::units::years;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Uniform(f64);

impl Lifetime for Uniform {
    fn cdf_at(&self, t: f64) -> f64 {
        (t / self.0).clamp(0.0, 1.0)
    }
    fn pdf_at(&self, t: f64) -> f64 {
        if (0.0..=self.0).contains(&t) {
            1.0 / self.0
        } else {
            0.0
        }
    }
}

#[test]
fn uniform_lifetime_waits_half_the_interval() {
    for l in [1.0, 37.5, 8784.0] {
        let est = expected_downtime(0.0, l, &Uniform(l)).unwrap();
        assert!((est.ttd - l / 2.0).abs() < 1e-9 * l);
        assert!((est.failure_prob - 1.0).abs() < 1e-15);
    }
}

/// Mean downtime by sampling the failure instant conditioned on the
/// interval, through the inverse Weibull CDF.
fn monte_carlo_ttd(eta: f64, beta: f64, a: f64, b: f64, samples: usize, seed: u64) -> f64 {
    let cdf = |t: f64| 1.0 - (-(t / eta).powf(beta)).exp();
    let (fa, fb) = (cdf(a), cdf(b));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    for _ in 0..samples {
        let u = fa + (fb - fa) * rng.random::<f64>();
        let t = eta * (-(1.0 - u).ln()).powf(1.0 / beta);
        sum += b - t;
    }
    sum / samples as f64
}

#[test]
fn monte_carlo_agrees_within_one_percent() {
    let cases = [
        (1.0, 2.0, 0.0, 0.5),
        (1.0, 3.0, 0.0, 2.0),
        (1.0, 2.0, 0.25, 1.0),
        (2.0, 1.5, 0.0, 0.1),
    ];
    for (i, &(eta_y, beta, a_y, b_y)) in cases.iter().enumerate() {
        let model = FailureModel::from_years(eta_y, beta).unwrap();
        let (a, b) = (years(a_y), years(b_y));
        let est = expected_downtime(a, b, &model).unwrap();
        let mc = monte_carlo_ttd(model.eta(), beta, a, b, 1_000_000, i as u64);
        assert!((est.ttd - mc).abs() <= 0.01 * mc, "case {i}: {} vs {mc}", est.ttd);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cdf_is_monotone(eta in 0.2f64..3.0, beta in 1.0f64..5.0, t1 in 0.0f64..3.0, dt in 0.0f64..3.0) {
        let m = FailureModel::from_years(eta, beta).unwrap();
        prop_assert!(m.cdf(years(t1)).unwrap() <= m.cdf(years(t1 + dt)).unwrap());
    }

    #[test]
    fn density_integrates_to_the_cdf(eta in 0.5f64..2.0, beta in 1.0f64..4.0, t in 0.01f64..2.0) {
        let m = FailureModel::from_years(eta, beta).unwrap();
        let s = m.eta();
        let q = adaptive_simpson(|u| s * m.pdf(s * u).unwrap(), 0.0, years(t) / s, 1e-11);
        prop_assert!((q.value - m.cdf(years(t)).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn quadrature_matches_closed_form(eta in 0.5f64..2.0, beta in 1.0f64..4.0, a in 0.0f64..1.5, len in 0.01f64..2.0) {
        let m = FailureModel::from_years(eta, beta).unwrap();
        let (a, b) = (years(a), years(a + len));
        let q = expected_downtime(a, b, &m).unwrap();
        let c = expected_downtime_closed_form(a, b, &m).unwrap();
        prop_assert!((q.failure_prob - c.failure_prob).abs() < 1e-12);
        prop_assert!((q.ttd - c.ttd).abs() < 1e-6 * (b - a), "{} vs {}", q.ttd, c.ttd);
    }

    #[test]
    fn ttd_stays_inside_the_interval(eta in 0.1f64..3.0, beta in 1.0f64..6.0, a in 0.0f64..2.0, len in 1e-4f64..2.0) {
        let m = FailureModel::from_years(eta, beta).unwrap();
        let (a, b) = (years(a), years(a + len));
        let e = expected_downtime(a, b, &m).unwrap();
        prop_assert!(e.ttd >= 0.0 && e.ttd <= b - a);
        prop_assert!((0.0..=1.0).contains(&e.failure_prob));
    }

    #[test]
    fn longer_interval_never_lowers_failure_probability(eta in 0.2f64..3.0, beta in 1.0f64..5.0, a in 0.0f64..1.0, len in 0.01f64..1.0, extra in 0.0f64..1.0) {
        let m = FailureModel::from_years(eta, beta).unwrap();
        let (a, b) = (years(a), years(a + len));
        let short = expected_downtime(a, b, &m).unwrap();
        let long = expected_downtime(a, b + years(extra), &m).unwrap();
        prop_assert!(long.failure_prob >= short.failure_prob);
    }

    #[test]
    fn availability_is_a_fraction(ttds in prop::collection::vec((0.0f64..1e5, 0.0f64..1.0), 0..20), horizon in 1.0f64..2e4) {
        let est: Vec<DowntimeEstimate> = ttds.iter().map(|&(ttd, failure_prob)| DowntimeEstimate { ttd, failure_prob }).collect();
        let a = availability_of(&est, horizon).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        let (t, p): (Vec<f64>, Vec<f64>) = ttds.iter().copied().unzip();
        prop_assert_eq!(site_availability(&t, &p, horizon).unwrap(), a);
    }
}
