use omcr_core::design::{barycentre_location, near_site_candidates, optimize_design, VehicleSpec};
use omcr_core::geometry::Point;
use omcr_core::mpa::Site;
use omcr_core::omcr::{run_omcr, OmcrConfig};
use omcr_core::reliability::{availability_of, FailureModel};
use omcr_core::units::months;
use proptest::prelude::*;

fn sites_strategy(max: usize) -> impl Strategy<Value = Vec<Site>> {
    prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0, 0.5f64..2.0, 1.0f64..3.5), 1..max).prop_map(|raw| {
        raw.iter()
            .enumerate()
            .map(|(i, &(x, y, eta, beta))| {
                Site::new(
                    i,
                    Point::new(x, y),
                    3.0,
                    1e5,
                    100.0,
                    FailureModel::from_years(eta, beta).unwrap(),
                )
            })
            .collect()
    })
}

fn with_cp(sites: &[Site], cp: f64) -> Vec<Site> {
    sites.iter().map(|s| Site { cp, ..s.clone() }).collect()
}

fn vehicle() -> VehicleSpec {
    VehicleSpec::new(4, 2.0, 30.0, 80.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn barycentre_translates_with_the_sites(sites in sites_strategy(12), dx in -100.0f64..100.0, dy in -100.0f64..100.0, tau in 0.5f64..24.0) {
        let h = months(tau);
        let moved: Vec<Site> = sites.iter().map(|s| Site { position: s.position.translate(dx, dy), ..s.clone() }).collect();
        let a = barycentre_location(&sites, h).unwrap().point;
        let b = barycentre_location(&moved, h).unwrap().point;
        prop_assert!((b.x - a.x - dx).abs() < 1e-9 && (b.y - a.y - dy).abs() < 1e-9);
    }

    #[test]
    fn barycentre_lies_in_the_hull(sites in sites_strategy(12), tau in 0.5f64..24.0) {
        let p = barycentre_location(&sites, months(tau)).unwrap().point;
        for k in 0..32 {
            let th = k as f64 * std::f64::consts::PI / 16.0;
            let proj = |q: &Point| q.x * th.cos() + q.y * th.sin();
            let hi = sites.iter().map(|s| proj(&s.position)).fold(f64::NEG_INFINITY, f64::max);
            let lo = sites.iter().map(|s| proj(&s.position)).fold(f64::INFINITY, f64::min);
            prop_assert!(proj(&p) <= hi + 1e-9 && proj(&p) >= lo - 1e-9);
        }
    }

    #[test]
    fn design_choice_is_the_table_minimum(sites in sites_strategy(5), tau in 1.0f64..12.0, near in any::<bool>()) {
        let h = months(tau);
        let candidates = if near {
            near_site_candidates(&sites)
        } else {
            vec![barycentre_location(&sites, h).unwrap().point]
        };
        let d = optimize_design(&sites, &[2, 4, 8], &candidates, h, &vehicle(), &OmcrConfig::default()).unwrap();
        prop_assert_eq!(d.per_candidate.len(), 3 * candidates.len());
        for c in &d.per_candidate {
            if let Ok(costs) = &c.outcome {
                prop_assert!(d.costs.total <= costs.total);
            }
        }
    }

    #[test]
    fn loop_returns_its_best_iterate(sites in sites_strategy(6), tau in 1.0f64..18.0, cp in 0.0f64..1000.0) {
        let h = months(tau);
        let sites = with_cp(&sites, cp);
        let depot = barycentre_location(&sites, h).unwrap().point;
        let r = run_omcr(&sites, depot, &vehicle(), h, &OmcrConfig::default()).unwrap();
        for &c in &r.cost_trace {
            prop_assert!(r.costs.total <= c);
        }
        prop_assert_eq!(r.costs.total, r.costs.transport + r.costs.operations + r.costs.downtime);
        for (row, &a) in r.ttds.iter().zip(&r.availability) {
            prop_assert!((availability_of(row, h).unwrap() - a).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_penalty_has_no_downtime_cost(sites in sites_strategy(6), tau in 1.0f64..18.0) {
        let h = months(tau);
        let sites = with_cp(&sites, 0.0);
        let depot = barycentre_location(&sites, h).unwrap().point;
        let r = run_omcr(&sites, depot, &vehicle(), h, &OmcrConfig::default()).unwrap();
        prop_assert_eq!(r.costs.downtime, 0.0);
        for w in r.cost_trace.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
    }
}

#[test]
fn barycentre_candidate_set_has_one_point_for_any_site_count() {
    for n in [1, 5, 40] {
        let sites: Vec<Site> = (0..n)
            .map(|i| {
                Site::new(
                    i,
                    Point::new(i as f64, (i * i) as f64 % 7.0),
                    3.0,
                    1e5,
                    100.0,
                    FailureModel::from_years(1.0, 2.0 + (i % 2) as f64).unwrap(),
                )
            })
            .collect();
        let b = barycentre_location(&sites, months(6.0)).unwrap();
        assert!(!b.unweighted_fallback);
        assert_eq!(near_site_candidates(&sites).len(), n);
    }
}
