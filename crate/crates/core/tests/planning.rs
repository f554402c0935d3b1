use omcr_core::geometry::Point;
use omcr_core::mpa::{
    evaluate_candidate, initial_starts, nop_max, plan_all, plan_site, site_cost, PlanConfig, Site, TtdFeedback,
};
use omcr_core::reliability::FailureModel;
use omcr_core::units::months;
use proptest::prelude::*;

fn site(eta_years: f64, beta: f64, cp: f64, cr: f64) -> Site {
    Site::new(
        0,
        Point::new(0.0, 0.0),
        3.0,
        cr,
        cp,
        FailureModel::from_years(eta_years, beta).unwrap(),
    )
}

fn feedback() -> impl Strategy<Value = TtdFeedback> {
    prop_oneof![
        Just(TtdFeedback::Zero),
        (0.0f64..500.0).prop_map(TtdFeedback::Broadcast),
        (0.0f64..3.0).prop_map(TtdFeedback::Scaled),
    ]
}

fn cfg() -> PlanConfig {
    PlanConfig {
        nop_cap: 40,
        ..PlanConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn chosen_nop_is_the_exhaustive_minimum(
        eta in 0.5f64..2.0, beta in 1.0f64..4.0, cp in 0.0f64..2000.0, cr in 1e3f64..2e5,
        tau in 1.0f64..24.0, fb in feedback(),
    ) {
        let s = site(eta, beta, cp, cr);
        let h = months(tau);
        let cfg = cfg();
        let plan = plan_site(&s, h, &fb, &cfg).unwrap();
        let costs: Vec<f64> = (1..=nop_max(&s, h, cfg.nop_cap))
            .map(|k| evaluate_candidate(&s, h, k, &fb, &cfg).unwrap().0)
            .collect();
        let mut best = 0;
        for (i, &c) in costs.iter().enumerate() {
            if c < costs[best] {
                best = i;
            }
        }
        prop_assert_eq!(plan.nop, best + 1);
        let here = costs[plan.nop - 1];
        if plan.nop > 1 {
            prop_assert!(here <= costs[plan.nop - 2]);
        }
        if plan.nop < costs.len() {
            prop_assert!(here <= costs[plan.nop]);
        }
    }

    #[test]
    fn refinement_never_worse_than_equal_spacing(
        eta in 0.5f64..2.0, beta in 1.0f64..4.0, cp in 0.0f64..2000.0,
        tau in 1.0f64..24.0, nop in 1usize..12, fb in feedback(),
    ) {
        let s = site(eta, beta, cp, 1e5);
        let h = months(tau);
        let equal = site_cost(&s, h, &initial_starts(&s, h, nop), &fb).unwrap();
        let (refined, _) = evaluate_candidate(&s, h, nop, &fb, &cfg()).unwrap();
        prop_assert!(refined <= equal);
    }

    #[test]
    fn windows_are_disjoint_and_inside_the_horizon(
        eta in 0.3f64..2.0, beta in 1.0f64..4.0, cp in 0.0f64..5000.0, cr in 1e2f64..2e5,
        tau in 1.0f64..24.0, fraction in 0.0f64..0.5, fb in feedback(),
    ) {
        let s = site(eta, beta, cp, cr);
        let h = months(tau);
        let cfg = PlanConfig { window_fraction: fraction, ..cfg() };
        let plan = plan_site(&s, h, &fb, &cfg).unwrap();
        for (w, &t) in plan.windows.iter().zip(&plan.starts) {
            prop_assert!(0.0 <= w.early && w.early <= t && t <= w.late && w.late <= h);
        }
        for pair in plan.windows.windows(2) {
            prop_assert!(pair[0].late <= pair[1].early);
        }
    }

    #[test]
    fn plans_are_deterministic_and_follow_site_order(
        params in prop::collection::vec((0.5f64..2.0, 1.0f64..4.0, 0.0f64..1000.0), 1..6),
        tau in 1.0f64..24.0, rotate in 0usize..6,
    ) {
        let sites: Vec<Site> = params.iter().map(|&(e, b, cp)| site(e, b, cp, 1e5)).collect();
        let fbs: Vec<TtdFeedback> = params.iter().map(|&(_, _, cp)| TtdFeedback::Broadcast(cp / 10.0)).collect();
        let h = months(tau);
        let a = plan_all(&sites, h, &fbs, &cfg()).unwrap();
        let b = plan_all(&sites, h, &fbs, &cfg()).unwrap();
        prop_assert_eq!(&a, &b);
        let r = rotate % sites.len();
        let mut rs = sites.clone();
        rs.rotate_left(r);
        let mut rf = fbs.clone();
        rf.rotate_left(r);
        let rotated = plan_all(&rs, h, &rf, &cfg()).unwrap();
        let mut expected = a.site_plans.clone();
        expected.rotate_left(r);
        prop_assert_eq!(rotated.site_plans, expected);
    }
}
