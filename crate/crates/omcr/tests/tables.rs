use omcr::expkit::{capacity_study, depot_study, Metric, ScenarioConfig};
use omcr::tabular::{read_routing, write_routing};
use omcr_core::lhsa::solve_long_term;
use omcr_core::mpa::{plan_all, PlanConfig, TtdFeedback};
use omcr_core::units::months;
use proptest::prelude::*;

fn small() -> ScenarioConfig {
    ScenarioConfig {
        n_sites: 5,
        replications: 4,
        horizons_h: vec![months(2.0), months(8.0)],
        cp: vec![10.0, 1000.0],
        ..ScenarioConfig::default()
    }
}

#[test]
fn aggregates_are_means_of_the_raw_runs() {
    for table in [depot_study(&small()).unwrap(), capacity_study(&small(), 2, 1).unwrap()] {
        assert!(table.failures.is_empty());
        for (c, row) in table.rows.iter().enumerate() {
            let runs: Vec<_> = table.raw.iter().filter(|r| r.cell == c).collect();
            assert_eq!(runs.len(), 4);
            for m in Metric::ALL {
                let mean = runs.iter().map(|r| r.metric(m)).sum::<f64>() / runs.len() as f64;
                let s = row.stat(m);
                assert!((s.mean - mean).abs() <= 1e-12 * mean.abs().max(1.0), "{m:?}");
                match m {
                    Metric::Availability => assert!((0.0..=1.0).contains(&s.mean)),
                    _ => assert!(s.mean >= 0.0),
                }
            }
        }
    }
}

#[test]
fn same_seed_same_tables() {
    let a = depot_study(&small()).unwrap();
    let b = depot_study(&small()).unwrap();
    assert_eq!(a.raw, b.raw);
    let c = depot_study(&ScenarioConfig { seed: 9, ..small() }).unwrap();
    assert_ne!(a.raw, c.raw);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn routing_files_round_trip(seed in any::<u64>(), n in 1usize..8, tau in 1.0f64..12.0) {
        let cfg = ScenarioConfig { n_sites: n, ..ScenarioConfig::default() };
        let inst = omcr::expkit::generate_instance(seed, &cfg);
        let sites = inst.with_cp(100.0);
        let h = months(tau);
        let fb = vec![TtdFeedback::Scaled(1.0); n];
        let plan = plan_all(&sites, h, &fb, &PlanConfig::default()).unwrap();
        let sched = solve_long_term(&plan, &sites, sites[0].position, &cfg.vehicle(4)).unwrap();
        let text = write_routing(&sched.problem, Some(&sched.solution));
        let (p, s) = read_routing(&text).unwrap();
        prop_assert_eq!(p, sched.problem);
        prop_assert_eq!(s, Some(sched.solution));
    }
}
