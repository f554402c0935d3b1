mod common;

use common::{mutate, random_problem, MUTATIONS};
use omcr_core::lhsa::{solve_divide_and_conquer, solve_exact, validate_solution, RoutingProblem, RoutingSolution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Solver output with at least one operation-to-operation arc.
fn solved(seed: u64) -> Option<(RoutingProblem, RoutingSolution)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = rng.random_range(3..10);
    let q = rng.random_range(2..5);
    let p = random_problem(seed, n, q, 0.2);
    let sol = if n <= 7 {
        solve_exact(&p)
    } else {
        solve_divide_and_conquer(&p)
    }
    .ok()?;
    let p = p.with_fleet(sol.fleet);
    sol.arc_set.iter().any(|&(i, j)| i != 0 && j != 0).then_some((p, sol))
}

#[test]
fn solver_outputs_pass() {
    let mut checked = 0;
    for seed in 0..400u64 {
        if let Some((p, sol)) = solved(seed) {
            let report = validate_solution(&p, &sol);
            assert!(report.is_valid(), "seed {seed}: {:?}", report.failed());
            checked += 1;
        }
    }
    assert!(checked > 200);
}

#[test]
fn every_mutation_names_its_constraint() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut per_kind = [0usize; 13];
    let mut seed = 0;
    while per_kind.iter().any(|&c| c < 20) {
        seed += 1;
        let Some((p, sol)) = solved(seed) else { continue };
        for (idx, &target) in MUTATIONS.iter().enumerate() {
            let bad = mutate(&p, &sol, target, &mut rng);
            let report = validate_solution(&p, &bad);
            assert!(
                report.violation(target).is_some(),
                "seed {seed}: {target} not reported; failed {:?}",
                report.failed()
            );
            per_kind[idx] += 1;
        }
    }
}
