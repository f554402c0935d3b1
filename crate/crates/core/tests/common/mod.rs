//! Shared generators and brute-force references for the integration tests.
#![allow(dead_code)]

use omcr_core::design::VehicleSpec;
use omcr_core::geometry::Point;
use omcr_core::lhsa::{Constraint, OperationNode, RoutingProblem, RoutingSolution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const HORIZON: f64 = 1000.0;

/// Random routing instance with `n` operations. `tight` controls the share
/// of narrow windows (0 = all wide, 1 = all narrow).
pub fn random_problem(seed: u64, n: usize, capacity: usize, tight: f64) -> RoutingProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depot = Point::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
    let mut points = vec![depot];
    let mut operations = Vec::with_capacity(n);
    for k in 0..n {
        // Roughly one operation in four shares the previous site.
        let colocated = k > 0 && rng.random_bool(0.25);
        let (site, pos) = if colocated {
            (
                operations.last().map_or(0, |o: &OperationNode| o.site),
                *points.last().unwrap(),
            )
        } else {
            (
                k,
                Point::new(rng.random_range(-40.0..40.0), rng.random_range(-40.0..40.0)),
            )
        };
        let half = if rng.random_bool(tight) {
            rng.random_range(0.0..2.0)
        } else {
            rng.random_range(20.0..300.0)
        };
        let center: f64 = rng.random_range(0.0..HORIZON);
        let early = (center - half).max(0.0);
        let late = (center + half).min(HORIZON);
        let planned = rng.random_range(early..=late);
        operations.push(OperationNode {
            site,
            site_id: site,
            op_index: k,
            service: rng.random_range(0.5..4.0),
            early,
            late,
            planned,
            demand: 1,
        });
        points.push(pos);
    }
    let speed = 80.0;
    let dist: Vec<Vec<f64>> = points
        .iter()
        .map(|a| points.iter().map(|b| a.distance(b)).collect())
        .collect();
    let time = dist.iter().map(|r| r.iter().map(|d| d / speed).collect()).collect();
    let problem = RoutingProblem {
        depot,
        operations,
        dist,
        time,
        vehicle: VehicleSpec::new(capacity, 2.0, 30.0, speed).unwrap(),
        fleet: 0,
        horizon: HORIZON,
    };
    let m = problem.min_fleet();
    problem.with_fleet(m)
}

/// Arc cost written out from the vehicle parameters.
pub fn arc_cost(p: &RoutingProblem, i: usize, j: usize) -> f64 {
    p.vehicle.capacity as f64 * p.vehicle.cd * p.dist[i][j] + p.vehicle.ct * p.time[i][j]
}

/// Earliest-start feasibility of one route (operation node ids).
pub fn route_feasible(p: &RoutingProblem, route: &[usize]) -> bool {
    let mut t = f64::NEG_INFINITY;
    let mut prev: Option<usize> = None;
    for &k in route {
        let op = &p.operations[k - 1];
        let ready = match prev {
            None => op.early,
            Some(i) => op.early.max(t + p.operations[i - 1].service + p.time[i][k]),
        };
        if ready > op.late + 1e-9 {
            return false;
        }
        t = ready;
        prev = Some(k);
    }
    true
}

pub fn route_cost(p: &RoutingProblem, route: &[usize]) -> f64 {
    let mut c = 0.0;
    let mut prev = 0;
    for &k in route {
        c += arc_cost(p, prev, k);
        prev = k;
    }
    c + arc_cost(p, prev, 0)
}

fn permutations(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Cheapest objective ($/h) over every ordering of the operations cut into
/// routes, with exactly `fleet` routes when given, any count otherwise.
pub fn brute_force(p: &RoutingProblem, fleet: Option<usize>) -> Option<f64> {
    let n = p.n();
    let q = p.capacity();
    let mut perms = Vec::new();
    permutations(&mut (1..=n).collect(), 0, &mut perms);
    let mut best: Option<f64> = None;
    for perm in &perms {
        for cuts in 0u32..(1 << (n - 1)) {
            let routes_n = cuts.count_ones() as usize + 1;
            if fleet.is_some_and(|m| m != routes_n) {
                continue;
            }
            let mut total = 0.0;
            let mut ok = true;
            let mut start = 0;
            for end in 1..=n {
                if end == n || cuts & (1 << (end - 1)) != 0 {
                    let r = &perm[start..end];
                    if r.len() > q || !route_feasible(p, r) {
                        ok = false;
                        break;
                    }
                    total += route_cost(p, r);
                    start = end;
                }
            }
            if ok {
                let v = total / p.horizon;
                if best.is_none_or(|b| v < b) {
                    best = Some(v);
                }
            }
        }
    }
    best
}

/// Every injectable violation, paired with the constraint that must be named.
pub const MUTATIONS: [Constraint; 13] = Constraint::ALL;

/// Copy of `sol` breaking `target`. Needs a solution with at least one
/// operation-to-operation arc and `n >= 2`.
pub fn mutate(p: &RoutingProblem, sol: &RoutingSolution, target: Constraint, rng: &mut ChaCha8Rng) -> RoutingSolution {
    let n = p.n();
    let q = p.capacity();
    let mut s = sol.clone();
    let op_arcs: Vec<(usize, usize)> = sol.arc_set.iter().copied().filter(|&(i, j)| i != 0 && j != 0).collect();
    let pick_node = |rng: &mut ChaCha8Rng| rng.random_range(1..=n);
    match target {
        Constraint::FleetCapacity => s.fleet = (n - 1) / q,
        Constraint::DepotDepartures => s.fleet += 1,
        Constraint::NoSelfLoops => {
            let k = pick_node(rng);
            s.arc_set.push((k, k));
        }
        Constraint::SingleVisit => {
            let into: Vec<usize> = (0..s.arc_set.len()).filter(|&a| s.arc_set[a].1 != 0).collect();
            let a = into[rng.random_range(0..into.len())];
            s.arc_set.remove(a);
        }
        Constraint::SingleSuccessor => {
            let (i, j) = op_arcs[rng.random_range(0..op_arcs.len())];
            let other = (1..=n).find(|&k| k != i && k != j);
            match other {
                Some(k) => s.arc_set.push((i, k)),
                // n == 2: a second copy of the arc also gives i two successors.
                None => s.arc_set.push((i, j)),
            }
        }
        Constraint::LoadProgression => {
            let (i, j) = op_arcs[rng.random_range(0..op_arcs.len())];
            s.loads[j - 1] = s.loads[i - 1];
        }
        Constraint::TimeProgression => {
            let (i, j) = op_arcs[rng.random_range(0..op_arcs.len())];
            let need = s.times[i - 1] + p.operations[i - 1].service + p.time[i][j];
            s.times[j - 1] = need - rng.random_range(0.01..5.0);
        }
        Constraint::LoadBounds => {
            let k = pick_node(rng);
            s.loads[k - 1] = if rng.random_bool(0.5) {
                0
            } else {
                q + 1 + rng.random_range(0..3)
            };
        }
        Constraint::TimeWindows => {
            let k = pick_node(rng);
            let op = &p.operations[k - 1];
            s.times[k - 1] = if rng.random_bool(0.5) || op.early < 0.02 {
                op.late + rng.random_range(0.01..10.0)
            } else {
                op.early - rng.random_range(0.01..op.early.min(10.0))
            };
        }
        Constraint::BinaryArcs => {
            let a = s.arc_set[rng.random_range(0..s.arc_set.len())];
            s.arc_set.push(a);
        }
        Constraint::DepotReturns => {
            let rets: Vec<usize> = (0..s.arc_set.len()).filter(|&a| s.arc_set[a].1 == 0).collect();
            let a = rets[rng.random_range(0..rets.len())];
            s.arc_set.remove(a);
        }
        Constraint::RouteStructure => {
            let r = rng.random_range(0..s.routes.len());
            s.routes[r].pop();
        }
        Constraint::Objective => {
            let f = if rng.random_bool(0.5) { 1.01 } else { 0.99 };
            s.transport_cost = s.transport_cost * f + 1e-6;
        }
    }
    s
}
