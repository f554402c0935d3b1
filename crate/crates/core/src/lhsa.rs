//! Capacitated routing with time windows over the planned operations.
//!
//! Node 0 is the depot; node `k >= 1` is `operations[k - 1]`. Every vehicle
//! leaves the depot once, serves at most `Q` operations (one spare part each)
//! and returns. Small problems are solved exactly by depth-first
//! branch-and-bound; larger ones are split into time-ordered chunks of at
//! most `Q` operations, each solved exactly.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::design::VehicleSpec;
use crate::geometry::Point;
use crate::mpa::{MaintenancePlan, Site};

/// Largest operation count handed to the exact solver.
pub const EXACT_CAP: usize = 12;

/// Slack allowed on time comparisons, hours.
pub const TIME_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum RoutingError {
    TooLarge {
        n: usize,
        cap: usize,
    },
    InvalidProblem(String),
    /// No assignment of the operations to exactly `fleet` routes meets the
    /// capacity and time windows.
    Infeasible {
        fleet: usize,
    },
    /// A given route cannot be scheduled inside its windows.
    RouteInfeasible {
        route: Vec<usize>,
    },
    /// A chunk stayed infeasible with one vehicle per operation.
    Unschedulable {
        windows: Vec<(usize, usize, f64, f64)>,
    },
}

impl fmt::Display for RoutingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoutingError::TooLarge { n, cap } => {
                write!(f, "{n} operations exceed the exact-solver cap of {cap}")
            }
            RoutingError::InvalidProblem(why) => write!(f, "invalid routing problem: {why}"),
            RoutingError::Infeasible { fleet } => {
                write!(f, "no feasible routing with exactly {fleet} vehicles")
            }
            RoutingError::RouteInfeasible { route } => {
                write!(f, "route {route:?} cannot meet its time windows")
            }
            RoutingError::Unschedulable { windows } => {
                write!(f, "operations cannot be scheduled even with one vehicle each; windows:")?;
                for (site, op, e, l) in windows {
                    write!(f, " site {site} op {op} [{e:.3}, {l:.3}] h;")?;
                }
                Ok(())
            }
        }
    }
}

impl core::error::Error for RoutingError {}

#[derive(Debug, Clone, PartialEq)]
pub struct OperationNode {
    /// Index of the site in the instance's site list.
    pub site: usize,
    pub site_id: usize,
    /// Position of the operation within its site plan.
    pub op_index: usize,
    /// Service duration (MTTR), hours.
    pub service: f64,
    pub early: f64,
    pub late: f64,
    /// Start time proposed by the planner, hours.
    pub planned: f64,
    pub demand: usize,
}

impl OperationNode {
    pub fn center(&self) -> f64 {
        0.5 * (self.early + self.late)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutingProblem {
    pub depot: Point,
    pub operations: Vec<OperationNode>,
    /// `(n + 1) x (n + 1)` distances, km.
    pub dist: Vec<Vec<f64>>,
    /// `(n + 1) x (n + 1)` travel times, hours.
    pub time: Vec<Vec<f64>>,
    pub vehicle: VehicleSpec,
    pub fleet: usize,
    pub horizon: f64,
}

impl RoutingProblem {
    pub fn n(&self) -> usize {
        self.operations.len()
    }

    pub fn capacity(&self) -> usize {
        self.vehicle.capacity
    }

    pub fn arc_cost(&self, i: usize, j: usize) -> f64 {
        self.vehicle.arc_cost(self.dist[i][j], self.time[i][j])
    }

    /// Smallest fleet allowed by the capacity, `ceil(n / Q)`.
    pub fn min_fleet(&self) -> usize {
        self.n().div_ceil(self.capacity().max(1))
    }

    pub fn with_fleet(&self, fleet: usize) -> RoutingProblem {
        RoutingProblem { fleet, ..self.clone() }
    }

    pub fn check(&self) -> Result<(), RoutingError> {
        let bad = |s: String| Err(RoutingError::InvalidProblem(s));
        if self.vehicle.validate().is_err() {
            return bad(String::from("invalid vehicle"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon {} must be > 0", self.horizon));
        }
        let size = self.n() + 1;
        for (name, mat) in [("dist", &self.dist), ("time", &self.time)] {
            if mat.len() != size || mat.iter().any(|r| r.len() != size) {
                return bad(format!("{name} matrix must be {size}x{size}"));
            }
            for i in 0..size {
                if mat[i][i] != 0.0 {
                    return bad(format!("{name}[{i}][{i}] must be 0"));
                }
                for j in 0..size {
                    let v = mat[i][j];
                    if !(v >= 0.0 && v.is_finite()) || v != mat[j][i] {
                        return bad(format!("{name}[{i}][{j}] must be finite, >= 0 and symmetric"));
                    }
                }
            }
        }
        for (k, op) in self.operations.iter().enumerate() {
            if !(0.0 <= op.early && op.early <= op.late && op.late <= self.horizon + TIME_TOL) {
                return bad(format!(
                    "operation {} window [{}, {}] outside [0, {}]",
                    k + 1,
                    op.early,
                    op.late,
                    self.horizon
                ));
            }
            if !(op.service >= 0.0) || op.demand != 1 {
                return bad(format!("operation {} needs service >= 0 and demand 1", k + 1));
            }
        }
        Ok(())
    }

    /// Problem restricted to the given operations (0-based indices), fleet
    /// reset to its capacity minimum.
    pub fn subproblem(&self, ops: &[usize]) -> RoutingProblem {
        let nodes: Vec<usize> = core::iter::once(0).chain(ops.iter().map(|&k| k + 1)).collect();
        let pick = |mat: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            nodes
                .iter()
                .map(|&a| nodes.iter().map(|&b| mat[a][b]).collect())
                .collect()
        };
        let sub = RoutingProblem {
            depot: self.depot,
            operations: ops.iter().map(|&k| self.operations[k].clone()).collect(),
            dist: pick(&self.dist),
            time: pick(&self.time),
            vehicle: self.vehicle,
            fleet: 0,
            horizon: self.horizon,
        };
        let m = sub.min_fleet();
        sub.with_fleet(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutingSolution {
    /// Depot-to-depot node sequences, e.g. `[0, 3, 1, 0]`.
    pub routes: Vec<Vec<usize>>,
    /// Arcs with `x_ij = 1`.
    pub arc_set: Vec<(usize, usize)>,
    /// `y_i` per operation (index `k - 1` for node `k`): position on its route.
    pub loads: Vec<usize>,
    /// Realized start time per operation, hours.
    pub times: Vec<f64>,
    /// Vehicle count `m`.
    pub fleet: usize,
    /// $/h.
    pub transport_cost: f64,
}

impl RoutingSolution {
    /// Builds a full solution from operation sequences (node ids, no depot).
    ///
    /// Each route is scheduled as close to the planned starts as its windows
    /// and travel times allow.
    pub fn from_routes(problem: &RoutingProblem, routes: &[Vec<usize>]) -> Result<Self, RoutingError> {
        let n = problem.n();
        let mut loads = vec![0; n];
        let mut times = vec![0.0; n];
        let mut full = Vec::with_capacity(routes.len());
        let mut arc_set = Vec::new();
        let mut total = 0.0;
        for route in routes {
            if route.is_empty() || route.iter().any(|&k| k == 0 || k > n) {
                return Err(RoutingError::InvalidProblem(format!("bad route {route:?}")));
            }
            let schedule =
                schedule_route(problem, route).ok_or_else(|| RoutingError::RouteInfeasible { route: route.clone() })?;
            let mut seq = Vec::with_capacity(route.len() + 2);
            seq.push(0);
            for (pos, (&k, &s)) in route.iter().zip(&schedule).enumerate() {
                loads[k - 1] = pos + 1;
                times[k - 1] = s;
                seq.push(k);
            }
            seq.push(0);
            for w in seq.windows(2) {
                arc_set.push((w[0], w[1]));
                total += problem.arc_cost(w[0], w[1]);
            }
            full.push(seq);
        }
        Ok(RoutingSolution {
            routes: full,
            arc_set,
            loads,
            times,
            fleet: routes.len(),
            transport_cost: total / problem.horizon,
        })
    }

    /// Operation node ids of each route, depot stripped.
    pub fn operation_sequences(&self) -> Vec<Vec<usize>> {
        self.routes
            .iter()
            .map(|r| r.iter().copied().filter(|&k| k != 0).collect())
            .collect()
    }
}

/// Realized start times along one route, or `None` if the windows cannot be
/// met. Earliest feasible starts run forward, latest feasible starts run
/// backward, and each start is then the planned start clamped between them.
pub fn schedule_route(problem: &RoutingProblem, route: &[usize]) -> Option<Vec<f64>> {
    let op = |k: usize| &problem.operations[k - 1];
    let gap = |a: usize, b: usize| op(a).service + problem.time[a][b];
    let len = route.len();
    let mut earliest = vec![0.0; len];
    for p in 0..len {
        let k = route[p];
        earliest[p] = if p == 0 {
            op(k).early
        } else {
            op(k).early.max(earliest[p - 1] + gap(route[p - 1], k))
        };
        if earliest[p] > op(k).late + TIME_TOL {
            return None;
        }
    }
    let mut latest = vec![0.0; len];
    for p in (0..len).rev() {
        let k = route[p];
        latest[p] = if p + 1 == len {
            op(k).late
        } else {
            op(k).late.min(latest[p + 1] - gap(k, route[p + 1]))
        };
    }
    let mut times = vec![0.0; len];
    for p in 0..len {
        let k = route[p];
        let lo = if p == 0 {
            earliest[0]
        } else {
            earliest[p].max(times[p - 1] + gap(route[p - 1], k))
        };
        let hi = latest[p].max(lo);
        times[p] = op(k).planned.clamp(lo, hi);
    }
    Some(times)
}

/// One node per planned operation, site-major; travel metrics come from the
/// site positions, so two operations of one site are at distance 0.
pub fn build_operation_graph(
    plan: &MaintenancePlan,
    sites: &[Site],
    depot: Point,
    vehicle: &VehicleSpec,
) -> Result<RoutingProblem, RoutingError> {
    if plan.site_plans.len() != sites.len() {
        return Err(RoutingError::InvalidProblem(format!(
            "plan has {} site plans for {} sites",
            plan.site_plans.len(),
            sites.len()
        )));
    }
    vehicle
        .validate()
        .map_err(|e| RoutingError::InvalidProblem(format!("{e}")))?;
    let mut operations = Vec::new();
    let mut points = vec![depot];
    for (idx, (sp, site)) in plan.site_plans.iter().zip(sites).enumerate() {
        for (o, (w, &s)) in sp.windows.iter().zip(&sp.starts).enumerate() {
            operations.push(OperationNode {
                site: idx,
                site_id: site.id,
                op_index: o,
                service: site.mttr,
                early: w.early,
                late: w.late,
                planned: s,
                demand: 1,
            });
            points.push(site.position);
        }
    }
    if operations.is_empty() {
        return Err(RoutingError::InvalidProblem(String::from("plan has no operations")));
    }
    let dist: Vec<Vec<f64>> = points
        .iter()
        .map(|a| points.iter().map(|b| a.distance(b)).collect())
        .collect();
    let time = dist
        .iter()
        .map(|row| row.iter().map(|d| d / vehicle.speed).collect())
        .collect();
    let problem = RoutingProblem {
        depot,
        operations,
        dist,
        time,
        vehicle: *vehicle,
        fleet: 0,
        horizon: plan.horizon,
    };
    let m = problem.min_fleet();
    let problem = problem.with_fleet(m);
    problem.check()?;
    Ok(problem)
}

struct Search<'a> {
    p: &'a RoutingProblem,
    n: usize,
    q: usize,
    m: usize,
    cost: Vec<f64>,
    eps: f64,
    best_cost: f64,
    best: Option<Vec<Vec<usize>>>,
    routes: Vec<Vec<usize>>,
}

impl Search<'_> {
    fn c(&self, i: usize, j: usize) -> f64 {
        self.cost[i * (self.n + 1) + j]
    }

    fn full_mask(&self) -> u32 {
        (1u32 << self.n) - 1
    }

    /// Admissible bound on the cost still to pay from `tail` (0 when at the
    /// depot between routes) through all unvisited operations and back.
    fn remaining_bound(&self, visited: u32, tail: usize, returns: usize) -> f64 {
        let mut nodes: Vec<usize> = (1..=self.n).filter(|&k| visited & (1 << (k - 1)) == 0).collect();
        let unvisited = nodes.len();
        if unvisited == 0 {
            return if tail == 0 { 0.0 } else { self.c(tail, 0) };
        }
        // Cheapest in-arc of every unvisited node plus cheapest returns.
        let mut in_arcs = 0.0;
        for &j in &nodes {
            let mut best = self.c(0, j);
            if tail != 0 {
                best = best.min(self.c(tail, j));
            }
            for &i in &nodes {
                if i != j {
                    best = best.min(self.c(i, j));
                }
            }
            in_arcs += best;
        }
        let cheapest_return = nodes
            .iter()
            .chain(if tail != 0 { Some(&tail) } else { None })
            .map(|&i| self.c(i, 0))
            .fold(f64::INFINITY, f64::min);
        let in_bound = in_arcs + returns as f64 * cheapest_return;

        // Minimum spanning tree over {tail, unvisited, depot}.
        if tail != 0 {
            nodes.push(tail);
        }
        nodes.push(0);
        let k = nodes.len();
        let mut in_tree = vec![false; k];
        let mut key = vec![f64::INFINITY; k];
        key[0] = 0.0;
        let mut mst = 0.0;
        for _ in 0..k {
            let mut u = usize::MAX;
            for v in 0..k {
                if !in_tree[v] && (u == usize::MAX || key[v] < key[u]) {
                    u = v;
                }
            }
            in_tree[u] = true;
            mst += key[u];
            for v in 0..k {
                if !in_tree[v] {
                    let w = self.c(nodes[u], nodes[v]);
                    if w < key[v] {
                        key[v] = w;
                    }
                }
            }
        }
        mst.max(in_bound)
    }

    fn pruned(&self, cost: f64, visited: u32, tail: usize, returns: usize) -> bool {
        self.best.is_some() && cost + self.remaining_bound(visited, tail, returns) >= self.best_cost - self.eps
    }

    fn start_route(&mut self, visited: u32, closed: usize, cost: f64, min_first: usize) {
        if closed == self.m {
            if visited == self.full_mask() && (self.best.is_none() || cost < self.best_cost - self.eps) {
                self.best_cost = cost;
                self.best = Some(self.routes.clone());
            }
            return;
        }
        let unvisited = self.n - visited.count_ones() as usize;
        let left = self.m - closed;
        if unvisited < left || unvisited > left * self.q {
            return;
        }
        if self.pruned(cost, visited, 0, left) {
            return;
        }
        for f in min_first..=self.n {
            if visited & (1 << (f - 1)) != 0 {
                continue;
            }
            let t = self.p.operations[f - 1].early;
            self.routes.push(vec![f]);
            self.extend(visited | (1 << (f - 1)), f, t, 1, closed, cost + self.c(0, f), f);
            self.routes.pop();
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn extend(&mut self, visited: u32, tail: usize, t: f64, load: usize, closed: usize, cost: f64, first: usize) {
        let left = self.m - closed;
        let unvisited = self.n - visited.count_ones() as usize;
        // Routes still to open after this one must each get an operation.
        if unvisited < left - 1 || unvisited > (left - 1) * self.q + (self.q - load) {
            return;
        }
        if self.pruned(cost, visited, tail, left) {
            return;
        }
        self.start_route(visited, closed + 1, cost + self.c(tail, 0), first + 1);
        if load == self.q {
            return;
        }
        let service = self.p.operations[tail - 1].service;
        for j in 1..=self.n {
            if visited & (1 << (j - 1)) != 0 {
                continue;
            }
            let op = &self.p.operations[j - 1];
            let tj = op.early.max(t + service + self.p.time[tail][j]);
            if tj > op.late + TIME_TOL {
                continue;
            }
            self.routes.last_mut().expect("open route").push(j);
            self.extend(
                visited | (1 << (j - 1)),
                j,
                tj,
                load + 1,
                closed,
                cost + self.c(tail, j),
                first,
            );
            self.routes.last_mut().expect("open route").pop();
        }
    }
}

/// Minimum-cost routing with exactly `problem.fleet` vehicles.
///
/// Among solutions within a relative `1e-12` of the optimum, the one whose
/// route list (routes ordered by first operation, each read depot to depot)
/// is lexicographically smallest is returned.
pub fn solve_exact(problem: &RoutingProblem) -> Result<RoutingSolution, RoutingError> {
    problem.check()?;
    let n = problem.n();
    if n > EXACT_CAP {
        return Err(RoutingError::TooLarge { n, cap: EXACT_CAP });
    }
    if n == 0 {
        return Err(RoutingError::InvalidProblem(String::from("no operations")));
    }
    let m = problem.fleet;
    let q = problem.capacity();
    if m == 0 || m > n || q * m < n {
        return Err(RoutingError::Infeasible { fleet: m });
    }
    let mut cost = Vec::with_capacity((n + 1) * (n + 1));
    for i in 0..=n {
        for j in 0..=n {
            cost.push(problem.arc_cost(i, j));
        }
    }
    let scale = cost.iter().copied().fold(1.0, f64::max);
    let mut search = Search {
        p: problem,
        n,
        q,
        m,
        cost,
        eps: 1e-12 * scale,
        best_cost: f64::INFINITY,
        best: None,
        routes: Vec::new(),
    };
    search.start_route(0, 0, 0.0, 1);
    match search.best {
        Some(routes) => RoutingSolution::from_routes(problem, &routes),
        None => Err(RoutingError::Infeasible { fleet: m }),
    }
}

/// Cheapest exact routing over every feasible fleet size.
pub fn solve_exact_free_fleet(problem: &RoutingProblem) -> Result<RoutingSolution, RoutingError> {
    let mut best: Option<RoutingSolution> = None;
    for m in problem.min_fleet().max(1)..=problem.n() {
        match solve_exact(&problem.with_fleet(m)) {
            Ok(sol) => {
                if best.as_ref().map_or(true, |b| sol.transport_cost < b.transport_cost) {
                    best = Some(sol);
                }
            }
            Err(RoutingError::Infeasible { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    best.ok_or(RoutingError::Infeasible { fleet: problem.n() })
}

/// Sorts operations by window center (then site id, then operation index)
/// and cuts the sorted list into consecutive chunks of at most `capacity`.
pub fn split_operations(operations: &[OperationNode], capacity: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..operations.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&operations[a], &operations[b]);
        x.center()
            .total_cmp(&y.center())
            .then(x.site_id.cmp(&y.site_id))
            .then(x.op_index.cmp(&y.op_index))
            .then(Ordering::Equal)
    });
    order.chunks(capacity.max(1)).map(|c| c.to_vec()).collect()
}

/// Solves `problem` chunk by chunk. Each chunk starts at its minimum fleet,
/// which grows on infeasibility up to one vehicle per operation.
pub fn solve_divide_and_conquer(problem: &RoutingProblem) -> Result<RoutingSolution, RoutingError> {
    problem.check()?;
    let n = problem.n();
    let mut combined = RoutingSolution {
        routes: Vec::new(),
        arc_set: Vec::new(),
        loads: vec![0; n],
        times: vec![0.0; n],
        fleet: 0,
        transport_cost: 0.0,
    };
    for chunk in split_operations(&problem.operations, problem.capacity()) {
        let sub = problem.subproblem(&chunk);
        let mut solved = None;
        for m in sub.min_fleet()..=chunk.len() {
            match solve_exact(&sub.with_fleet(m)) {
                Ok(sol) => {
                    solved = Some(sol);
                    break;
                }
                Err(RoutingError::Infeasible { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        let Some(sol) = solved else {
            let windows = chunk
                .iter()
                .map(|&k| {
                    let op = &problem.operations[k];
                    (op.site_id, op.op_index, op.early, op.late)
                })
                .collect();
            return Err(RoutingError::Unschedulable { windows });
        };
        let global = |a: usize| if a == 0 { 0 } else { chunk[a - 1] + 1 };
        for route in &sol.routes {
            combined.routes.push(route.iter().map(|&a| global(a)).collect());
        }
        combined
            .arc_set
            .extend(sol.arc_set.iter().map(|&(a, b)| (global(a), global(b))));
        for (a, &k) in chunk.iter().enumerate() {
            combined.loads[k] = sol.loads[a];
            combined.times[k] = sol.times[a];
        }
        combined.fleet += sol.fleet;
        combined.transport_cost += sol.transport_cost;
    }
    Ok(combined)
}

/// Routing problem built from a plan and its divide-and-conquer solution.
#[derive(Debug, Clone, PartialEq)]
pub struct LongTermSchedule {
    pub problem: RoutingProblem,
    pub solution: RoutingSolution,
}

pub fn solve_long_term(
    plan: &MaintenancePlan,
    sites: &[Site],
    depot: Point,
    vehicle: &VehicleSpec,
) -> Result<LongTermSchedule, RoutingError> {
    let problem = build_operation_graph(plan, sites, depot, vehicle)?;
    let solution = solve_divide_and_conquer(&problem)?;
    let problem = problem.with_fleet(solution.fleet);
    Ok(LongTermSchedule { problem, solution })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constraint {
    FleetCapacity,
    DepotDepartures,
    NoSelfLoops,
    SingleVisit,
    SingleSuccessor,
    LoadProgression,
    TimeProgression,
    LoadBounds,
    TimeWindows,
    BinaryArcs,
    DepotReturns,
    RouteStructure,
    Objective,
}

impl Constraint {
    pub const ALL: [Constraint; 13] = [
        Constraint::FleetCapacity,
        Constraint::DepotDepartures,
        Constraint::NoSelfLoops,
        Constraint::SingleVisit,
        Constraint::SingleSuccessor,
        Constraint::LoadProgression,
        Constraint::TimeProgression,
        Constraint::LoadBounds,
        Constraint::TimeWindows,
        Constraint::BinaryArcs,
        Constraint::DepotReturns,
        Constraint::RouteStructure,
        Constraint::Objective,
    ];

    /// Number of the constraint in the routing MILP, when it has one.
    pub fn number(&self) -> Option<u8> {
        match self {
            Constraint::FleetCapacity => Some(5),
            Constraint::DepotDepartures => Some(6),
            Constraint::NoSelfLoops => Some(7),
            Constraint::SingleVisit => Some(8),
            Constraint::SingleSuccessor => Some(9),
            Constraint::LoadProgression => Some(10),
            Constraint::TimeProgression => Some(11),
            Constraint::LoadBounds => Some(12),
            Constraint::TimeWindows => Some(13),
            Constraint::BinaryArcs => Some(14),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Constraint::FleetCapacity => "fleet capacity",
            Constraint::DepotDepartures => "depot departures",
            Constraint::NoSelfLoops => "no self loops",
            Constraint::SingleVisit => "single visit",
            Constraint::SingleSuccessor => "single successor",
            Constraint::LoadProgression => "load progression",
            Constraint::TimeProgression => "time progression",
            Constraint::LoadBounds => "load bounds",
            Constraint::TimeWindows => "time windows",
            Constraint::BinaryArcs => "binary arcs",
            Constraint::DepotReturns => "depot returns",
            Constraint::RouteStructure => "route structure",
            Constraint::Objective => "objective",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.number() {
            Some(k) => write!(f, "({k}) {}", self.name()),
            None => write!(f, "{}", self.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Element {
    Fleet,
    Node(usize),
    Arc(usize, usize),
    Route(usize),
    Objective { stored: f64, recomputed: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCheck {
    pub constraint: Constraint,
    /// First violating element, `None` when the constraint holds.
    pub violation: Option<Element>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    pub checks: Vec<ConstraintCheck>,
}

impl ConstraintReport {
    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.violation.is_none())
    }

    pub fn failed(&self) -> Vec<Constraint> {
        self.checks
            .iter()
            .filter(|c| c.violation.is_some())
            .map(|c| c.constraint)
            .collect()
    }

    pub fn violation(&self, constraint: Constraint) -> Option<Element> {
        self.checks
            .iter()
            .find(|c| c.constraint == constraint)
            .and_then(|c| c.violation)
    }
}

/// Checks a solution against every routing constraint, independently of
/// how it was produced.
pub fn validate_solution(problem: &RoutingProblem, solution: &RoutingSolution) -> ConstraintReport {
    let n = problem.n();
    let q = problem.capacity();
    let m = solution.fleet;
    let in_range = |&(i, j): &(usize, usize)| i <= n && j <= n;
    let arcs: Vec<(usize, usize)> = solution.arc_set.iter().copied().filter(in_range).collect();
    let load = |k: usize| solution.loads.get(k - 1).copied();
    let time = |k: usize| solution.times.get(k - 1).copied();
    let is_op_arc = |&(i, j): &(usize, usize)| i != 0 && j != 0 && i != j;

    let mut checks = Vec::with_capacity(Constraint::ALL.len());
    let mut push = |constraint, violation| checks.push(ConstraintCheck { constraint, violation });

    push(Constraint::FleetCapacity, (q * m < n).then_some(Element::Fleet));

    let departures = arcs.iter().filter(|&&(i, j)| i == 0 && j != 0).count();
    push(Constraint::DepotDepartures, (departures != m).then_some(Element::Fleet));

    push(
        Constraint::NoSelfLoops,
        arcs.iter().find(|&&(i, j)| i == j).map(|&(i, j)| Element::Arc(i, j)),
    );

    let single_visit = (1..=n)
        .find(|&j| arcs.iter().filter(|&&(i, b)| b == j && i != j).count() != 1)
        .map(Element::Node);
    push(Constraint::SingleVisit, single_visit);

    let single_successor = (1..=n)
        .find(|&i| arcs.iter().filter(|&&(a, j)| a == i && j != 0 && j != i).count() > 1)
        .map(Element::Node);
    push(Constraint::SingleSuccessor, single_successor);

    let load_progression = arcs
        .iter()
        .filter(|a| is_op_arc(a))
        .find(|&&(i, j)| match (load(i), load(j)) {
            (Some(yi), Some(yj)) => yi as f64 - yj as f64 + (1 + q) as f64 > q as f64,
            _ => true,
        });
    push(
        Constraint::LoadProgression,
        load_progression.map(|&(i, j)| Element::Arc(i, j)),
    );

    let time_progression = arcs
        .iter()
        .filter(|a| is_op_arc(a))
        .find(|&&(i, j)| match (time(i), time(j)) {
            (Some(si), Some(sj)) => {
                let need = si + problem.operations[i - 1].service + problem.time[i][j];
                !(sj + TIME_TOL >= need)
            }
            _ => true,
        });
    push(
        Constraint::TimeProgression,
        time_progression.map(|&(i, j)| Element::Arc(i, j)),
    );

    let load_bounds = (1..=n)
        .find(|&k| !matches!(load(k), Some(y) if (1..=q).contains(&y)))
        .map(Element::Node);
    push(Constraint::LoadBounds, load_bounds);

    let windows = (1..=n)
        .find(|&k| {
            let op = &problem.operations[k - 1];
            !matches!(time(k), Some(s) if s + TIME_TOL >= op.early && s <= op.late + TIME_TOL)
        })
        .map(Element::Node);
    push(Constraint::TimeWindows, windows);

    let mut binary = solution
        .arc_set
        .iter()
        .find(|a| !in_range(a))
        .map(|&(i, j)| Element::Arc(i, j));
    if binary.is_none() {
        for (idx, a) in arcs.iter().enumerate() {
            if arcs[..idx].contains(a) {
                binary = Some(Element::Arc(a.0, a.1));
                break;
            }
        }
    }
    push(Constraint::BinaryArcs, binary);

    let returns = arcs.iter().filter(|&&(i, j)| j == 0 && i != 0).count();
    let depot_returns = if returns != m {
        Some(Element::Fleet)
    } else {
        (1..=n)
            .find(|&i| arcs.iter().filter(|&&(a, _)| a == i).count() != 1)
            .map(Element::Node)
    };
    push(Constraint::DepotReturns, depot_returns);

    push(Constraint::RouteStructure, route_structure(problem, solution));

    let recomputed = arcs.iter().map(|&(i, j)| problem.arc_cost(i, j)).sum::<f64>() / problem.horizon;
    let stored = solution.transport_cost;
    let objective_ok = (stored - recomputed).abs() <= 1e-9 * recomputed.abs().max(1.0);
    push(
        Constraint::Objective,
        (!objective_ok).then_some(Element::Objective { stored, recomputed }),
    );

    ConstraintReport { checks }
}

fn route_structure(problem: &RoutingProblem, solution: &RoutingSolution) -> Option<Element> {
    let n = problem.n();
    if solution.loads.len() != n || solution.times.len() != n || solution.routes.len() != solution.fleet {
        return Some(Element::Fleet);
    }
    let mut route_arcs = Vec::new();
    for (r, route) in solution.routes.iter().enumerate() {
        let len = route.len();
        let closed = len >= 3 && route[0] == 0 && route[len - 1] == 0;
        if !closed || route[1..len - 1].iter().any(|&k| k == 0 || k > n) {
            return Some(Element::Route(r));
        }
        for w in route.windows(2) {
            route_arcs.push((w[0], w[1]));
        }
    }
    let mut a = route_arcs;
    let mut b = solution.arc_set.clone();
    a.sort_unstable();
    b.sort_unstable();
    if a != b {
        let first = a
            .iter()
            .zip(&b)
            .find(|(x, y)| x != y)
            .map(|(x, _)| *x)
            .or_else(|| a.get(b.len()).copied())
            .or_else(|| b.get(a.len()).copied())
            .unwrap_or((0, 0));
        return Some(Element::Arc(first.0, first.1));
    }
    None
}
