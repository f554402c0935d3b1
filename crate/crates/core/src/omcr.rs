//! Fixed-point loop between planning and routing.
//!
//! Each iteration plans every site, routes the planned operations, then
//! re-evaluates downtime from the realized routing times. That realized
//! downtime becomes the planner's feedback for the next iteration. The first
//! iteration assumes instant service. The loop keeps the cheapest iterate.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::design::VehicleSpec;
use crate::geometry::Point;
use crate::lhsa::{solve_long_term, LongTermSchedule, RoutingError, RoutingProblem, RoutingSolution};
use crate::mpa::{
    closing_gaps, maintenance_cost, plan_all, renewal_downtime, MaintenancePlan, PlanConfig, PlanError, Site,
    TtdFeedback,
};
use crate::reliability::{availability_of, expected_downtime, DowntimeEstimate, ReliabilityError};

/// Cost rates in $/h.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostBreakdown {
    pub transport: f64,
    pub operations: f64,
    pub downtime: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(transport: f64, operations: f64, downtime: f64) -> Self {
        Self {
            transport,
            operations,
            downtime,
            total: transport + operations + downtime,
        }
    }
}

/// How realized downtime is turned into planner feedback.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeedbackRule {
    /// Scale the model downtime of every candidate interval by the ratio of
    /// realized to model downtime of the previous plan.
    #[default]
    ModelScaled,
    /// Give every candidate operation the site's mean realized TTD.
    MeanBroadcast,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmcrConfig {
    pub rel_tol: f64,
    pub max_iter: usize,
    pub feedback: FeedbackRule,
    pub plan: PlanConfig,
}

impl Default for OmcrConfig {
    fn default() -> Self {
        Self {
            rel_tol: 0.01,
            max_iter: 20,
            feedback: FeedbackRule::default(),
            plan: PlanConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OmcrError {
    InvalidConfig(&'static str),
    Plan { iteration: usize, source: PlanError },
    Routing { iteration: usize, source: RoutingError },
    Structure(String),
    Reliability(ReliabilityError),
}

impl fmt::Display for OmcrError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OmcrError::InvalidConfig(why) => write!(f, "invalid loop config: {why}"),
            OmcrError::Plan { iteration, source } => {
                write!(f, "planning failed at iteration {iteration}: {source}")
            }
            OmcrError::Routing { iteration, source } => {
                write!(f, "routing failed at iteration {iteration}: {source}")
            }
            OmcrError::Structure(why) => write!(f, "schedule does not match plan: {why}"),
            OmcrError::Reliability(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for OmcrError {}

impl From<ReliabilityError> for OmcrError {
    fn from(e: ReliabilityError) -> Self {
        OmcrError::Reliability(e)
    }
}

impl OmcrError {
    /// True when the loop failed because no routing met the windows.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            OmcrError::Routing {
                source: RoutingError::Infeasible { .. }
                    | RoutingError::Unschedulable { .. }
                    | RoutingError::RouteInfeasible { .. },
                ..
            }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub nop: Vec<usize>,
    pub costs: CostBreakdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmcrResult {
    pub plan: MaintenancePlan,
    pub schedule: LongTermSchedule,
    pub ttds: Vec<Vec<DowntimeEstimate>>,
    pub costs: CostBreakdown,
    pub availability: Vec<f64>,
    pub iterations: usize,
    pub cost_trace: Vec<f64>,
    pub trace: Vec<IterationRecord>,
    /// Iteration (1-based) the returned iterate comes from.
    pub best_iteration: usize,
}

impl OmcrResult {
    pub fn mean_availability(&self) -> f64 {
        if self.availability.is_empty() {
            return 1.0;
        }
        self.availability.iter().sum::<f64>() / self.availability.len() as f64
    }
}

/// Realized start times per site, in operation order.
pub fn realized_starts(
    problem: &RoutingProblem,
    solution: &RoutingSolution,
    plan: &MaintenancePlan,
) -> Result<Vec<Vec<f64>>, OmcrError> {
    let mut out: Vec<Vec<Option<f64>>> = plan.site_plans.iter().map(|sp| alloc::vec![None; sp.nop]).collect();
    if solution.times.len() != problem.n() {
        return Err(OmcrError::Structure(format!(
            "{} realized times for {} operations",
            solution.times.len(),
            problem.n()
        )));
    }
    for (op, &t) in problem.operations.iter().zip(&solution.times) {
        let slot = out
            .get_mut(op.site)
            .and_then(|row| row.get_mut(op.op_index))
            .ok_or_else(|| OmcrError::Structure(format!("site {} op {} not in plan", op.site_id, op.op_index)))?;
        *slot = Some(t);
    }
    out.into_iter()
        .enumerate()
        .map(|(i, row)| {
            row.into_iter()
                .enumerate()
                .map(|(o, t)| {
                    t.ok_or_else(|| OmcrError::Structure(format!("site index {i} op {o} missing from schedule")))
                })
                .collect()
        })
        .collect()
}

/// Downtime of every planned operation evaluated at the realized start
/// times, by quadrature. Each operation closes the interval since the
/// previous replacement at the same site (wrapping around the horizon for
/// the first operation).
pub fn compute_ttd_matrix(
    problem: &RoutingProblem,
    solution: &RoutingSolution,
    plan: &MaintenancePlan,
    sites: &[Site],
) -> Result<Vec<Vec<DowntimeEstimate>>, OmcrError> {
    if sites.len() != plan.site_plans.len() {
        return Err(OmcrError::Structure(format!(
            "{} sites for {} site plans",
            sites.len(),
            plan.site_plans.len()
        )));
    }
    let starts = realized_starts(problem, solution, plan)?;
    starts
        .iter()
        .zip(sites)
        .map(|(row, site)| {
            closing_gaps(row, plan.horizon)
                .into_iter()
                .map(|gap| {
                    if gap <= 0.0 {
                        Ok(DowntimeEstimate::ZERO)
                    } else {
                        expected_downtime(0.0, gap, &site.model).map_err(OmcrError::from)
                    }
                })
                .collect()
        })
        .collect()
}

fn feedback_for(
    rule: FeedbackRule,
    site: &Site,
    planned: &[f64],
    realized: &[DowntimeEstimate],
    horizon: f64,
) -> Result<TtdFeedback, OmcrError> {
    match rule {
        FeedbackRule::MeanBroadcast => {
            let mean = realized.iter().map(|d| d.ttd).sum::<f64>() / realized.len().max(1) as f64;
            Ok(if mean > 0.0 {
                TtdFeedback::Broadcast(mean)
            } else {
                TtdFeedback::Zero
            })
        }
        FeedbackRule::ModelScaled => {
            let observed: f64 = realized.iter().map(DowntimeEstimate::weighted).sum();
            let mut model = 0.0;
            for gap in closing_gaps(planned, horizon) {
                model += renewal_downtime(gap, &site.model)?.weighted();
            }
            Ok(if observed > 0.0 && model > 0.0 {
                TtdFeedback::Scaled(observed / model)
            } else {
                TtdFeedback::Zero
            })
        }
    }
}

/// Runs the planning/routing loop until successive totals differ by less
/// than `rel_tol` (relative) or `max_iter` iterations have run.
pub fn run_omcr(
    sites: &[Site],
    depot: Point,
    vehicle: &VehicleSpec,
    horizon: f64,
    config: &OmcrConfig,
) -> Result<OmcrResult, OmcrError> {
    if config.max_iter == 0 {
        return Err(OmcrError::InvalidConfig("max_iter must be >= 1"));
    }
    if !(config.rel_tol >= 0.0) {
        return Err(OmcrError::InvalidConfig("rel_tol must be >= 0"));
    }
    if sites.is_empty() {
        return Err(OmcrError::InvalidConfig("no sites"));
    }
    let mut feedback = alloc::vec![TtdFeedback::Zero; sites.len()];
    let mut best: Option<OmcrResult> = None;
    let mut cost_trace = Vec::new();
    let mut trace = Vec::new();
    let mut previous: Option<f64> = None;

    for iteration in 1..=config.max_iter {
        let plan = plan_all(sites, horizon, &feedback, &config.plan)
            .map_err(|source| OmcrError::Plan { iteration, source })?;
        let schedule =
            solve_long_term(&plan, sites, depot, vehicle).map_err(|source| OmcrError::Routing { iteration, source })?;
        let ttds = compute_ttd_matrix(&schedule.problem, &schedule.solution, &plan, sites)?;
        let (operations, downtime) =
            maintenance_cost(&plan, sites, &ttds).map_err(|source| OmcrError::Plan { iteration, source })?;
        let costs = CostBreakdown::new(schedule.solution.transport_cost, operations, downtime);
        let availability = ttds
            .iter()
            .map(|row| availability_of(row, horizon))
            .collect::<Result<Vec<_>, _>>()?;

        cost_trace.push(costs.total);
        trace.push(IterationRecord {
            iteration,
            nop: plan.nop_vector(),
            costs,
        });

        let next_feedback = sites
            .iter()
            .zip(&plan.site_plans)
            .zip(&ttds)
            .map(|((site, sp), row)| feedback_for(config.feedback, site, &sp.starts, row, horizon))
            .collect::<Result<Vec<_>, _>>()?;

        if best.as_ref().map_or(true, |b| costs.total < b.costs.total) {
            best = Some(OmcrResult {
                plan,
                schedule,
                ttds,
                costs,
                availability,
                iterations: 0,
                cost_trace: Vec::new(),
                trace: Vec::new(),
                best_iteration: iteration,
            });
        }

        let converged = match previous {
            Some(p) if p > 0.0 => (costs.total - p).abs() / p < config.rel_tol,
            Some(p) => costs.total == p,
            None => false,
        };
        previous = Some(costs.total);
        if converged {
            break;
        }
        feedback = next_feedback;
    }

    let mut result = best.expect("at least one iteration ran");
    result.iterations = cost_trace.len();
    result.cost_trace = cost_trace;
    result.trace = trace;
    Ok(result)
}
