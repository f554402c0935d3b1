//! Depot location heuristics and vehicle capacity selection.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::geometry::Point;
use crate::mpa::Site;
use crate::omcr::{run_omcr, CostBreakdown, OmcrConfig, OmcrError, OmcrResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleSpec {
    /// Spare parts carried per trip.
    pub capacity: usize,
    /// Cost per km per unit of capacity, $.
    pub cd: f64,
    /// Cost per hour on the road, $.
    pub ct: f64,
    /// km/h.
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum VehicleError {
    ZeroCapacity,
    InvalidSpeed(f64),
    NegativeCost,
}

impl fmt::Display for VehicleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VehicleError::ZeroCapacity => write!(f, "vehicle capacity must be >= 1"),
            VehicleError::InvalidSpeed(v) => write!(f, "vehicle speed must be > 0 km/h, got {v}"),
            VehicleError::NegativeCost => write!(f, "vehicle costs cd and ct must be >= 0"),
        }
    }
}

impl core::error::Error for VehicleError {}

impl VehicleSpec {
    pub fn new(capacity: usize, cd: f64, ct: f64, speed: f64) -> Result<Self, VehicleError> {
        let v = Self {
            capacity,
            cd,
            ct,
            speed,
        };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<(), VehicleError> {
        if self.capacity == 0 {
            return Err(VehicleError::ZeroCapacity);
        }
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(VehicleError::InvalidSpeed(self.speed));
        }
        if !(self.cd >= 0.0 && self.ct >= 0.0 && self.cd.is_finite() && self.ct.is_finite()) {
            return Err(VehicleError::NegativeCost);
        }
        Ok(())
    }
    /// Cost of driving one arc: `Q * CD * d + CT * t`.
    pub fn arc_cost(&self, distance: f64, time: f64) -> f64 {
        self.capacity as f64 * self.cd * distance + self.ct * time
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DesignError {
    NoSites,
    NoCapacities,
    NoCandidates,
    InvalidHorizon(f64),
    Vehicle(VehicleError),
    /// Every (depot, capacity) pair failed; the evaluation table says why.
    AllFailed(Vec<CandidateEvaluation>),
}

impl fmt::Display for DesignError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DesignError::NoSites => write!(f, "no sites"),
            DesignError::NoCapacities => write!(f, "no vehicle capacities to evaluate"),
            DesignError::NoCandidates => write!(f, "no depot candidates to evaluate"),
            DesignError::InvalidHorizon(h) => write!(f, "horizon must be > 0 h, got {h}"),
            DesignError::Vehicle(e) => write!(f, "{e}"),
            DesignError::AllFailed(table) => {
                write!(f, "all {} design candidates failed", table.len())?;
                if let Some(CandidateEvaluation { outcome: Err(e), .. }) = table.first() {
                    write!(f, "; first: {e}")?;
                }
                Ok(())
            }
        }
    }
}

impl core::error::Error for DesignError {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Barycentre {
    pub point: Point,
    /// True when every weight was zero and the plain centroid was used.
    pub unweighted_fallback: bool,
}

/// Site positions averaged with weights `F_i(horizon)`.
pub fn barycentre_location(sites: &[Site], horizon: f64) -> Result<Barycentre, DesignError> {
    if sites.is_empty() {
        return Err(DesignError::NoSites);
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(DesignError::InvalidHorizon(horizon));
    }
    let weights: Vec<f64> = sites.iter().map(|s| s.model.cdf(horizon).unwrap_or(0.0)).collect();
    let total: f64 = weights.iter().sum();
    let (weights, total, fallback) = if total > 0.0 {
        (weights, total, false)
    } else {
        (alloc::vec![1.0; sites.len()], sites.len() as f64, true)
    };
    Ok(Barycentre {
        point: weighted_mean(sites.iter().map(|s| s.position), &weights, total),
        unweighted_fallback: fallback,
    })
}

fn weighted_mean(points: impl Iterator<Item = Point>, weights: &[f64], total: f64) -> Point {
    let (mut x, mut y) = (0.0, 0.0);
    for (p, w) in points.zip(weights) {
        let share = w / total;
        x += share * p.x;
        y += share * p.y;
    }
    Point::new(x, y)
}

/// Every distinct site position, sorted by `x` then `y`.
pub fn near_site_candidates(sites: &[Site]) -> Vec<Point> {
    let mut pts: Vec<Point> = sites.iter().map(|s| s.position).collect();
    pts.sort_by(Point::lex_cmp);
    pts.dedup();
    pts
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateEvaluation {
    pub depot: Point,
    pub capacity: usize,
    pub outcome: Result<CostBreakdown, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    pub depot: Point,
    pub capacity: usize,
    pub costs: CostBreakdown,
    pub result: OmcrResult,
    pub per_candidate: Vec<CandidateEvaluation>,
}

/// Runs the planning/routing loop for every (depot, capacity) pair and keeps
/// the cheapest. Pairs are visited by ascending capacity, then depot in
/// `x`-then-`y` order, and only a strictly lower total replaces the
/// incumbent.
pub fn optimize_design(
    sites: &[Site],
    capacities: &[usize],
    depot_candidates: &[Point],
    horizon: f64,
    vehicle: &VehicleSpec,
    config: &OmcrConfig,
) -> Result<DesignResult, DesignError> {
    if sites.is_empty() {
        return Err(DesignError::NoSites);
    }
    if capacities.is_empty() {
        return Err(DesignError::NoCapacities);
    }
    if depot_candidates.is_empty() {
        return Err(DesignError::NoCandidates);
    }
    let mut qs = capacities.to_vec();
    qs.sort_unstable();
    qs.dedup();
    let mut depots = depot_candidates.to_vec();
    depots.sort_by(Point::lex_cmp);
    depots.dedup();

    let mut table = Vec::with_capacity(qs.len() * depots.len());
    let mut best: Option<(Point, usize, OmcrResult)> = None;
    for &q in &qs {
        let spec = VehicleSpec::new(q, vehicle.cd, vehicle.ct, vehicle.speed).map_err(DesignError::Vehicle)?;
        for &depot in &depots {
            let outcome = run_omcr(sites, depot, &spec, horizon, config);
            table.push(CandidateEvaluation {
                depot,
                capacity: q,
                outcome: outcome.as_ref().map(|r| r.costs).map_err(OmcrError::to_string),
            });
            if let Ok(r) = outcome {
                if best.as_ref().map_or(true, |(_, _, b)| r.costs.total < b.costs.total) {
                    best = Some((depot, q, r));
                }
            }
        }
    }
    match best {
        Some((depot, capacity, result)) => Ok(DesignResult {
            depot,
            capacity,
            costs: result.costs,
            result,
            per_candidate: table,
        }),
        None => Err(DesignError::AllFailed(table)),
    }
}
