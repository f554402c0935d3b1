//! Maintenance planning: per-site operation count and start times minimizing
//! replacement plus downtime cost over the horizon, and the time windows
//! handed to routing.
//!
//! The horizon is one period of a repeating plan. The equipment is replaced
//! ("as good as new") at every operation, so operation `o` closes an interval
//! whose length is the gap since the previous replacement; the first operation
//! closes the interval that opened at the previous period's last operation
//! (`s_nop - horizon`). Gaps therefore always sum to the horizon.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::geometry::Point;
use crate::reliability::{expected_downtime_closed_form, DowntimeEstimate, FailureModel, ReliabilityError};

pub use crate::numeric::{golden_section_minimize, SearchError};

#[derive(Debug, Clone, PartialEq)]
pub enum PlanError {
    InvalidHorizon(f64),
    InvalidSite {
        id: usize,
        reason: &'static str,
    },
    InvalidConfig(&'static str),
    /// Cost inputs do not line up with the plan.
    ShapeMismatch {
        site: usize,
        expected: usize,
        found: usize,
    },
    Reliability(ReliabilityError),
    Search(SearchError),
}

impl fmt::Display for PlanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanError::InvalidHorizon(h) => write!(f, "horizon must be > 0 h, got {h}"),
            PlanError::InvalidSite { id, reason } => write!(f, "site {id}: {reason}"),
            PlanError::InvalidConfig(reason) => write!(f, "planning config: {reason}"),
            PlanError::ShapeMismatch { site, expected, found } => write!(
                f,
                "site index {site}: expected {expected} downtime entries, found {found}"
            ),
            PlanError::Reliability(e) => write!(f, "{e}"),
            PlanError::Search(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for PlanError {}

impl From<ReliabilityError> for PlanError {
    fn from(e: ReliabilityError) -> Self {
        PlanError::Reliability(e)
    }
}

impl From<SearchError> for PlanError {
    fn from(e: SearchError) -> Self {
        PlanError::Search(e)
    }
}

/// One production site with a single piece of equipment.
#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    pub id: usize,
    pub position: Point,
    /// Repair / replacement duration, hours.
    pub mttr: f64,
    /// Replacement cost, dollars.
    pub cr: f64,
    /// Unavailability penalty, dollars per hour.
    pub cp: f64,
    pub model: FailureModel,
    /// Optional hard window `[a, b]` (hours) for all of the site's operations.
    pub hard_window: Option<(f64, f64)>,
}

impl Site {
    pub fn new(id: usize, position: Point, mttr: f64, cr: f64, cp: f64, model: FailureModel) -> Self {
        Self {
            id,
            position,
            mttr,
            cr,
            cp,
            model,
            hard_window: None,
        }
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |reason| Err(PlanError::InvalidSite { id: self.id, reason });
        if !(self.mttr > 0.0 && self.mttr.is_finite()) {
            return bad("mttr must be > 0");
        }
        if !(self.cr >= 0.0 && self.cr.is_finite()) {
            return bad("cr must be >= 0");
        }
        if !(self.cp >= 0.0 && self.cp.is_finite()) {
            return bad("cp must be >= 0");
        }
        if let Some((a, b)) = self.hard_window {
            if !(a >= 0.0 && b > a) {
                return bad("hard window must satisfy 0 <= a < b");
            }
        }
        Ok(())
    }

    /// Allowed start range: `[0, horizon]` intersected with the hard window.
    pub fn start_range(&self, horizon: f64) -> (f64, f64) {
        match self.hard_window {
            Some((a, b)) => (a.max(0.0), b.min(horizon)),
            None => (0.0, horizon),
        }
    }
}

/// Symmetric tolerance window around a planned start, hours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub early: f64,
    pub late: f64,
}

impl Window {
    pub fn center(&self) -> f64 {
        0.5 * (self.early + self.late)
    }

    pub fn contains(&self, t: f64) -> bool {
        self.early <= t && t <= self.late
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SitePlan {
    pub nop: usize,
    pub starts: Vec<f64>,
    pub windows: Vec<Window>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaintenancePlan {
    pub site_plans: Vec<SitePlan>,
    pub horizon: f64,
}

impl MaintenancePlan {
    /// Total number of operations handed to routing.
    pub fn operation_count(&self) -> usize {
        self.site_plans.iter().map(|p| p.nop).sum()
    }

    pub fn nop_vector(&self) -> Vec<usize> {
        self.site_plans.iter().map(|p| p.nop).collect()
    }
}

/// How downtime observed in the previous planning round enters the cost of a
/// candidate plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TtdFeedback {
    /// No downtime: a vehicle is assumed to arrive instantly.
    Zero,
    /// Every candidate operation gets this TTD (hours).
    Broadcast(f64),
    /// Every candidate operation gets the model TTD of its own interval times
    /// this factor.
    Scaled(f64),
}

impl TtdFeedback {
    fn is_zero(&self) -> bool {
        match *self {
            TtdFeedback::Zero => true,
            TtdFeedback::Broadcast(c) | TtdFeedback::Scaled(c) => c == 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanConfig {
    /// Window half-width as a fraction of the smaller adjacent gap. At most 0.5.
    pub window_fraction: f64,
    /// Upper cap on the operation-count sweep.
    pub nop_cap: usize,
    /// Golden-section tolerance for start times, hours.
    pub start_tol: f64,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            window_fraction: 0.25,
            nop_cap: 200,
            start_tol: 0.25,
        }
    }
}

impl PlanConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        if !(0.0..=0.5).contains(&self.window_fraction) {
            return Err(PlanError::InvalidConfig("window_fraction must be in [0, 0.5]"));
        }
        if self.nop_cap == 0 {
            return Err(PlanError::InvalidConfig("nop_cap must be >= 1"));
        }
        if !(self.start_tol > 0.0) {
            return Err(PlanError::InvalidConfig("start_tol must be > 0"));
        }
        Ok(())
    }
}

/// `max(1, ceil(horizon / (2 mttr)))`, capped.
pub fn nop_max(site: &Site, horizon: f64, cap: usize) -> usize {
    let raw = libm::ceil(horizon / (2.0 * site.mttr));
    let raw = if raw.is_finite() && raw >= 1.0 { raw as usize } else { 1 };
    raw.clamp(1, cap.max(1))
}

/// Gap closed by each operation under the repeating-horizon convention.
pub fn closing_gaps(starts: &[f64], horizon: f64) -> Vec<f64> {
    let k = starts.len();
    (0..k)
        .map(|o| {
            if o == 0 {
                starts[0] + horizon - starts[k - 1]
            } else {
                starts[o] - starts[o - 1]
            }
        })
        .collect()
}

/// Downtime estimate of an interval of length `gap` after a replacement.
pub fn renewal_downtime(gap: f64, model: &FailureModel) -> Result<DowntimeEstimate, ReliabilityError> {
    if gap <= 0.0 {
        return Ok(DowntimeEstimate::ZERO);
    }
    expected_downtime_closed_form(0.0, gap, model)
}

/// Expected downtime penalty (dollars, not yet divided by the horizon) of one
/// interval of length `gap` under the given feedback.
fn interval_penalty(site: &Site, gap: f64, feedback: &TtdFeedback) -> Result<f64, PlanError> {
    if site.cp == 0.0 || feedback.is_zero() || gap <= 0.0 {
        return Ok(0.0);
    }
    let est = renewal_downtime(gap, &site.model)?;
    let weighted = match *feedback {
        TtdFeedback::Zero => 0.0,
        TtdFeedback::Broadcast(ttd) => est.failure_prob * ttd,
        TtdFeedback::Scaled(k) => k * est.weighted(),
    };
    Ok(site.cp * weighted)
}

/// Operations plus downtime cost rate ($/h) of one site for given starts.
pub fn site_cost(site: &Site, horizon: f64, starts: &[f64], feedback: &TtdFeedback) -> Result<f64, PlanError> {
    let mut total = site.cr * starts.len() as f64;
    for gap in closing_gaps(starts, horizon) {
        total += interval_penalty(site, gap, feedback)?;
    }
    Ok(total / horizon)
}

/// Equally spaced starts: equal gaps over the allowed range, half a gap in
/// from each end.
pub fn initial_starts(site: &Site, horizon: f64, nop: usize) -> Vec<f64> {
    let (lo, hi) = site.start_range(horizon);
    let step = (hi - lo) / nop as f64;
    (0..nop).map(|o| lo + (o as f64 + 0.5) * step).collect()
}

/// One coordinate-wise golden-section pass over the start times. A move is
/// kept only if it strictly lowers the site cost.
pub fn refine_starts(
    site: &Site,
    horizon: f64,
    starts: &mut [f64],
    feedback: &TtdFeedback,
    cfg: &PlanConfig,
) -> Result<(), PlanError> {
    let k = starts.len();
    if feedback.is_zero() || site.cp == 0.0 {
        return Ok(());
    }
    let (lo, hi) = site.start_range(horizon);
    for o in 0..k {
        let (lower, upper) = if k == 1 {
            (lo, hi)
        } else {
            let prev = if o == 0 { starts[k - 1] - horizon } else { starts[o - 1] };
            let next = if o + 1 == k { starts[0] + horizon } else { starts[o + 1] };
            ((prev + site.mttr).max(lo), (next - site.mttr).min(hi))
        };
        if upper - lower <= 2.0 * cfg.start_tol {
            continue;
        }
        // Only the two intervals adjacent to s_o move.
        let local = |x: f64, starts: &[f64]| -> Result<f64, PlanError> {
            let (before, after) = if k == 1 {
                (horizon, 0.0)
            } else {
                let prev = if o == 0 { starts[k - 1] - horizon } else { starts[o - 1] };
                let next = if o + 1 == k { starts[0] + horizon } else { starts[o + 1] };
                (x - prev, next - x)
            };
            Ok(interval_penalty(site, before, feedback)? + interval_penalty(site, after, feedback)?)
        };
        let current = local(starts[o], starts)?;
        let mut failure = None;
        let snapshot: Vec<f64> = starts.to_vec();
        let x = golden_section_minimize(
            |x| match local(x, &snapshot) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            },
            lower,
            upper,
            cfg.start_tol,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        if local(x, starts)? < current {
            starts[o] = x;
        }
    }
    Ok(())
}

/// Starts and cost rate of the best plan with exactly `nop` operations.
pub fn evaluate_candidate(
    site: &Site,
    horizon: f64,
    nop: usize,
    feedback: &TtdFeedback,
    cfg: &PlanConfig,
) -> Result<(f64, Vec<f64>), PlanError> {
    let mut starts = initial_starts(site, horizon, nop);
    refine_starts(site, horizon, &mut starts, feedback, cfg)?;
    let cost = site_cost(site, horizon, &starts, feedback)?;
    Ok((cost, starts))
}

/// Symmetric windows: half-width `w * min(adjacent gaps)`, shrunk to stay
/// inside the allowed start range.
pub fn windows_for(site: &Site, horizon: f64, starts: &[f64], fraction: f64) -> Vec<Window> {
    let (lo, hi) = site.start_range(horizon);
    let gaps = closing_gaps(starts, horizon);
    let k = starts.len();
    (0..k)
        .map(|o| {
            let after = gaps[(o + 1) % k];
            let g = gaps[o].min(after);
            let half = (fraction * g).min(starts[o] - lo).min(hi - starts[o]).max(0.0);
            Window {
                early: starts[o] - half,
                late: starts[o] + half,
            }
        })
        .collect()
}

/// Best plan for one site: integer sweep over `nop`, each candidate refined
/// by golden-section search. Ties go to the smaller `nop`.
pub fn plan_site(site: &Site, horizon: f64, feedback: &TtdFeedback, cfg: &PlanConfig) -> Result<SitePlan, PlanError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(PlanError::InvalidHorizon(horizon));
    }
    site.validate()?;
    cfg.validate()?;
    let (lo, hi) = site.start_range(horizon);
    if !(hi > lo) {
        return Err(PlanError::InvalidSite {
            id: site.id,
            reason: "hard window does not intersect the horizon",
        });
    }
    let top = nop_max(site, horizon, cfg.nop_cap);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for nop in 1..=top {
        if let Some((best_cost, _)) = &best {
            // Downtime is nonnegative, so replacements alone bound the cost.
            if site.cr * nop as f64 / horizon >= *best_cost {
                break;
            }
        }
        let (cost, starts) = evaluate_candidate(site, horizon, nop, feedback, cfg)?;
        if best.as_ref().map_or(true, |(c, _)| cost < *c) {
            best = Some((cost, starts));
        }
    }
    let (_, starts) = best.unwrap_or_else(|| (0.0, vec![0.5 * (lo + hi)]));
    let windows = windows_for(site, horizon, &starts, cfg.window_fraction);
    Ok(SitePlan {
        nop: starts.len(),
        starts,
        windows,
    })
}

/// Plans every site independently.
pub fn plan_all(
    sites: &[Site],
    horizon: f64,
    feedback: &[TtdFeedback],
    cfg: &PlanConfig,
) -> Result<MaintenancePlan, PlanError> {
    if feedback.len() != sites.len() {
        return Err(PlanError::ShapeMismatch {
            site: 0,
            expected: sites.len(),
            found: feedback.len(),
        });
    }
    let site_plans = sites
        .iter()
        .zip(feedback)
        .map(|(s, fb)| plan_site(s, horizon, fb, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MaintenancePlan { site_plans, horizon })
}

/// Operations and downtime cost rates ($/h) of a plan given per-operation
/// downtime estimates (one row per site, one entry per operation).
pub fn maintenance_cost(
    plan: &MaintenancePlan,
    sites: &[Site],
    ttds: &[Vec<DowntimeEstimate>],
) -> Result<(f64, f64), PlanError> {
    if sites.len() != plan.site_plans.len() || ttds.len() != plan.site_plans.len() {
        return Err(PlanError::ShapeMismatch {
            site: 0,
            expected: plan.site_plans.len(),
            found: sites.len().min(ttds.len()),
        });
    }
    let mut operations = 0.0;
    let mut downtime = 0.0;
    for (i, ((sp, site), row)) in plan.site_plans.iter().zip(sites).zip(ttds).enumerate() {
        if row.len() != sp.nop {
            return Err(PlanError::ShapeMismatch {
                site: i,
                expected: sp.nop,
                found: row.len(),
            });
        }
        operations += site.cr * sp.nop as f64;
        downtime += row.iter().map(|d| site.cp * d.weighted()).sum::<f64>();
    }
    Ok((operations / plan.horizon, downtime / plan.horizon))
}
