//! Planning, routing and design layer for distributed maintenance of
//! geo-distributed production sites.
//!
//! A central workshop (the depot) holds spare parts; a fleet of capacitated
//! vehicles carries them to sites whose equipment follows a Weibull
//! time-to-failure law. The crate chains:
//!
//! - [`mpa`]: per-site operation count and start times (operations + downtime cost),
//! - [`lhsa`]: capacitated routing with time windows over all planned operations,
//! - [`omcr`]: the fixed-point loop feeding realized downtime back into planning,
//! - [`design`]: depot location and vehicle capacity selection.
//!
//! Everything here is `no_std` with `alloc`; file formats, experiments and the
//! command line live in the companion `omcr` crate.
//!
//! Units are hours, dollars and kilometres throughout. See [`units`].
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod design;
pub mod geometry;
pub mod lhsa;
pub mod mpa;
pub mod numeric;
pub mod omcr;
pub mod reliability;
pub mod units;

pub use design::{DesignResult, VehicleSpec};
pub use geometry::Point;
pub use lhsa::{RoutingProblem, RoutingSolution};
pub use mpa::{MaintenancePlan, Site, SitePlan};
pub use omcr::{CostBreakdown, OmcrConfig, OmcrResult};
pub use reliability::{DowntimeEstimate, FailureModel};
