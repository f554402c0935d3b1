//! Seeded instance generation, replicated studies and confidence intervals.
//!
//! Every replication draws its own seed from a master ChaCha8 stream, so a
//! given `(seed, config)` pair always yields the same instances no matter how
//! many worker threads run them. Results are collected in replication order.

use std::f64::consts::PI;

use omcr_core::design::{barycentre_location, near_site_candidates, optimize_design, DesignResult, VehicleSpec};
use omcr_core::geometry::Point;
use omcr_core::mpa::{PlanConfig, Site};
use omcr_core::omcr::{run_omcr, CostBreakdown, FeedbackRule, OmcrConfig, OmcrResult};
use omcr_core::reliability::FailureModel;
use omcr_core::units::{months, years, HOURS_PER_YEAR};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Share of failed replications above which a study aborts.
pub const MAX_FAILURE_SHARE: f64 = 0.2;

#[derive(Debug, thiserror::Error)]
pub enum ExpError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("design failed: {message}")]
    Design { message: String, infeasible: bool },
    #[error("{failed} of {total} runs failed (limit {limit:.0}%); first failure: {first}")]
    TooManyFailures {
        failed: usize,
        total: usize,
        limit: f64,
        first: String,
        /// True when the failures are routing infeasibilities.
        infeasible: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DepotMethod {
    Barycentre,
    NearSite,
}

impl DepotMethod {
    pub fn label(&self) -> &'static str {
        match self {
            DepotMethod::Barycentre => "barycentre",
            DepotMethod::NearSite => "near-site",
        }
    }
}

/// Everything that defines a study. Times are hours, money dollars,
/// distances km.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n_sites: usize,
    pub radius_km: f64,
    pub eta_years: f64,
    /// Shape for even-indexed sites, then odd-indexed sites.
    pub betas: [f64; 2],
    pub mttr_h: f64,
    pub cr: f64,
    pub cp: Vec<f64>,
    pub horizons_h: Vec<f64>,
    pub capacities: Vec<usize>,
    pub speed_kmh: f64,
    pub cd: f64,
    pub ct: f64,
    pub depot_method: DepotMethod,
    pub replications: usize,
    pub seed: u64,
    pub rel_tol: f64,
    pub max_iter: usize,
    pub window_fraction: f64,
    pub feedback: FeedbackRule,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_sites: 10,
            radius_km: 50.0,
            eta_years: 1.0,
            betas: [2.0, 3.0],
            mttr_h: 3.0,
            cr: 100_000.0,
            cp: vec![100.0],
            horizons_h: [2.0, 4.0, 6.0, 8.0, 12.0, 18.0, 24.0]
                .iter()
                .map(|&m| months(m))
                .collect(),
            capacities: vec![4, 6, 8],
            speed_kmh: 80.0,
            cd: 2.0,
            ct: 30.0,
            depot_method: DepotMethod::Barycentre,
            replications: 10,
            seed: 1,
            rel_tol: 0.01,
            max_iter: 20,
            window_fraction: 0.25,
            feedback: FeedbackRule::ModelScaled,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ExpError> {
        let bad = |s: &str| Err(ExpError::Invalid(s.to_string()));
        if self.n_sites == 0 {
            return bad("n_sites must be >= 1");
        }
        if !(self.radius_km > 0.0) {
            return bad("radius must be > 0 km");
        }
        if !(self.eta_years > 0.0) {
            return bad("eta must be > 0");
        }
        if self.betas.iter().any(|&b| !(b >= 1.0)) {
            return bad("beta values must be >= 1");
        }
        if !(self.mttr_h > 0.0) {
            return bad("mttr must be > 0 h");
        }
        if !(self.cr >= 0.0) || self.cp.is_empty() || self.cp.iter().any(|&c| !(c >= 0.0)) {
            return bad("cr and every cp must be >= 0, with at least one cp");
        }
        if self.horizons_h.is_empty() || self.horizons_h.iter().any(|&h| !(h > 0.0 && h <= years(2.0) + 1e-9)) {
            return bad("horizons must lie in (0, 2] years");
        }
        if self.capacities.is_empty() || self.capacities.contains(&0) {
            return bad("capacities must be a nonempty set of values >= 1");
        }
        if !(self.speed_kmh > 0.0) || !(self.cd >= 0.0) || !(self.ct >= 0.0) {
            return bad("speed must be > 0 and cd, ct >= 0");
        }
        if self.replications == 0 {
            return bad("replications must be >= 1");
        }
        if !(0.0..=0.5).contains(&self.window_fraction) {
            return bad("window fraction must be in [0, 0.5]");
        }
        if self.max_iter == 0 || !(self.rel_tol >= 0.0) {
            return bad("max_iter must be >= 1 and rel_tol >= 0");
        }
        Ok(())
    }

    pub fn omcr_config(&self) -> OmcrConfig {
        OmcrConfig {
            rel_tol: self.rel_tol,
            max_iter: self.max_iter,
            feedback: self.feedback,
            plan: PlanConfig {
                window_fraction: self.window_fraction,
                ..PlanConfig::default()
            },
        }
    }

    /// Vehicle with the configured costs and speed and capacity `q`.
    pub fn vehicle(&self, q: usize) -> VehicleSpec {
        VehicleSpec {
            capacity: q,
            cd: self.cd,
            ct: self.ct,
            speed: self.speed_kmh,
        }
    }

    /// One seed per replication, drawn from the master seed.
    pub fn replication_seeds(&self) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.replications).map(|_| rng.random()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub seed: u64,
    pub sites: Vec<Site>,
}

impl Instance {
    /// Same sites with every penalty rate set to `cp`.
    pub fn with_cp(&self, cp: f64) -> Vec<Site> {
        self.sites.iter().cloned().map(|s| Site { cp, ..s }).collect()
    }
}

/// Sites uniform over the disc of radius `R` centred on the origin, with
/// shapes alternating between the two configured values. Drawing is
/// sequential, so the first `k` sites do not depend on `n_sites`.
pub fn generate_instance(seed: u64, config: &ScenarioConfig) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sites = (0..config.n_sites)
        .map(|k| {
            let r = config.radius_km * rng.random::<f64>().sqrt();
            let theta = 2.0 * PI * rng.random::<f64>();
            let beta = config.betas[k % 2];
            let model = FailureModel::from_years(config.eta_years, beta).expect("validated shape and scale");
            Site::new(
                k,
                Point::new(r * theta.cos(), r * theta.sin()),
                config.mttr_h,
                config.cr,
                config.cp[0],
                model,
            )
        })
        .collect();
    Instance { seed, sites }
}

/// Mean of a replicate sample with its 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicatedStat {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

impl ReplicatedStat {
    /// Student t quantile below 30 samples, normal 1.96 from 30 on. A single
    /// sample has half-width 0.
    pub fn from_samples(samples: &[f64]) -> ReplicatedStat {
        let n = samples.len();
        if n == 0 {
            return ReplicatedStat {
                mean: f64::NAN,
                half_width: f64::NAN,
                n,
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return ReplicatedStat {
                mean,
                half_width: 0.0,
                n,
            };
        }
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let quantile = if n < 30 {
            StudentsT::new(0.0, 1.0, (n - 1) as f64)
                .expect("positive degrees of freedom")
                .inverse_cdf(0.975)
        } else {
            1.96
        };
        ReplicatedStat {
            mean,
            half_width: quantile * (var / n as f64).sqrt(),
            n,
        }
    }

    pub fn low_confidence(&self) -> bool {
        self.n < 2
    }
}

/// Outcome of one planning/routing run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Index of the aggregated row this run belongs to.
    pub cell: usize,
    pub replication: usize,
    pub seed: u64,
    pub n_sites: usize,
    pub cp: f64,
    pub horizon_h: f64,
    pub method: DepotMethod,
    pub capacity: usize,
    pub depot_x: f64,
    pub depot_y: f64,
    pub transport: f64,
    pub operations: f64,
    pub downtime: f64,
    pub total: f64,
    pub availability: f64,
    pub mean_nop: f64,
    pub vehicles: usize,
    pub annual_km: f64,
    pub iterations: usize,
}

impl RunRecord {
    fn from_result(axes: RunAxes, depot: Point, capacity: usize, result: &OmcrResult) -> RunRecord {
        let CostBreakdown {
            transport,
            operations,
            downtime,
            total,
        } = result.costs;
        let nops = result.plan.nop_vector();
        RunRecord {
            cell: 0,
            replication: axes.replication,
            seed: axes.seed,
            n_sites: nops.len(),
            cp: axes.cp,
            horizon_h: axes.horizon_h,
            method: axes.method,
            capacity,
            depot_x: depot.x,
            depot_y: depot.y,
            transport,
            operations,
            downtime,
            total,
            availability: result.mean_availability(),
            mean_nop: nops.iter().sum::<usize>() as f64 / nops.len() as f64,
            vehicles: result.schedule.solution.fleet,
            annual_km: annual_distance(result),
            iterations: result.iterations,
        }
    }

    pub fn metric(&self, m: Metric) -> f64 {
        match m {
            Metric::Total => self.total,
            Metric::Transport => self.transport,
            Metric::Operations => self.operations,
            Metric::Downtime => self.downtime,
            Metric::Availability => self.availability,
            Metric::AnnualKm => self.annual_km,
            Metric::MeanNop => self.mean_nop,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct RunAxes {
    replication: usize,
    seed: u64,
    cp: f64,
    horizon_h: f64,
    method: DepotMethod,
}

/// Route kilometres of one horizon scaled to a year.
pub fn annual_distance(result: &OmcrResult) -> f64 {
    let problem = &result.schedule.problem;
    let km: f64 = result
        .schedule
        .solution
        .arc_set
        .iter()
        .map(|&(i, j)| problem.dist[i][j])
        .sum();
    km * HOURS_PER_YEAR / problem.horizon
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Total,
    Transport,
    Operations,
    Downtime,
    Availability,
    AnnualKm,
    MeanNop,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Total,
        Metric::Transport,
        Metric::Operations,
        Metric::Downtime,
        Metric::Availability,
        Metric::AnnualKm,
        Metric::MeanNop,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Total => "total_cost",
            Metric::Transport => "transport_cost",
            Metric::Operations => "operations_cost",
            Metric::Downtime => "downtime_cost",
            Metric::Availability => "availability",
            Metric::AnnualKm => "annual_km",
            Metric::MeanNop => "mean_nop",
        }
    }
}

/// Axes identifying one aggregated cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub n_sites: usize,
    pub cp: f64,
    pub horizon_h: f64,
    pub method: DepotMethod,
    /// `None` when each replication picked its own best capacity.
    pub capacity: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub key: CellKey,
    pub stats: Vec<(Metric, ReplicatedStat)>,
    pub failures: usize,
}

impl AggregateRow {
    pub fn stat(&self, m: Metric) -> ReplicatedStat {
        self.stats
            .iter()
            .find(|(k, _)| *k == m)
            .map(|(_, s)| *s)
            .expect("every metric is aggregated")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub replication: usize,
    pub key: CellKey,
    pub message: String,
    pub infeasible: bool,
}

/// Raw runs and their aggregation for one study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyTable {
    pub rows: Vec<AggregateRow>,
    pub raw: Vec<RunRecord>,
    pub failures: Vec<FailureRecord>,
}

impl StudyTable {
    pub fn find(&self, pred: impl Fn(&CellKey) -> bool) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| pred(&r.key))
    }
}

/// How the capacity of one cell is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
enum CapacityAxis {
    /// Best of the configured set, per replication.
    Optimized,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    n_sites: usize,
    cp: f64,
    horizon_h: f64,
    method: DepotMethod,
    capacity: CapacityAxis,
    /// Depot fixed ahead of time, keyed by replication, instead of chosen by `method`.
    fixed_depot: Option<usize>,
}

impl Cell {
    fn key(&self) -> CellKey {
        CellKey {
            n_sites: self.n_sites,
            cp: self.cp,
            horizon_h: self.horizon_h,
            method: self.method,
            capacity: match self.capacity {
                CapacityAxis::Optimized => None,
                CapacityAxis::Fixed(q) => Some(q),
            },
        }
    }
}

/// Candidate depots for `method` on these sites.
pub fn depot_candidates(method: DepotMethod, sites: &[Site], horizon: f64) -> Vec<Point> {
    match method {
        DepotMethod::Barycentre => vec![
            barycentre_location(sites, horizon)
                .expect("sites nonempty and horizon positive")
                .point,
        ],
        DepotMethod::NearSite => near_site_candidates(sites),
    }
}

fn run_cell(
    config: &ScenarioConfig,
    instance: &Instance,
    replication: usize,
    cell: &Cell,
    fixed_depots: &[Vec<Point>],
) -> Result<RunRecord, (String, bool)> {
    let sites: Vec<Site> = instance.with_cp(cell.cp).into_iter().take(cell.n_sites).collect();
    let axes = RunAxes {
        replication,
        seed: instance.seed,
        cp: cell.cp,
        horizon_h: cell.horizon_h,
        method: cell.method,
    };
    let omcr = config.omcr_config();
    let depots = match cell.fixed_depot {
        Some(slot) => vec![fixed_depots[replication][slot]],
        None => depot_candidates(cell.method, &sites, cell.horizon_h),
    };
    let capacities = match cell.capacity {
        CapacityAxis::Optimized => config.capacities.clone(),
        CapacityAxis::Fixed(q) => vec![q],
    };
    if depots.len() == 1 && capacities.len() == 1 {
        let q = capacities[0];
        return run_omcr(&sites, depots[0], &config.vehicle(q), cell.horizon_h, &omcr)
            .map(|r| RunRecord::from_result(axes, depots[0], q, &r))
            .map_err(|e| (e.to_string(), e.is_infeasible()));
    }
    optimize_design(
        &sites,
        &capacities,
        &depots,
        cell.horizon_h,
        &config.vehicle(capacities[0]),
        &omcr,
    )
    .map(|d| RunRecord::from_result(axes, d.depot, d.capacity, &d.result))
    .map_err(|e| {
        let infeasible = e.to_string().contains("routing failed");
        (e.to_string(), infeasible)
    })
}

fn run_cells(config: &ScenarioConfig, cells: &[Cell], fixed_depots: &[Vec<Point>]) -> Result<StudyTable, ExpError> {
    config.validate()?;
    let max_n = cells.iter().map(|c| c.n_sites).max().unwrap_or(config.n_sites);
    let gen_config = ScenarioConfig {
        n_sites: max_n,
        ..config.clone()
    };
    let seeds = config.replication_seeds();
    let instances: Vec<Instance> = seeds.iter().map(|&s| generate_instance(s, &gen_config)).collect();

    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.replications).map(move |r| (c, r)))
        .collect();
    let outcomes: Vec<Result<RunRecord, (String, bool)>> = jobs
        .par_iter()
        .map(|&(c, r)| run_cell(config, &instances[r], r, &cells[c], fixed_depots))
        .collect();

    let mut rows = Vec::with_capacity(cells.len());
    let mut raw = Vec::new();
    let mut failures = Vec::new();
    for (c, cell) in cells.iter().enumerate() {
        let mut ok = Vec::new();
        let mut failed = 0;
        for r in 0..config.replications {
            match &outcomes[c * config.replications + r] {
                Ok(rec) => ok.push(RunRecord { cell: c, ..rec.clone() }),
                Err((message, infeasible)) => {
                    failed += 1;
                    failures.push(FailureRecord {
                        replication: r,
                        key: cell.key(),
                        message: message.clone(),
                        infeasible: *infeasible,
                    });
                }
            }
        }
        let stats = Metric::ALL
            .iter()
            .map(|&m| {
                let xs: Vec<f64> = ok.iter().map(|rec| rec.metric(m)).collect();
                (m, ReplicatedStat::from_samples(&xs))
            })
            .collect();
        rows.push(AggregateRow {
            key: cell.key(),
            stats,
            failures: failed,
        });
        raw.extend(ok);
    }
    let total = jobs.len();
    if failures.len() as f64 > MAX_FAILURE_SHARE * total as f64 {
        return Err(ExpError::TooManyFailures {
            failed: failures.len(),
            total,
            limit: 100.0 * MAX_FAILURE_SHARE,
            first: failures[0].message.clone(),
            infeasible: failures.iter().all(|f| f.infeasible),
        });
    }
    Ok(StudyTable { rows, raw, failures })
}

/// Single instance generated from the master seed, first penalty rate and
/// first horizon, design chosen over the configured capacities.
pub fn solve_single(config: &ScenarioConfig) -> Result<(Instance, DesignResult), ExpError> {
    config.validate()?;
    let instance = generate_instance(config.seed, config);
    let sites = instance.with_cp(config.cp[0]);
    let horizon = config.horizons_h[0];
    let depots = depot_candidates(config.depot_method, &sites, horizon);
    let vehicle = config.vehicle(config.capacities[0]);
    match optimize_design(
        &sites,
        &config.capacities,
        &depots,
        horizon,
        &vehicle,
        &config.omcr_config(),
    ) {
        Ok(d) => Ok((instance, d)),
        Err(e) => {
            let message = e.to_string();
            Err(ExpError::Design {
                infeasible: message.contains("routing failed"),
                message,
            })
        }
    }
}

/// Every penalty rate × horizon, depot by the configured method, capacity
/// optimized per replication.
pub fn run_scenario(config: &ScenarioConfig) -> Result<StudyTable, ExpError> {
    let mut cells = Vec::new();
    for &cp in &config.cp {
        for &horizon_h in &config.horizons_h {
            cells.push(Cell {
                n_sites: config.n_sites,
                cp,
                horizon_h,
                method: config.depot_method,
                capacity: CapacityAxis::Optimized,
                fixed_depot: None,
            });
        }
    }
    run_cells(config, &cells, &[])
}

/// Both depot methods side by side, capacity optimized per replication.
pub fn depot_study(config: &ScenarioConfig) -> Result<StudyTable, ExpError> {
    let mut cells = Vec::new();
    for &cp in &config.cp {
        for &horizon_h in &config.horizons_h {
            for method in [DepotMethod::Barycentre, DepotMethod::NearSite] {
                cells.push(Cell {
                    n_sites: config.n_sites,
                    cp,
                    horizon_h,
                    method,
                    capacity: CapacityAxis::Optimized,
                    fixed_depot: None,
                });
            }
        }
    }
    run_cells(config, &cells, &[])
}

/// Every configured capacity run on its own. The depot is the barycentre of
/// the first `n_sites` sites and stays there while sites are added in steps
/// of `step` up to `n_sites + added`.
pub fn capacity_study(config: &ScenarioConfig, added: usize, step: usize) -> Result<StudyTable, ExpError> {
    config.validate()?;
    if step == 0 {
        return Err(ExpError::Invalid("step must be >= 1".into()));
    }
    let total_n = config.n_sites + added;
    let grown = ScenarioConfig {
        n_sites: total_n,
        ..config.clone()
    };
    let horizons = &config.horizons_h;
    // One depot slot per horizon: the barycentre weights depend on it.
    let depots: Vec<Vec<Point>> = config
        .replication_seeds()
        .iter()
        .map(|&seed| {
            let inst = generate_instance(seed, &grown);
            horizons
                .iter()
                .map(|&h| depot_candidates(DepotMethod::Barycentre, &inst.sites[..config.n_sites], h)[0])
                .collect()
        })
        .collect();
    let mut cells = Vec::new();
    for &cp in &config.cp {
        for (slot, &horizon_h) in horizons.iter().enumerate() {
            for n_sites in site_steps(config.n_sites, added, step) {
                for &q in &config.capacities {
                    cells.push(Cell {
                        n_sites,
                        cp,
                        horizon_h,
                        method: DepotMethod::Barycentre,
                        capacity: CapacityAxis::Fixed(q),
                        fixed_depot: Some(slot),
                    });
                }
            }
        }
    }
    run_cells(&grown, &cells, &depots)
}

/// `initial, initial + step, ...`, always ending at `initial + added`.
pub fn site_steps(initial: usize, added: usize, step: usize) -> Vec<usize> {
    let mut out = vec![initial];
    let mut n = initial;
    while n < initial + added {
        n = (n + step.max(1)).min(initial + added);
        out.push(n);
    }
    out
}

/// Depots chosen once on the first `initial_n` sites (both methods, first
/// cp, horizon and capacity), then kept while sites are added in steps of
/// `step` up to `initial_n + added`.
pub fn extension_study(
    config: &ScenarioConfig,
    initial_n: usize,
    added: usize,
    step: usize,
) -> Result<StudyTable, ExpError> {
    if initial_n == 0 || step == 0 {
        return Err(ExpError::Invalid("initial_n and step must be >= 1".into()));
    }
    let base = ScenarioConfig {
        n_sites: initial_n,
        ..config.clone()
    };
    let cp = config.cp[0];
    let horizon_h = config.horizons_h[0];
    let capacity = config.capacities[0];
    let methods = [DepotMethod::Barycentre, DepotMethod::NearSite];
    let setup: Vec<Cell> = methods
        .iter()
        .map(|&method| Cell {
            n_sites: initial_n,
            cp,
            horizon_h,
            method,
            capacity: CapacityAxis::Fixed(capacity),
            fixed_depot: None,
        })
        .collect();
    let chosen = run_cells(&base, &setup, &[])?;
    if !chosen.failures.is_empty() {
        return Err(ExpError::Invalid(format!(
            "depot selection failed on the initial sites: {}",
            chosen.failures[0].message
        )));
    }
    // chosen.raw is ordered by method, then replication.
    let reps = config.replications;
    let depots: Vec<Vec<Point>> = (0..reps)
        .map(|r| {
            (0..methods.len())
                .map(|m| {
                    let rec = &chosen.raw[m * reps + r];
                    Point::new(rec.depot_x, rec.depot_y)
                })
                .collect()
        })
        .collect();

    let mut cells = Vec::new();
    for n_sites in site_steps(initial_n, added, step) {
        for (slot, &method) in methods.iter().enumerate() {
            cells.push(Cell {
                n_sites,
                cp,
                horizon_h,
                method,
                capacity: CapacityAxis::Fixed(capacity),
                fixed_depot: Some(slot),
            });
        }
    }
    let grown = ScenarioConfig {
        n_sites: initial_n + added,
        ..config.clone()
    };
    run_cells(&grown, &cells, &depots)
}
