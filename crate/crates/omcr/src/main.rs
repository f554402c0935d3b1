use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use omcr::config::{parse_config, parse_duration, ConfigFile, DEFAULTS_TOML};
use omcr::expkit::{self, DepotMethod, ExpError, ScenarioConfig};
use omcr::manifest::RunManifest;
use omcr::output::{csv_bytes, emit, emit_study, num};
use omcr::tabular::{read_routing, write_routing};
use omcr_core::design::DesignResult;
use omcr_core::lhsa::validate_solution;

#[derive(Parser, Debug)]
#[command(
    name = "omcr",
    version,
    about = "Joint maintenance planning, routing and depot design"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Plan, route and design one generated instance.
    Solve(Common),
    /// Every penalty rate and horizon of the scenario, replicated.
    HorizonSweep(Common),
    /// Barycentre against near-site depot placement.
    DepotStudy(Common),
    /// Each vehicle capacity on its own while sites are added around a fixed depot.
    CapacityStudy {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 30)]
        added: usize,
        #[arg(long, default_value_t = 10)]
        step: usize,
    },
    /// Depots chosen on the initial `--n` sites, then sites added.
    ExtensionStudy {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 30)]
        added: usize,
        #[arg(long, default_value_t = 10)]
        step: usize,
    },
    /// Check a stored routing file against every routing constraint.
    Validate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario file; the shipped defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of production sites.
    #[arg(long)]
    n: Option<usize>,
    /// Radius of the site disc in km.
    #[arg(long = "radius-km", allow_negative_numbers = true)]
    radius_km: Option<f64>,
    /// Downtime penalty rate(s) in $/h, comma separated.
    #[arg(long, value_delimiter = ',')]
    cp: Vec<f64>,
    /// Vehicle capacity (or capacities), comma separated.
    #[arg(long, value_delimiter = ',')]
    q: Vec<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Schedule horizon(s) such as `2months` or `1 year`, comma separated.
    #[arg(long, value_delimiter = ',')]
    horizon: Vec<String>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long, value_parser = ["barycentre", "near-site"])]
    depot: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Infeasible(String),
    Invalid(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Infeasible(_) | Failure::Invalid(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Infeasible(_) => "infeasible",
            Failure::Invalid(_) => "invalid-solution",
            Failure::Internal(_) => "internal",
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Infeasible(m) | Failure::Invalid(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<ExpError> for Failure {
    fn from(e: ExpError) -> Self {
        match &e {
            ExpError::Invalid(_) => Failure::Usage(e.to_string()),
            ExpError::Design { infeasible: true, .. } | ExpError::TooManyFailures { infeasible: true, .. } => {
                Failure::Infeasible(e.to_string())
            }
            _ => Failure::Internal(e.to_string()),
        }
    }
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure::Internal(format!("i/o: {e}"))
}

impl Common {
    fn scenario(&self) -> Result<ScenarioConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => parse_config(path),
            None => ConfigFile::parse_str(DEFAULTS_TOML).and_then(|f| f.resolve()),
        }
        .map_err(|e| Failure::Usage(e.to_string()))?;
        if let Some(n) = self.n {
            cfg.n_sites = n;
        }
        if let Some(r) = self.radius_km {
            cfg.radius_km = r;
        }
        if !self.cp.is_empty() {
            cfg.cp = self.cp.clone();
        }
        if !self.q.is_empty() {
            cfg.capacities = self.q.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if !self.horizon.is_empty() {
            cfg.horizons_h = self
                .horizon
                .iter()
                .map(|h| parse_duration(h).map_err(|e| Failure::Usage(format!("--horizon: {e}"))))
                .collect::<Result<_, _>>()?;
        }
        if let Some(r) = self.replications {
            cfg.replications = r;
        }
        if let Some(d) = &self.depot {
            cfg.depot_method = if d == "near-site" {
                DepotMethod::NearSite
            } else {
                DepotMethod::Barycentre
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_manifest(dir: &Path, manifest: &mut RunManifest) -> Result<(), Failure> {
    manifest.outputs.push("manifest.json".into());
    std::fs::write(dir.join("manifest.json"), manifest.to_json() + "\n").map_err(io_failure)
}

fn run_study(
    command: &str,
    common: &Common,
    params: serde_json::Value,
    run: impl FnOnce(&ScenarioConfig) -> Result<expkit::StudyTable, ExpError>,
) -> Result<RunManifest, Failure> {
    let cfg = common.scenario()?;
    let mut manifest = RunManifest::new(command, &cfg, params);
    let table = run(&cfg)?;
    emit_study(&common.out, &command.replace('-', "_"), &table, &mut manifest).map_err(io_failure)?;
    write_manifest(&common.out, &mut manifest)?;
    Ok(manifest)
}

fn solve_outputs(manifest: &RunManifest, instance: &expkit::Instance, design: &DesignResult) -> Vec<(String, Vec<u8>)> {
    let r = &design.result;
    let c = &design.costs;
    let costs = csv_bytes(
        manifest,
        &[
            "depot_x",
            "depot_y",
            "capacity",
            "vehicles",
            "transport_cost",
            "operations_cost",
            "downtime_cost",
            "total_cost",
            "mean_availability",
            "iterations",
            "best_iteration",
        ],
        &[vec![
            num(design.depot.x),
            num(design.depot.y),
            design.capacity.to_string(),
            r.schedule.solution.fleet.to_string(),
            num(c.transport),
            num(c.operations),
            num(c.downtime),
            num(c.total),
            num(r.mean_availability()),
            r.iterations.to_string(),
            r.best_iteration.to_string(),
        ]],
    );

    let sites: Vec<Vec<String>> = instance
        .sites
        .iter()
        .zip(&r.plan.site_plans)
        .zip(&r.availability)
        .map(|((s, sp), a)| {
            vec![
                s.id.to_string(),
                num(s.position.x),
                num(s.position.y),
                num(s.model.eta()),
                num(s.model.beta()),
                sp.nop.to_string(),
                num(*a),
            ]
        })
        .collect();
    let sites = csv_bytes(
        manifest,
        &["site", "x", "y", "eta_h", "beta", "nop", "availability"],
        &sites,
    );

    let realized =
        omcr_core::omcr::realized_starts(&r.schedule.problem, &r.schedule.solution, &r.plan).unwrap_or_default();
    let mut plan_rows = Vec::new();
    for (i, sp) in r.plan.site_plans.iter().enumerate() {
        for o in 0..sp.nop {
            let ttd = &r.ttds[i][o];
            plan_rows.push(vec![
                instance.sites[i].id.to_string(),
                o.to_string(),
                num(sp.starts[o]),
                num(sp.windows[o].early),
                num(sp.windows[o].late),
                realized
                    .get(i)
                    .and_then(|row| row.get(o))
                    .map_or_else(String::new, |t| num(*t)),
                num(ttd.failure_prob),
                num(ttd.ttd),
            ]);
        }
    }
    let plan = csv_bytes(
        manifest,
        &[
            "site",
            "op",
            "planned_h",
            "early_h",
            "late_h",
            "realized_h",
            "failure_prob",
            "ttd_h",
        ],
        &plan_rows,
    );

    let trace_rows: Vec<Vec<String>> = r
        .trace
        .iter()
        .map(|t| {
            let nops: Vec<String> = t.nop.iter().map(usize::to_string).collect();
            vec![
                t.iteration.to_string(),
                num(t.costs.transport),
                num(t.costs.operations),
                num(t.costs.downtime),
                num(t.costs.total),
                nops.join(" "),
            ]
        })
        .collect();
    let trace = csv_bytes(
        manifest,
        &[
            "iteration",
            "transport_cost",
            "operations_cost",
            "downtime_cost",
            "total_cost",
            "nop",
        ],
        &trace_rows,
    );

    let design_rows: Vec<Vec<String>> = design
        .per_candidate
        .iter()
        .map(|cand| {
            let (t, o, d, tot, err) = match &cand.outcome {
                Ok(c) => (
                    num(c.transport),
                    num(c.operations),
                    num(c.downtime),
                    num(c.total),
                    String::new(),
                ),
                Err(e) => (String::new(), String::new(), String::new(), String::new(), e.clone()),
            };
            vec![
                num(cand.depot.x),
                num(cand.depot.y),
                cand.capacity.to_string(),
                t,
                o,
                d,
                tot,
                err,
            ]
        })
        .collect();
    let design_table = csv_bytes(
        manifest,
        &[
            "depot_x",
            "depot_y",
            "capacity",
            "transport_cost",
            "operations_cost",
            "downtime_cost",
            "total_cost",
            "error",
        ],
        &design_rows,
    );

    let mut routing = format!(
        "# tool: {}\n# command: {}\n# config_digest: {}\n# seed: {}\n",
        manifest.tool_version, manifest.command, manifest.config_digest, manifest.seed
    );
    routing.push_str(&write_routing(&r.schedule.problem, Some(&r.schedule.solution)));

    vec![
        ("solve_costs.csv".into(), costs),
        ("solve_sites.csv".into(), sites),
        ("solve_plan.csv".into(), plan),
        ("solve_trace.csv".into(), trace),
        ("solve_design.csv".into(), design_table),
        ("routing.txt".into(), routing.into_bytes()),
    ]
}

fn solve(common: &Common) -> Result<RunManifest, Failure> {
    let cfg = common.scenario()?;
    let mut manifest = RunManifest::new("solve", &cfg, json!({}));
    let (instance, design) = expkit::solve_single(&cfg)?;
    for (name, bytes) in solve_outputs(&manifest, &instance, &design) {
        emit(&common.out, &name, &bytes, &mut manifest).map_err(io_failure)?;
    }
    write_manifest(&common.out, &mut manifest)?;
    let c = &design.costs;
    println!(
        "depot ({:.3}, {:.3}) km, Q = {}, total {:.4} $/h (transport {:.4}, operations {:.4}, downtime {:.4})",
        design.depot.x, design.depot.y, design.capacity, c.total, c.transport, c.operations, c.downtime
    );
    Ok(manifest)
}

fn validate(input: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let text =
        std::fs::read_to_string(input).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", input.display())))?;
    let (problem, solution) = read_routing(&text).map_err(|e| Failure::Usage(format!("{}: {e}", input.display())))?;
    let solution = solution.ok_or_else(|| Failure::Usage(format!("{} holds no solution", input.display())))?;
    let report = validate_solution(&problem, &solution);
    let mut lines = vec!["constraint,name,status,element".to_string()];
    for check in &report.checks {
        let (status, element) = match &check.violation {
            None => ("ok", String::new()),
            Some(el) => ("violated", format!("{el:?}")),
        };
        lines.push(format!(
            "{},{},{status},\"{element}\"",
            check.constraint.number().map_or_else(String::new, |n| n.to_string()),
            check.constraint.name()
        ));
    }
    let body = lines.join("\n") + "\n";
    print!("{body}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(io_failure)?;
        std::fs::write(dir.join("validate_report.csv"), &body).map_err(io_failure)?;
    }
    if report.is_valid() {
        Ok(())
    } else {
        let failed: Vec<String> = report.failed().iter().map(|c| c.to_string()).collect();
        Err(Failure::Invalid(format!("violated: {}", failed.join("; "))))
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Solve(common) => solve(common).map(|_| ()),
        Command::HorizonSweep(common) => {
            run_study("horizon-sweep", common, json!({}), expkit::run_scenario).map(|_| ())
        }
        Command::DepotStudy(common) => run_study("depot-study", common, json!({}), expkit::depot_study).map(|_| ()),
        Command::CapacityStudy { common, added, step } => {
            let params = json!({ "added": added, "step": step });
            run_study("capacity-study", common, params, |c| {
                expkit::capacity_study(c, *added, *step)
            })
            .map(|_| ())
        }
        Command::ExtensionStudy { common, added, step } => {
            let params = json!({ "added": added, "step": step });
            run_study("extension-study", common, params, |c| {
                expkit::extension_study(c, c.n_sites, *added, *step)
            })
            .map(|_| ())
        }
        Command::Validate { input, out } => validate(input, out.as_deref()),
    }
}

fn command_name(cli: &Cli) -> &'static str {
    match cli.command {
        Command::Solve(_) => "solve",
        Command::HorizonSweep(_) => "horizon-sweep",
        Command::DepotStudy(_) => "depot-study",
        Command::CapacityStudy { .. } => "capacity-study",
        Command::ExtensionStudy { .. } => "extension-study",
        Command::Validate { .. } => "validate",
    }
}

fn report(command: &str, failure: &Failure) -> ExitCode {
    let record = json!({
        "command": command,
        "error": failure.kind(),
        "exit_code": failure.code(),
        "message": failure.message(),
    });
    eprintln!("{record}");
    ExitCode::from(failure.code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return report("", &Failure::Usage(e.kind().to_string()));
        }
    };
    let name = command_name(&cli);
    let outcome = std::panic::catch_unwind(|| dispatch(cli));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => report(name, &f),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            report(name, &Failure::Internal(msg))
        }
    }
}
