//! Plain-text routing problems and solutions.
//!
//! One comma-separated record per line, keyed by its first field:
//!
//! ```text
//! # comment
//! horizon_h,4392
//! capacity,4
//! cd,2
//! ct,30
//! speed_kmh,80
//! fleet,3
//! depot,<x>,<y>
//! node,<k>,<site>,<site_id>,<op_index>,<service_h>,<early_h>,<late_h>,<planned_h>,<demand>
//! dist,<i>,<j>,<km>,<hours>            one per unordered pair i < j
//! route,<r>,0,<k>,...,0
//! arc,<i>,<j>                          one per traversed arc
//! op,<k>,<load>,<start_h>
//! vehicles,<m>
//! transport_cost,<$/h>
//! ```
//!
//! Numbers are written in shortest round-trip form, so writing and reading
//! back reproduces every value bit for bit.

use std::fmt::Write as _;

use omcr_core::design::VehicleSpec;
use omcr_core::geometry::Point;
use omcr_core::lhsa::{OperationNode, RoutingProblem, RoutingSolution};

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

pub fn write_routing(problem: &RoutingProblem, solution: Option<&RoutingSolution>) -> String {
    let mut out = String::from("# omcr routing v1\n");
    let v = &problem.vehicle;
    let _ = writeln!(out, "horizon_h,{}", problem.horizon);
    let _ = writeln!(out, "capacity,{}", v.capacity);
    let _ = writeln!(out, "cd,{}", v.cd);
    let _ = writeln!(out, "ct,{}", v.ct);
    let _ = writeln!(out, "speed_kmh,{}", v.speed);
    let _ = writeln!(out, "fleet,{}", problem.fleet);
    let _ = writeln!(out, "depot,{},{}", problem.depot.x, problem.depot.y);
    for (k, op) in problem.operations.iter().enumerate() {
        let _ = writeln!(
            out,
            "node,{},{},{},{},{},{},{},{},{}",
            k + 1,
            op.site,
            op.site_id,
            op.op_index,
            op.service,
            op.early,
            op.late,
            op.planned,
            op.demand
        );
    }
    let n = problem.n();
    for i in 0..=n {
        for j in i + 1..=n {
            let _ = writeln!(out, "dist,{i},{j},{},{}", problem.dist[i][j], problem.time[i][j]);
        }
    }
    if let Some(sol) = solution {
        for (r, route) in sol.routes.iter().enumerate() {
            let nodes: Vec<String> = route.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "route,{r},{}", nodes.join(","));
        }
        for (i, j) in &sol.arc_set {
            let _ = writeln!(out, "arc,{i},{j}");
        }
        for (k, (y, s)) in sol.loads.iter().zip(&sol.times).enumerate() {
            let _ = writeln!(out, "op,{},{y},{s}", k + 1);
        }
        let _ = writeln!(out, "vehicles,{}", sol.fleet);
        let _ = writeln!(out, "transport_cost,{}", sol.transport_cost);
    }
    out
}

struct Fields<'a> {
    line: usize,
    parts: Vec<&'a str>,
}

impl Fields<'_> {
    fn err(&self, message: impl Into<String>) -> FormatError {
        FormatError {
            line: self.line,
            message: message.into(),
        }
    }

    fn expect_len(&self, n: usize) -> Result<(), FormatError> {
        if self.parts.len() == n {
            Ok(())
        } else {
            Err(self.err(format!(
                "`{}` needs {} fields, found {}",
                self.parts[0],
                n,
                self.parts.len()
            )))
        }
    }

    fn get<T: std::str::FromStr>(&self, idx: usize) -> Result<T, FormatError> {
        let raw = self
            .parts
            .get(idx)
            .ok_or_else(|| self.err(format!("missing field {idx}")))?;
        raw.trim()
            .parse()
            .map_err(|_| self.err(format!("cannot parse field {idx} ({raw:?})")))
    }
}

/// Reads a file written by [`write_routing`]. The solution part is `None`
/// when the file carries no route, arc or op rows.
pub fn read_routing(text: &str) -> Result<(RoutingProblem, Option<RoutingSolution>), FormatError> {
    let mut horizon = None;
    let mut capacity = None;
    let (mut cd, mut ct, mut speed) = (None, None, None);
    let mut fleet = None;
    let mut depot = None;
    let mut nodes: Vec<(usize, OperationNode)> = Vec::new();
    let mut dists: Vec<(usize, usize, f64, f64, usize)> = Vec::new();
    let mut routes: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut arcs = Vec::new();
    let mut ops: Vec<(usize, usize, f64, usize)> = Vec::new();
    let mut vehicles = None;
    let mut transport = None;
    let mut has_solution = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f = Fields {
            line: idx + 1,
            parts: line.split(',').map(str::trim).collect(),
        };
        match f.parts[0] {
            "horizon_h" => {
                f.expect_len(2)?;
                horizon = Some(f.get::<f64>(1)?);
            }
            "capacity" => {
                f.expect_len(2)?;
                capacity = Some(f.get::<usize>(1)?);
            }
            "cd" => {
                f.expect_len(2)?;
                cd = Some(f.get::<f64>(1)?);
            }
            "ct" => {
                f.expect_len(2)?;
                ct = Some(f.get::<f64>(1)?);
            }
            "speed_kmh" => {
                f.expect_len(2)?;
                speed = Some(f.get::<f64>(1)?);
            }
            "fleet" => {
                f.expect_len(2)?;
                fleet = Some(f.get::<usize>(1)?);
            }
            "depot" => {
                f.expect_len(3)?;
                depot = Some(Point::new(f.get(1)?, f.get(2)?));
            }
            "node" => {
                f.expect_len(10)?;
                let node = OperationNode {
                    site: f.get(2)?,
                    site_id: f.get(3)?,
                    op_index: f.get(4)?,
                    service: f.get(5)?,
                    early: f.get(6)?,
                    late: f.get(7)?,
                    planned: f.get(8)?,
                    demand: f.get(9)?,
                };
                nodes.push((f.get(1)?, node));
            }
            "dist" => {
                f.expect_len(5)?;
                dists.push((f.get(1)?, f.get(2)?, f.get(3)?, f.get(4)?, f.line));
            }
            "route" => {
                has_solution = true;
                if f.parts.len() < 3 {
                    return Err(f.err("route needs an index and nodes"));
                }
                let seq = (2..f.parts.len())
                    .map(|i| f.get(i))
                    .collect::<Result<Vec<usize>, _>>()?;
                routes.push((f.get(1)?, seq));
            }
            "arc" => {
                has_solution = true;
                f.expect_len(3)?;
                arcs.push((f.get::<usize>(1)?, f.get::<usize>(2)?));
            }
            "op" => {
                has_solution = true;
                f.expect_len(4)?;
                ops.push((f.get(1)?, f.get(2)?, f.get(3)?, f.line));
            }
            "vehicles" => {
                has_solution = true;
                f.expect_len(2)?;
                vehicles = Some(f.get::<usize>(1)?);
            }
            "transport_cost" => {
                has_solution = true;
                f.expect_len(2)?;
                transport = Some(f.get::<f64>(1)?);
            }
            other => return Err(f.err(format!("unknown record `{other}`"))),
        }
    }

    let missing = |what: &str| FormatError {
        line: 0,
        message: format!("missing `{what}` record"),
    };
    let n = nodes.len();
    nodes.sort_by_key(|(k, _)| *k);
    for (pos, (k, _)) in nodes.iter().enumerate() {
        if *k != pos + 1 {
            return Err(FormatError {
                line: 0,
                message: format!("node ids must be 1..={n} without gaps"),
            });
        }
    }
    let mut dist = vec![vec![0.0; n + 1]; n + 1];
    let mut time = vec![vec![0.0; n + 1]; n + 1];
    let mut seen = vec![vec![false; n + 1]; n + 1];
    for (i, j, d, t, line) in dists {
        if !(i < j && j <= n) || seen[i][j] {
            return Err(FormatError {
                line,
                message: format!("bad or repeated dist pair ({i}, {j})"),
            });
        }
        seen[i][j] = true;
        dist[i][j] = d;
        dist[j][i] = d;
        time[i][j] = t;
        time[j][i] = t;
    }
    if let Some((i, j)) = (0..=n)
        .flat_map(|i| (i + 1..=n).map(move |j| (i, j)))
        .find(|&(i, j)| !seen[i][j])
    {
        return Err(FormatError {
            line: 0,
            message: format!("missing dist pair ({i}, {j})"),
        });
    }

    let problem = RoutingProblem {
        depot: depot.ok_or_else(|| missing("depot"))?,
        operations: nodes.into_iter().map(|(_, op)| op).collect(),
        dist,
        time,
        vehicle: VehicleSpec {
            capacity: capacity.ok_or_else(|| missing("capacity"))?,
            cd: cd.ok_or_else(|| missing("cd"))?,
            ct: ct.ok_or_else(|| missing("ct"))?,
            speed: speed.ok_or_else(|| missing("speed_kmh"))?,
        },
        fleet: fleet.ok_or_else(|| missing("fleet"))?,
        horizon: horizon.ok_or_else(|| missing("horizon_h"))?,
    };
    if !has_solution {
        return Ok((problem, None));
    }

    routes.sort_by_key(|(r, _)| *r);
    let mut loads = vec![0; n];
    let mut times = vec![0.0; n];
    for (k, y, s, line) in ops {
        if k == 0 || k > n {
            return Err(FormatError {
                line,
                message: format!("op id {k} outside 1..={n}"),
            });
        }
        loads[k - 1] = y;
        times[k - 1] = s;
    }
    let solution = RoutingSolution {
        routes: routes.into_iter().map(|(_, r)| r).collect(),
        arc_set: arcs,
        loads,
        times,
        fleet: vehicles.ok_or_else(|| missing("vehicles"))?,
        transport_cost: transport.ok_or_else(|| missing("transport_cost"))?,
    };
    Ok((problem, Some(solution)))
}
