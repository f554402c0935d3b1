//! CSV tables. Every file opens with `#` metadata lines (tool, command,
//! configuration digest, seed), then a header row.

use std::io::Write;
use std::path::{Path, PathBuf};

use omcr_core::units::HOURS_PER_MONTH;

use crate::expkit::{CellKey, Metric, StudyTable};
use crate::manifest::RunManifest;

pub fn metadata_lines(manifest: &RunManifest) -> String {
    format!(
        "# tool: {}\n# command: {}\n# config_digest: {}\n# seed: {}\n",
        manifest.tool_version, manifest.command, manifest.config_digest, manifest.seed
    )
}

/// CSV bytes with the metadata preamble.
pub fn csv_bytes(manifest: &RunManifest, header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut buf = metadata_lines(manifest).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header).expect("in-memory write");
        for r in rows {
            w.write_record(r).expect("in-memory write");
        }
        w.flush().expect("in-memory write");
    }
    buf
}

pub fn num(v: f64) -> String {
    format!("{v}")
}

const AXES: [&str; 6] = ["n_sites", "cp", "horizon_h", "horizon_months", "method", "capacity"];

fn axes(key: &CellKey) -> Vec<String> {
    vec![
        key.n_sites.to_string(),
        num(key.cp),
        num(key.horizon_h),
        num(key.horizon_h / HOURS_PER_MONTH),
        key.method.label().to_string(),
        key.capacity.map_or_else(|| "best".to_string(), |q| q.to_string()),
    ]
}

/// One row per cell: axes, then `mean`/`half_width` per metric.
pub fn summary_csv(manifest: &RunManifest, table: &StudyTable) -> Vec<u8> {
    let mut header: Vec<String> = AXES.iter().map(|s| s.to_string()).collect();
    for m in Metric::ALL {
        header.push(format!("{}_mean", m.name()));
        header.push(format!("{}_half_width", m.name()));
    }
    header.push("replications".into());
    header.push("failures".into());
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            let mut row = axes(&r.key);
            for m in Metric::ALL {
                let s = r.stat(m);
                row.push(num(s.mean));
                row.push(num(s.half_width));
            }
            row.push(r.stat(Metric::Total).n.to_string());
            row.push(r.failures.to_string());
            row
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_bytes(manifest, &header, &rows)
}

/// One row per (cell, metric): plot-ready long format.
pub fn long_csv(manifest: &RunManifest, table: &StudyTable) -> Vec<u8> {
    let mut header: Vec<&str> = AXES.to_vec();
    header.extend(["metric", "mean", "half_width", "n"]);
    let mut rows = Vec::new();
    for r in &table.rows {
        for m in Metric::ALL {
            let s = r.stat(m);
            let mut row = axes(&r.key);
            row.extend([m.name().to_string(), num(s.mean), num(s.half_width), s.n.to_string()]);
            rows.push(row);
        }
    }
    csv_bytes(manifest, &header, &rows)
}

/// Every successful run.
pub fn raw_csv(manifest: &RunManifest, table: &StudyTable) -> Vec<u8> {
    let header = [
        "cell",
        "replication",
        "seed",
        "n_sites",
        "cp",
        "horizon_h",
        "method",
        "capacity",
        "depot_x",
        "depot_y",
        "transport_cost",
        "operations_cost",
        "downtime_cost",
        "total_cost",
        "availability",
        "mean_nop",
        "vehicles",
        "annual_km",
        "iterations",
    ];
    let rows: Vec<Vec<String>> = table
        .raw
        .iter()
        .map(|r| {
            vec![
                r.cell.to_string(),
                r.replication.to_string(),
                r.seed.to_string(),
                r.n_sites.to_string(),
                num(r.cp),
                num(r.horizon_h),
                r.method.label().to_string(),
                r.capacity.to_string(),
                num(r.depot_x),
                num(r.depot_y),
                num(r.transport),
                num(r.operations),
                num(r.downtime),
                num(r.total),
                num(r.availability),
                num(r.mean_nop),
                r.vehicles.to_string(),
                num(r.annual_km),
                r.iterations.to_string(),
            ]
        })
        .collect();
    csv_bytes(manifest, &header, &rows)
}

/// Runs that failed, with their error text.
pub fn failures_csv(manifest: &RunManifest, table: &StudyTable) -> Vec<u8> {
    let mut header: Vec<&str> = AXES.to_vec();
    header.extend(["replication", "infeasible", "message"]);
    let rows: Vec<Vec<String>> = table
        .failures
        .iter()
        .map(|f| {
            let mut row = axes(&f.key);
            row.extend([f.replication.to_string(), f.infeasible.to_string(), f.message.clone()]);
            row
        })
        .collect();
    csv_bytes(manifest, &header, &rows)
}

/// Writes `bytes` to `dir/name` and records the path in the manifest.
pub fn emit(dir: &Path, name: &str, bytes: &[u8], manifest: &mut RunManifest) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path)?;
    f.write_all(bytes)?;
    manifest.outputs.push(name.to_string());
    Ok(path)
}

/// Summary, long-format, raw and failure tables of one study.
pub fn emit_study(dir: &Path, stem: &str, table: &StudyTable, manifest: &mut RunManifest) -> std::io::Result<()> {
    let files = [
        (format!("{stem}_summary.csv"), summary_csv(manifest, table)),
        (format!("{stem}_long.csv"), long_csv(manifest, table)),
        (format!("{stem}_raw.csv"), raw_csv(manifest, table)),
        (format!("{stem}_failures.csv"), failures_csv(manifest, table)),
    ];
    for (name, bytes) in files {
        emit(dir, &name, &bytes, manifest)?;
    }
    Ok(())
}
