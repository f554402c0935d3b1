//! TOML scenario files.
//!
//! Dimensioned values are strings carrying their unit (`"50 km"`,
//! `"2 months"`, `"3h"`, `"80 km/h"`); money is a bare number of dollars.
//! Unknown keys are rejected, and every error names the offending key.

use std::fmt;
use std::path::Path;

use omcr_core::omcr::FeedbackRule;
use omcr_core::units::{days, months, years};
use serde::{Deserialize, Serialize};

use crate::expkit::{DepotMethod, ScenarioConfig};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Key { path: String, message: String },
}

impl ConfigError {
    fn key(path: &str, message: impl fmt::Display) -> Self {
        ConfigError::Key {
            path: path.to_string(),
            message: message.to_string(),
        }
    }
}

/// A list of values, or a single value standing for a one-element list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SitesSection {
    pub count: usize,
    pub radius: String,
    pub eta: String,
    pub betas: [f64; 2],
    pub mttr: String,
    pub replacement_cost: f64,
    pub penalty_cost: OneOrMany<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehiclesSection {
    pub capacities: OneOrMany<usize>,
    pub speed: String,
    pub cost_per_km: f64,
    pub cost_per_hour: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub horizons: OneOrMany<String>,
    pub depot: DepotMethod,
    pub replications: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeedbackName {
    ModelScaled,
    MeanBroadcast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub rel_tol: f64,
    pub max_iter: usize,
    pub window_fraction: f64,
    pub feedback: FeedbackName,
}

/// On-disk layout of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub sites: SitesSection,
    pub vehicles: VehiclesSection,
    pub study: StudySection,
    pub solver: SolverSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Length,
    Duration,
    Speed,
}

impl Dimension {
    fn describe(self) -> &'static str {
        match self {
            Dimension::Length => "a length such as \"50 km\"",
            Dimension::Duration => "a duration such as \"2 months\" or \"3 h\"",
            Dimension::Speed => "a speed such as \"80 km/h\"",
        }
    }
}

/// Splits `"2.5months"` / `"2.5 months"` into number and unit.
fn split_quantity(text: &str) -> Option<(f64, String)> {
    let t = text.trim();
    let idx = t
        .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
        .unwrap_or(t.len());
    // An exponent marker directly followed by letters belongs to the unit.
    let (mut num, mut unit) = t.split_at(idx);
    if num.ends_with(['e', 'E']) {
        num = &num[..num.len() - 1];
        unit = &t[num.len()..];
    }
    let value: f64 = num.trim().parse().ok()?;
    Some((value, unit.trim().to_ascii_lowercase()))
}

fn parse_quantity(path: &str, text: &str, dim: Dimension) -> Result<f64, ConfigError> {
    let (value, unit) = split_quantity(text)
        .ok_or_else(|| ConfigError::key(path, format!("cannot read {text:?} as {}", dim.describe())))?;
    let converted = match (dim, unit.as_str()) {
        (Dimension::Length, "km") => Some(value),
        (Dimension::Length, "m") => Some(value / 1000.0),
        (Dimension::Duration, "h" | "hour" | "hours") => Some(value),
        (Dimension::Duration, "d" | "day" | "days") => Some(days(value)),
        (Dimension::Duration, "month" | "months") => Some(months(value)),
        (Dimension::Duration, "y" | "year" | "years") => Some(years(value)),
        (Dimension::Speed, "km/h" | "kmh") => Some(value),
        _ => None,
    };
    let v = converted.ok_or_else(|| {
        let shown = if unit.is_empty() {
            "no unit".to_string()
        } else {
            format!("unit {unit:?}")
        };
        ConfigError::key(path, format!("{text:?} has {shown}; expected {}", dim.describe()))
    })?;
    if !v.is_finite() {
        return Err(ConfigError::key(path, "value must be finite"));
    }
    Ok(v)
}

/// Duration in hours from a string such as `"2 months"`.
pub fn parse_duration(text: &str) -> Result<f64, ConfigError> {
    parse_quantity("duration", text, Dimension::Duration)
}

fn positive(path: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::key(path, format!("must be > 0, got {v}")))
    }
}

fn non_negative(path: &str, v: f64) -> Result<f64, ConfigError> {
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::key(path, format!("must be >= 0, got {v}")))
    }
}

impl ConfigFile {
    pub fn parse_str(text: &str) -> Result<ConfigFile, ConfigError> {
        let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::key("<document>", e))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let message = e.inner().message().to_string();
            ConfigError::key(if path == "." { "<document>" } else { &path }, message)
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config structs serialize")
    }

    /// Checks every value and converts to canonical units.
    pub fn resolve(&self) -> Result<ScenarioConfig, ConfigError> {
        let s = &self.sites;
        if s.count == 0 {
            return Err(ConfigError::key("sites.count", "must be >= 1"));
        }
        let radius = positive(
            "sites.radius",
            parse_quantity("sites.radius", &s.radius, Dimension::Length)?,
        )?;
        let eta_h = positive("sites.eta", parse_quantity("sites.eta", &s.eta, Dimension::Duration)?)?;
        for (k, b) in s.betas.iter().enumerate() {
            if !(*b >= 1.0) {
                return Err(ConfigError::key(
                    &format!("sites.betas[{k}]"),
                    format!("must be >= 1, got {b}"),
                ));
            }
        }
        let mttr = positive(
            "sites.mttr",
            parse_quantity("sites.mttr", &s.mttr, Dimension::Duration)?,
        )?;
        let cr = non_negative("sites.replacement_cost", s.replacement_cost)?;
        let cp = s.penalty_cost.to_vec();
        if cp.is_empty() {
            return Err(ConfigError::key("sites.penalty_cost", "needs at least one value"));
        }
        for (k, &c) in cp.iter().enumerate() {
            non_negative(&format!("sites.penalty_cost[{k}]"), c)?;
        }

        let v = &self.vehicles;
        let capacities = v.capacities.to_vec();
        if capacities.is_empty() || capacities.contains(&0) {
            return Err(ConfigError::key("vehicles.capacities", "needs values >= 1"));
        }
        let speed = positive(
            "vehicles.speed",
            parse_quantity("vehicles.speed", &v.speed, Dimension::Speed)?,
        )?;
        let cd = non_negative("vehicles.cost_per_km", v.cost_per_km)?;
        let ct = non_negative("vehicles.cost_per_hour", v.cost_per_hour)?;

        let st = &self.study;
        let horizons_h = st
            .horizons
            .to_vec()
            .iter()
            .enumerate()
            .map(|(k, h)| {
                let path = format!("study.horizons[{k}]");
                let v = positive(&path, parse_quantity(&path, h, Dimension::Duration)?)?;
                if v > years(2.0) + 1e-9 {
                    return Err(ConfigError::key(&path, format!("{h:?} exceeds 2 years")));
                }
                Ok(v)
            })
            .collect::<Result<Vec<_>, _>>()?;
        if horizons_h.is_empty() {
            return Err(ConfigError::key("study.horizons", "needs at least one value"));
        }
        if st.replications == 0 {
            return Err(ConfigError::key("study.replications", "must be >= 1"));
        }

        let so = &self.solver;
        non_negative("solver.rel_tol", so.rel_tol)?;
        if so.max_iter == 0 {
            return Err(ConfigError::key("solver.max_iter", "must be >= 1"));
        }
        if !(0.0..=0.5).contains(&so.window_fraction) {
            return Err(ConfigError::key("solver.window_fraction", "must lie in [0, 0.5]"));
        }

        Ok(ScenarioConfig {
            n_sites: s.count,
            radius_km: radius,
            eta_years: eta_h / years(1.0),
            betas: s.betas,
            mttr_h: mttr,
            cr,
            cp,
            horizons_h,
            capacities,
            speed_kmh: speed,
            cd,
            ct,
            depot_method: st.depot,
            replications: st.replications,
            seed: st.seed,
            rel_tol: so.rel_tol,
            max_iter: so.max_iter,
            window_fraction: so.window_fraction,
            feedback: match so.feedback {
                FeedbackName::ModelScaled => FeedbackRule::ModelScaled,
                FeedbackName::MeanBroadcast => FeedbackRule::MeanBroadcast,
            },
        })
    }

    /// File form of a resolved config, every quantity in canonical units.
    pub fn from_scenario(c: &ScenarioConfig) -> ConfigFile {
        ConfigFile {
            sites: SitesSection {
                count: c.n_sites,
                radius: format!("{} km", c.radius_km),
                eta: format!("{} years", c.eta_years),
                betas: c.betas,
                mttr: format!("{} h", c.mttr_h),
                replacement_cost: c.cr,
                penalty_cost: OneOrMany::Many(c.cp.clone()),
            },
            vehicles: VehiclesSection {
                capacities: OneOrMany::Many(c.capacities.clone()),
                speed: format!("{} km/h", c.speed_kmh),
                cost_per_km: c.cd,
                cost_per_hour: c.ct,
            },
            study: StudySection {
                horizons: OneOrMany::Many(c.horizons_h.iter().map(|h| format!("{h} h")).collect()),
                depot: c.depot_method,
                replications: c.replications,
                seed: c.seed,
            },
            solver: SolverSection {
                rel_tol: c.rel_tol,
                max_iter: c.max_iter,
                window_fraction: c.window_fraction,
                feedback: match c.feedback {
                    FeedbackRule::ModelScaled => FeedbackName::ModelScaled,
                    FeedbackRule::MeanBroadcast => FeedbackName::MeanBroadcast,
                },
            },
        }
    }
}

/// Reads, checks and resolves a scenario file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ConfigFile::parse_str(&text)?.resolve()
}

/// The scenario file shipped with the repository (site, equipment and
/// vehicle data of the reference case study).
pub const DEFAULTS_TOML: &str = include_str!("../../../configs/defaults.toml");
