//! Scenario runner behind the `pseudo-paths` binary.
//!
//! A run resolves an [`ExperimentConfig`] from defaults, an optional JSON
//! config file and command-line flags, computes the scenario's rows and
//! writes them as CSV or JSON.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

pub mod config;
pub mod report;
pub mod scenarios;

pub use config::{ExperimentConfig, Format, Overrides, Parameters, Scenario};
pub use report::{Row, RunReport};

/// Environment variable naming the directory for reports written without `--out`.
pub const OUT_DIR_ENV: &str = "PSEUDO_PATHS_OUT_DIR";
/// Directory used when neither `--out` nor [`OUT_DIR_ENV`] is set.
pub const DEFAULT_OUT_DIR: &str = "pseudo-paths-out";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("scenario {scenario}: {message}")]
    Library { scenario: Scenario, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// Every error maps to exit status 2.
    pub fn exit_code(&self) -> i32 {
        2
    }
}

/// Runs the scenario and times it.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let rows = scenarios::rows(cfg)?;
    let mut report = RunReport::new(cfg.scenario, cfg.parameters.clone(), rows)?;
    report.duration_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Where the report goes: `--out`, else `$PSEUDO_PATHS_OUT_DIR/<scenario>.<ext>`,
/// else `pseudo-paths-out/<scenario>.<ext>`.
pub fn output_path(cfg: &ExperimentConfig) -> PathBuf {
    if let Some(p) = &cfg.out {
        return p.clone();
    }
    let dir = std::env::var_os(OUT_DIR_ENV)
        .filter(|d| !d.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    dir.join(format!(
        "{}.{}",
        cfg.scenario.name(),
        cfg.format.extension()
    ))
}

pub fn write_report(report: &RunReport, format: Format, path: &Path) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    match format {
        Format::Json => std::fs::write(path, report.to_json()?).map_err(io),
        Format::Csv => report.write_csv(std::fs::File::create(path).map_err(io)?),
    }
}

#[derive(Debug, Serialize)]
struct ParamEntry {
    name: &'static str,
    #[serde(rename = "type")]
    kind: &'static str,
    default: String,
    description: &'static str,
}

#[derive(Debug, Serialize)]
struct ScenarioEntry {
    name: &'static str,
    description: &'static str,
    parameters: Vec<ParamEntry>,
}

fn catalogue() -> Vec<ScenarioEntry> {
    Scenario::ALL
        .iter()
        .map(|&s| ScenarioEntry {
            name: s.name(),
            description: s.description(),
            parameters: s
                .parameters()
                .iter()
                .map(|&p| ParamEntry {
                    name: p.key(),
                    kind: p.kind(),
                    default: p.default_text(s),
                    description: p.help(),
                })
                .collect(),
        })
        .collect()
}

/// Scenario list with parameter schemas, as text or JSON.
pub fn list_scenarios(json: bool) -> String {
    if json {
        let mut s = serde_json::to_string_pretty(&catalogue()).expect("static data serializes");
        s.push('\n');
        return s;
    }
    let mut out = String::new();
    for s in catalogue() {
        out.push_str(&format!("{}\n    {}\n", s.name, s.description));
        for p in s.parameters {
            out.push_str(&format!(
                "    --{:<16} {:<18} default {:<24} {}\n",
                p.name.replace('_', "-"),
                p.kind,
                p.default,
                p.description
            ));
        }
    }
    out
}
