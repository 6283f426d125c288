//! Configuration-driven frontend for `bec3-core`.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;
pub mod verify;

use config::{Command, ConfigError, RunConfig};
use output::{num, Sink};
use serde_json::json;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] bec3_core::Error),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
    #[error("{failed} of {total} invariant checks failed")]
    Verify { failed: usize, total: usize },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            _ => EXIT_SOLVER,
        }
    }

    /// Machine-readable error record.
    pub fn record(&self) -> serde_json::Value {
        let (kind, field) = match self {
            RunError::Config(ConfigError::Io { .. }) => ("config_io", None),
            RunError::Config(ConfigError::Parse { .. }) => ("config_parse", None),
            RunError::Config(e @ ConfigError::Validation { .. }) => ("config_validation", e.field()),
            RunError::Solver(e) => (e.kind(), None),
            RunError::Io(_) => ("io", None),
            RunError::Verify { .. } => ("verify_failed", None),
        };
        let mut rec = json!({
            "status": "error",
            "exit_code": self.exit_code(),
            "kind": kind,
            "message": self.to_string(),
        });
        if let Some(f) = field {
            rec["field"] = json!(f);
        }
        if let RunError::Config(ConfigError::Parse { line, column, .. }) = self {
            rec["line"] = json!(line);
            rec["column"] = json!(column);
        }
        rec
    }
}

/// Runs `command` on a validated config and returns the written artifacts.
pub fn run(command: Command, cfg: &RunConfig) -> Result<Vec<PathBuf>, RunError> {
    cfg.validate(command)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.output.workers)
        .build()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    pool.install(|| {
        let mut sink = Sink::new(&cfg.output)?;
        let missing = || ConfigError::Validation { field: command.name().into(), message: "missing block".into() };
        match command {
            Command::Scatter => commands::scatter(cfg, cfg.scatter.as_ref().ok_or_else(missing)?, &mut sink)?,
            Command::Gp => commands::gp(cfg, cfg.gp.as_ref().ok_or_else(missing)?, &mut sink)?,
            Command::Bogoliubov => {
                commands::bogoliubov(cfg, cfg.bogoliubov.as_ref().ok_or_else(missing)?, &mut sink)?
            }
            Command::Expand => commands::expand(cfg.expand.as_ref().ok_or_else(missing)?, &mut sink)?,
            Command::Verify => {
                let checks = verify::run_suite(cfg.output.seed)?;
                let rows: Vec<Vec<String>> = checks
                    .iter()
                    .map(|c| {
                        vec![
                            c.name.clone(),
                            num(c.measured),
                            serde_json::to_value(c.comparison).unwrap().as_str().unwrap_or("").to_string(),
                            num(c.threshold),
                            c.passed.to_string(),
                        ]
                    })
                    .collect();
                sink.csv("verify.csv", &["check", "measured", "comparison", "threshold", "passed"], &rows)?;
                let failed = checks.iter().filter(|c| !c.passed).count();
                sink.json(
                    "verify.json",
                    &json!({
                        "command": "verify",
                        "seed": cfg.output.seed,
                        "passed": failed == 0,
                        "checks": checks,
                    }),
                )?;
                if failed > 0 {
                    return Err(RunError::Verify { failed, total: checks.len() });
                }
            }
        }
        Ok(sink.finish())
    })
}
