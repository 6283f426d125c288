use bec3::config::{load_config, Command, RunConfig};
use bec3::{run, RunError, EXIT_OK};
use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;

/// Scattering energies, Gross-Pitaevskii minimizers and excitation spectra.
#[derive(Parser)]
#[command(name = "bec3", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML configuration; `verify` runs without one.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| -> Result<Vec<PathBuf>, RunError> {
        let mut cfg = match &cli.config {
            Some(p) => load_config(p)?,
            None if cli.command == Command::Verify => bec3::config::parse_config("", "verify.toml".as_ref())?,
            None => {
                return Err(bec3::config::ConfigError::Validation {
                    field: "config".into(),
                    message: format!("`{}` needs --config", cli.command.name()),
                }
                .into())
            }
        };
        apply_overrides(&mut cfg, &cli);
        run(cli.command, &cfg)
    })();
    match result {
        Ok(paths) => {
            let files: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
            println!("{}", serde_json::json!({ "status": "ok", "command": cli.command.name(), "artifacts": files }));
            ExitCode::from(EXIT_OK as u8)
        }
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn apply_overrides(cfg: &mut RunConfig, cli: &Cli) {
    if let Some(o) = &cli.out {
        cfg.output.directory = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.output.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.output.workers = w;
    }
}
