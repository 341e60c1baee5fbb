//! `dnls-lab`: configuration, dispatch and result files for the soliton
//! laboratory in `dnls-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;

use crate::config::{Command, FileConfig, Overrides, RunConfig};
use crate::error::{CliError, ExitCode};
use crate::output::{Artifacts, Manifest, MANIFEST};

#[derive(Debug, Parser)]
#[command(name = "dnls-lab", version, about = "Soliton instability laboratory for derivative NLS equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

impl Cli {
    /// Merge the config file (if any) with the flags.
    pub fn file_config(&self) -> Result<FileConfig, CliError> {
        let mut file = match &self.overrides.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        file.apply(&self.overrides);
        Ok(file)
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        self.file_config()?.resolve(self.command)
    }
}

/// Run one command and write its manifest; returns the process exit code.
pub fn execute(cli: &Cli) -> ExitCode {
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let file = cli.file_config();
    let out_dir = file.as_ref().ok().map(|f| f.out_dir(cli.command));
    let resolved = file.and_then(|f| f.resolve(cli.command));

    let mut artifacts = None;
    let outcome = match &resolved {
        Ok(cfg) => Artifacts::create(&cfg.out).and_then(|mut out| {
            let r = commands::run(cfg, &mut out);
            artifacts = Some(out);
            r
        }),
        Err(_) => Ok(()),
    };
    let failure = resolved.as_ref().err().or(outcome.as_ref().err());
    let code = failure.map_or(ExitCode::OK, CliError::exit_code);
    let error = failure.map(ToString::to_string);
    if let Some(e) = &error {
        eprintln!("dnls-lab {}: {e}", cli.command.name());
    }

    let manifest = Manifest {
        tool: "dnls-lab",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        config_file: cli.overrides.config.as_ref().map(|p| p.display().to_string()),
        config: resolved.as_ref().ok(),
        seed: resolved.as_ref().ok().map(|c| c.seed),
        status: match code {
            ExitCode::OK => "ok",
            ExitCode::CONFIG => "config-error",
            ExitCode::BLOW_UP => "blow-up",
            ExitCode::SOLVER => "solver-error",
            _ => "io-error",
        },
        exit_code: code.0,
        error,
        outputs: artifacts.as_ref().map(|a| a.written().to_vec()).unwrap_or_default(),
        started_unix,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    let target = match artifacts {
        Some(a) => Some(a),
        None => out_dir.and_then(|d| Artifacts::create(&d).ok()),
    };
    if let Some(mut a) = target {
        if let Err(e) = a.json(MANIFEST, &manifest) {
            eprintln!("dnls-lab: could not write manifest in {}: {e}", a.dir().display());
            if code == ExitCode::OK {
                return ExitCode::IO;
            }
        }
    }
    code
}
