//! `urbmag` command-line front end. Each subcommand writes plot-ready CSV
//! tables plus a `<command>.manifest.json` recording arguments, input
//! hashes and tool version.
//!
//! Exit status: 0 success, 2 usage error, 3 data error, 4 numerical failure.

mod args;
mod commands;
mod config;
mod manifest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;
use crate::output::Outputs;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(urbmag::Error),
}

impl From<urbmag::Error> for CliError {
    fn from(e: urbmag::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e.class() {
                urbmag::ErrorClass::Usage => 2,
                urbmag::ErrorClass::Data => 3,
                urbmag::ErrorClass::Numerical => 4,
            },
        }
    }
}

/// Global options shared by all commands.
pub struct Global {
    pub data: Option<PathBuf>,
    pub out: PathBuf,
    pub pattern: String,
}

/// Files a command read and wrote.
pub struct Run {
    pub outputs: Outputs,
    pub inputs: Vec<PathBuf>,
}

fn parse(argv: &[String]) -> Result<Cli, ExitCode> {
    Cli::try_parse_from(argv).map_err(|e| {
        let _ = e.print();
        ExitCode::from(if e.use_stderr() { 2 } else { 0 })
    })
}

fn main() -> ExitCode {
    let mut argv: Vec<String> = std::env::args().collect();
    let mut cli = match parse(&argv) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Some(cfg) = cli.config.clone() {
        argv = match config::merge(&argv, &cfg, cli.command.name()) {
            Ok(a) => a,
            Err(e) => {
                eprintln!("urbmag: {e}");
                return ExitCode::from(e.exit_code());
            }
        };
        cli = match parse(&argv) {
            Ok(c) => c,
            Err(code) => return code,
        };
    }
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(&cli, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("urbmag: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli, argv: &[String]) -> Result<(), CliError> {
    let g = Global {
        data: cli.data.clone(),
        out: cli.out.clone(),
        pattern: cli.pattern.clone(),
    };
    let run = commands::dispatch(&g, &cli.command)?;
    let parameters = serde_json::json!({
        "data": g.data,
        "out": g.out,
        "pattern": g.pattern,
        "command": &cli.command,
    });
    let path = manifest::Manifest::write(
        &run.outputs.dir,
        cli.command.name(),
        argv,
        parameters,
        &run.inputs,
        &run.outputs.files,
    )?;
    log::info!("wrote {}", path.display());
    Ok(())
}
